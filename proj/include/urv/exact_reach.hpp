// Copyright (c) urv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "urv/geometry.hpp"
#include "urv/network.hpp"

namespace urv {

/// Exact reachable output set of a network over a polytope, as a union.
/// Exponential in the number of neurons; meant for small networks.
inline PolytopeSet exact_reach(const VPolytope& input, const Network& net, std::size_t cap = kExactReluCap) {
    if (input.dim() != net.input_dim()) throw ConfigError("input polytope dimension does not match network");
    std::vector<VPolytope> current{input};
    for (const Layer& layer : net.layers()) {
        std::vector<VPolytope> next;
        for (const auto& member : current) {
            VPolytope image = affine_map(member, layer.weights, layer.bias);
            if (layer.activation != Activation::ReLU) {
                next.push_back(std::move(image));
                continue;
            }
            for (const auto& piece : exact_relu(image, cap)) {
                bool duplicate = false;
                for (const auto& existing : next) {
                    if (detail::same_vertex_set(existing, piece)) {
                        duplicate = true;
                        break;
                    }
                }
                if (!duplicate) next.push_back(piece);
            }
            if (next.size() > cap) {
                throw BudgetExceeded("exact reachable set exceeds " + std::to_string(cap) + " polytopes");
            }
        }
        current = std::move(next);
    }
    return PolytopeSet(std::move(current));
}

}  // namespace urv
