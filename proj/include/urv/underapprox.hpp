// Copyright (c) urv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Random-branch under-approximation of ReLU over V-polytopes.
//
// Each coordinate is processed in turn. When the vertices straddle the plane
// x_d = 0, one branch is chosen: either the positive vertices are kept and
// every negative vertex is replaced by a crossing point on the plane (a
// subset of the top piece), or the projected negative vertices are kept and
// every positive vertex is replaced (a subset of the projected bottom piece).
// Replacement never adds vertices, so the vertex count cannot grow.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "urv/error.hpp"
#include "urv/geometry.hpp"
#include "urv/network.hpp"
#include "urv/rng.hpp"

namespace urv {

enum class DimOrder {
    Natural,       // 0..D-1, the unoptimized order
    RandomFirst,   // uniform random permutation per call
    MaximalFirst,  // descending sum of positive coordinates
};

enum class Pruning {
    None,                 // branch drawn at random
    TopPolytope,          // always keep the top piece
    CompleteTopPolytope,  // keep the top piece when the projected negatives lie inside P
};

struct StrategyConfig {
    DimOrder dim_order = DimOrder::RandomFirst;
    Pruning pruning = Pruning::TopPolytope;
    unsigned mua_restarts = 5;  // 1 disables multi-restart selection
    double branch_bias = 0.5;   // probability of keeping the top piece when unpruned

    void validate() const {
        if (mua_restarts < 1) throw ConfigError("mua_restarts must be at least 1");
        if (!(branch_bias >= 0.0 && branch_bias <= 1.0)) throw ConfigError("branch_bias must lie in [0, 1]");
    }

    /// The unoptimized algorithm: natural order, random branches, single selection.
    static StrategyConfig pure() { return {DimOrder::Natural, Pruning::None, 1, 0.5}; }
};

inline std::string to_string(DimOrder o) {
    switch (o) {
        case DimOrder::Natural: return "natural";
        case DimOrder::RandomFirst: return "rf";
        case DimOrder::MaximalFirst: return "mf";
    }
    return "?";
}

inline std::string to_string(Pruning p) {
    switch (p) {
        case Pruning::None: return "none";
        case Pruning::TopPolytope: return "tp";
        case Pruning::CompleteTopPolytope: return "ctp";
    }
    return "?";
}

/// Compact label such as "rf+tp+mua5"; "pure" for the unoptimized configuration.
inline std::string strategy_label(const StrategyConfig& cfg) {
    if (cfg.dim_order == DimOrder::Natural && cfg.pruning == Pruning::None && cfg.mua_restarts == 1) return "pure";
    return to_string(cfg.dim_order) + "+" + to_string(cfg.pruning) + "+mua" + std::to_string(cfg.mua_restarts);
}

/// Parses labels like "pure", "rf+tp", "mf+ctp+mua3", "natural+none". Missing parts keep `base`.
inline StrategyConfig parse_strategy_label(std::string_view label, StrategyConfig base = {}) {
    if (label == "pure") return StrategyConfig::pure();
    StrategyConfig cfg = base;
    std::size_t start = 0;
    while (start <= label.size()) {
        std::size_t plus = label.find('+', start);
        if (plus == std::string_view::npos) plus = label.size();
        const std::string_view part = label.substr(start, plus - start);
        if (part == "rf") cfg.dim_order = DimOrder::RandomFirst;
        else if (part == "mf") cfg.dim_order = DimOrder::MaximalFirst;
        else if (part == "natural") cfg.dim_order = DimOrder::Natural;
        else if (part == "tp") cfg.pruning = Pruning::TopPolytope;
        else if (part == "ctp") cfg.pruning = Pruning::CompleteTopPolytope;
        else if (part == "none") cfg.pruning = Pruning::None;
        else if (part.starts_with("mua") && part.size() > 3) {
            try {
                cfg.mua_restarts = static_cast<unsigned>(std::stoul(std::string(part.substr(3))));
            } catch (const std::exception&) {
                throw ConfigError("bad MUA count in strategy '" + std::string(label) + "'");
            }
        } else {
            throw ConfigError("unknown strategy component '" + std::string(part) + "'");
        }
        start = plus + 1;
    }
    cfg.validate();
    return cfg;
}

/// Working sets of one straddling dimension.
struct UnderApproxDimState {
    std::vector<Vector> positives;                 // vertices with x_d >= 0 (on-plane ones snapped to 0)
    std::vector<Vector> negatives;                 // vertices with x_d < 0
    std::vector<Vector> kept;                      // positives, or projections of negatives
    std::vector<std::vector<Vector>> candidates;   // crossing points, one set per replaced vertex
    std::vector<Vector> replacements;              // one chosen point per candidate set
    bool keep_top = true;
};

/// Per-call diagnostics.
struct UnderApproxTrace {
    std::vector<Index> order;
    std::vector<Index> vertex_counts;  // after each dimension step
    std::vector<bool> mixed;           // whether the step straddled the plane
    std::vector<bool> kept_top;        // branch taken (true for non-straddling steps)
};

/// Processing order of coordinates.
inline std::vector<Index> order_dimensions(const VPolytope& p, const StrategyConfig& cfg, Rng& rng) {
    std::vector<Index> order(static_cast<std::size_t>(p.dim()));
    std::iota(order.begin(), order.end(), Index{0});
    switch (cfg.dim_order) {
        case DimOrder::Natural:
            break;
        case DimOrder::RandomFirst:
            rng.shuffle(std::span<Index>(order));
            break;
        case DimOrder::MaximalFirst: {
            const Vector score = p.vertices().cwiseMax(0.0).colwise().sum().transpose();
            std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return score(a) > score(b); });
            break;
        }
    }
    return order;
}

namespace detail {

/// Crossing of [s, t] with x_d = 0; an endpoint already on the plane is its own crossing.
inline Vector crossing(const Vector& s, const Vector& t, Index d) {
    if (std::abs(s(d)) <= kSignEps) return project_to_plane(s, d);
    if (std::abs(t(d)) <= kSignEps) return project_to_plane(t, d);
    return segment_plane_intersection(s, t, d);
}

inline double min_distance(const Vector& c, const std::vector<Vector>& chosen) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : chosen) best = std::min(best, (c - r).norm());
    return best;
}

inline double spread(const std::vector<Vector>& points) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) total += (points[i] - points[j]).norm();
    }
    return total;
}

}  // namespace detail

/// Splits a straddling vertex set and computes the candidate crossings for
/// the chosen branch. Replacements are left empty.
inline UnderApproxDimState build_dim_state(const Matrix& vertices, Index d, bool keep_top) {
    UnderApproxDimState st;
    st.keep_top = keep_top;
    for (Index i = 0; i < vertices.rows(); ++i) {
        Vector v = vertices.row(i).transpose();
        if (v(d) < -kSignEps) {
            st.negatives.push_back(std::move(v));
        } else {
            if (v(d) <= kSignEps) v(d) = 0.0;
            st.positives.push_back(std::move(v));
        }
    }
    const auto& replaced = keep_top ? st.negatives : st.positives;
    const auto& opposite = keep_top ? st.positives : st.negatives;
    if (keep_top) {
        st.kept = st.positives;
    } else {
        for (const auto& n : st.negatives) st.kept.push_back(project_to_plane(n, d));
    }
    for (const auto& s : replaced) {
        std::vector<Vector> crossings;
        crossings.reserve(opposite.size());
        for (const auto& t : opposite) crossings.push_back(detail::crossing(s, t, d));
        st.candidates.push_back(std::move(crossings));
    }
    return st;
}

/// Greedy choice: a uniform pick from the first candidate set, then from each
/// later set the point maximizing its minimum distance to those already chosen
/// (lowest index on ties).
inline std::vector<Vector> select_replacements(const std::vector<std::vector<Vector>>& candidates, Rng& rng) {
    std::vector<Vector> chosen;
    chosen.reserve(candidates.size());
    for (const auto& set : candidates) {
        if (chosen.empty()) {
            chosen.push_back(set[rng.index(set.size())]);
            continue;
        }
        std::size_t best = 0;
        double best_dist = -1.0;
        for (std::size_t i = 0; i < set.size(); ++i) {
            const double dist = detail::min_distance(set[i], chosen);
            if (dist > best_dist) {
                best_dist = dist;
                best = i;
            }
        }
        chosen.push_back(set[best]);
    }
    return chosen;
}

/// Reruns the greedy choice `restarts` times and keeps the selection with the
/// largest sum of pairwise distances (first one on ties).
inline std::vector<Vector> select_replacements_mua(const std::vector<std::vector<Vector>>& candidates,
                                                   unsigned restarts, Rng& rng) {
    std::vector<Vector> best = select_replacements(candidates, rng);
    double best_spread = detail::spread(best);
    for (unsigned k = 1; k < restarts; ++k) {
        std::vector<Vector> trial = select_replacements(candidates, rng);
        const double s = detail::spread(trial);
        if (s > best_spread) {
            best_spread = s;
            best = std::move(trial);
        }
    }
    return best;
}

/// A polytope contained in ReLU(p) with no more vertices than p.
inline VPolytope relu_under_approx(const VPolytope& p, const StrategyConfig& cfg, Rng& rng,
                                   UnderApproxTrace* trace = nullptr) {
    cfg.validate();
    const std::vector<Index> order = order_dimensions(p, cfg, rng);
    if (trace) *trace = UnderApproxTrace{order, {}, {}, {}};

    Matrix current = p.vertices();
    for (const Index d : order) {
        bool any_neg = false;
        bool any_pos = false;
        for (Index i = 0; i < current.rows(); ++i) {
            any_neg = any_neg || current(i, d) < -kSignEps;
            any_pos = any_pos || current(i, d) > kSignEps;
        }

        bool mixed = any_neg && any_pos;
        bool keep_top = true;
        if (!mixed) {
            if (any_neg) {
                current.col(d).setZero();
                current = dedupe_rows(current);
            } else {
                for (Index i = 0; i < current.rows(); ++i) {
                    if (current(i, d) <= kSignEps) current(i, d) = 0.0;
                }
            }
        } else {
            switch (cfg.pruning) {
                case Pruning::TopPolytope:
                    keep_top = true;
                    break;
                case Pruning::CompleteTopPolytope: {
                    const Vector lo = current.colwise().minCoeff().transpose();
                    const Vector hi = current.colwise().maxCoeff().transpose();
                    bool inside = true;
                    for (Index i = 0; i < current.rows() && inside; ++i) {
                        if (current(i, d) >= -kSignEps) continue;
                        Vector proj = current.row(i).transpose();
                        proj(d) = 0.0;
                        inside = detail::hull_contains(current, lo, hi, proj, kLpTol);
                    }
                    keep_top = inside ? true : rng.bernoulli(cfg.branch_bias);
                    break;
                }
                case Pruning::None:
                    keep_top = rng.bernoulli(cfg.branch_bias);
                    break;
            }
            UnderApproxDimState st = build_dim_state(current, d, keep_top);
            st.replacements = select_replacements_mua(st.candidates, cfg.mua_restarts, rng);
            Matrix next(static_cast<Index>(st.kept.size() + st.replacements.size()), current.cols());
            Index r = 0;
            for (const auto& v : st.kept) next.row(r++) = v.transpose();
            for (const auto& v : st.replacements) next.row(r++) = v.transpose();
            current = dedupe_rows(next);
        }
        if (trace) {
            trace->vertex_counts.push_back(current.rows());
            trace->mixed.push_back(mixed);
            trace->kept_top.push_back(keep_top);
        }
    }
    return VPolytope(current);
}

/// One epoch: alternating affine maps and ReLU under-approximation through
/// every layer. `should_stop` is polled between layers; a stop yields nullopt.
inline std::optional<VPolytope> propagate_under(const VPolytope& input, const Network& net,
                                                const StrategyConfig& cfg, Rng& rng,
                                                const std::function<bool()>& should_stop) {
    if (input.dim() != net.input_dim()) throw ConfigError("input polytope dimension does not match network");
    VPolytope current = input;
    for (const Layer& layer : net.layers()) {
        if (should_stop && should_stop()) return std::nullopt;
        current = affine_map(current, layer.weights, layer.bias);
        if (layer.activation == Activation::ReLU) current = relu_under_approx(current, cfg, rng);
    }
    return current;
}

inline VPolytope propagate_under(const VPolytope& input, const Network& net, const StrategyConfig& cfg, Rng& rng) {
    return *propagate_under(input, net, cfg, rng, {});
}

}  // namespace urv
