// Copyright (c) urv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Test-side generators and independent oracles. Nothing here calls the
// library's membership or split code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "urv/urv.hpp"

namespace urv::testkit {

inline Vector relu(const Vector& x) { return x.cwiseMax(0.0); }

inline Vector vec(std::initializer_list<double> values) {
    Vector v(static_cast<Index>(values.size()));
    Index i = 0;
    for (double x : values) v(i++) = x;
    return v;
}

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    const Index r = static_cast<Index>(rows.size());
    const Index c = static_cast<Index>(rows.begin()->size());
    Matrix m(r, c);
    Index i = 0;
    for (const auto& row : rows) {
        Index j = 0;
        for (double x : row) m(i, j++) = x;
        ++i;
    }
    return m;
}

/// m points uniform in [-scale, scale]^d.
inline Matrix random_points(Rng& rng, Index m, Index d, double scale = 1.0) {
    Matrix out(m, d);
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < d; ++j) out(i, j) = rng.uniform(-scale, scale);
    }
    return out;
}

/// Random point of conv(rows of V): Dirichlet-like weights from exponentials.
inline Vector random_hull_point(Rng& rng, const Matrix& V) {
    Vector w(V.rows());
    for (Index i = 0; i < V.rows(); ++i) w(i) = -std::log(1.0 - rng.uniform());
    w /= w.sum();
    return V.transpose() * w;
}

// ---------------------------------------------------------------------------
// Planar hull oracle (Andrew's monotone chain), independent of any LP.

inline double cross2(const Vector& o, const Vector& a, const Vector& b) {
    return (a(0) - o(0)) * (b(1) - o(1)) - (a(1) - o(1)) * (b(0) - o(0));
}

inline std::vector<Vector> hull2d(const Matrix& V) {
    std::vector<Vector> pts;
    for (Index i = 0; i < V.rows(); ++i) pts.push_back(V.row(i).transpose());
    std::sort(pts.begin(), pts.end(), [](const Vector& a, const Vector& b) {
        return a(0) < b(0) || (a(0) == b(0) && a(1) < b(1));
    });
    if (pts.size() < 3) return pts;
    std::vector<Vector> h(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross2(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
        while (k >= t && cross2(h[k - 2], h[k - 1], pts[i - 1]) <= 0) --k;
        h[k++] = pts[i - 1];
    }
    h.resize(k - 1);
    return h;
}

inline double segment_distance(const Vector& a, const Vector& b, const Vector& x) {
    const Vector ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0 ? std::clamp((x - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (a + t * ab - x).norm();
}

/// Euclidean distance from x to conv(rows of V) in the plane (0 inside).
inline double hull2d_distance(const Matrix& V, const Vector& x) {
    const auto h = hull2d(V);
    if (h.size() == 1) return (h[0] - x).norm();
    if (h.size() == 2) return segment_distance(h[0], h[1], x);
    bool inside = true;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (cross2(h[i], h[(i + 1) % h.size()], x) < 0) inside = false;
    }
    if (inside) return 0.0;
    double best = INFINITY;
    for (std::size_t i = 0; i < h.size(); ++i) best = std::min(best, segment_distance(h[i], h[(i + 1) % h.size()], x));
    return best;
}

// ---------------------------------------------------------------------------
// Membership in the ReLU image of conv(V), posed directly as an LP over the
// preimage: some lambda in the simplex with (V^T lambda)_d = y_d where y_d > 0
// and (V^T lambda)_d <= 0 where y_d = 0. Independent of the split machinery.
// With only >= 0, just that coordinate is rectified (the single-axis ReLU_d).

inline bool in_relu_image(const Matrix& V, const Vector& y, double tol = 1e-6, Index only = -1) {
    const Index m = V.rows();
    const Index d = V.cols();
    auto rectified = [&](Index j) { return only < 0 || j == only; };
    for (Index j = 0; j < d; ++j) {
        if (rectified(j) && y(j) < -tol) return false;
    }
    // Variables: lambda (m), then slack s+/s- per coordinate to absorb tol.
    lp::Problem prob;
    prob.rows = Matrix::Zero(d + 1, m + 2 * d);
    prob.relations.assign(static_cast<std::size_t>(d + 1), lp::Relation::Equal);
    prob.rhs = Vector::Zero(d + 1);
    for (Index j = 0; j < d; ++j) {
        prob.rows.block(j, 0, 1, m) = V.col(j).transpose();
        prob.rows(j, m + j) = 1.0;
        prob.rows(j, m + d + j) = -1.0;
        if (!rectified(j) || y(j) > tol) {
            prob.rhs(j) = y(j);
        } else {
            // (V^T lambda)_j <= 0, residual only counts the positive excess
            prob.relations[static_cast<std::size_t>(j)] = lp::Relation::LessEq;
            prob.rows(j, m + j) = 0.0;
        }
    }
    prob.rows.block(d, 0, 1, m).setOnes();
    prob.rhs(d) = 1.0;
    prob.objective = Vector::Zero(m + 2 * d);
    prob.objective.tail(2 * d).setOnes();
    const auto sol = lp::solve(prob);
    return sol.status == lp::Status::Optimal && sol.objective <= tol;
}

// ---------------------------------------------------------------------------
// Tiny networks for the verifier criteria.

inline Network random_tiny_net(Rng& rng, Index inputs, std::vector<Index> hidden, Index outputs) {
    std::vector<Layer> layers;
    Index prev = inputs;
    for (Index h : hidden) {
        layers.push_back({random_points(rng, h, prev), random_points(rng, h, 1, 0.5).col(0), Activation::ReLU});
        prev = h;
    }
    layers.push_back({random_points(rng, outputs, prev), random_points(rng, outputs, 1, 0.5).col(0),
                      Activation::Identity});
    return Network(std::move(layers));
}

/// Fraction of uniform box samples whose output violates the condition.
inline double violating_fraction(const Network& net, const InputRegion& box, const OutputCondition& cond,
                                 std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::size_t bad = 0;
    for (std::size_t s = 0; s < count; ++s) {
        Vector x(box.dim());
        for (Index i = 0; i < box.dim(); ++i) x(i) = rng.uniform(box.lower(i), box.upper(i));
        if (!cond.satisfied(evaluate(net, x), 0.0)) ++bad;
    }
    return static_cast<double>(bad) / static_cast<double>(count);
}

}  // namespace urv::testkit
