// Copyright (c) urv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Vertex-represented (V-) polytopes: affine images, coordinate-plane
// projections and intersections, LP membership, redundancy elimination, and
// the exact per-dimension ReLU split used as the reachability oracle.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "urv/error.hpp"
#include "urv/lp.hpp"

namespace urv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Coordinates within this band around zero are treated as lying on the plane.
inline constexpr double kSignEps = 1e-9;
/// L-infinity distance under which two vertices are the same point.
inline constexpr double kDupEps = 1e-9;
/// Default L1 tolerance of LP membership.
inline constexpr double kLpTol = 1e-6;
/// Tolerance used when deciding that a vertex is redundant.
inline constexpr double kRedundancyTol = 1e-9;
/// Default member cap of the exact ReLU image.
inline constexpr std::size_t kExactReluCap = 4096;

namespace detail {

inline bool rows_close(const Matrix& m, Index a, Index b, double eps) {
    return (m.row(a) - m.row(b)).cwiseAbs().maxCoeff() <= eps;
}

}  // namespace detail

/// Drops rows within `eps` (L-infinity) of an earlier row; keeps first occurrences in order.
inline Matrix dedupe_rows(const Matrix& points, double eps = kDupEps) {
    const Index m = points.rows();
    if (m <= 1) return points;
    std::vector<Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return points(a, 0) < points(b, 0); });
    std::vector<bool> dropped(static_cast<std::size_t>(m), false);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Index a = order[i];
        if (dropped[static_cast<std::size_t>(a)]) continue;
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            const Index b = order[j];
            if (points(b, 0) - points(a, 0) > eps) break;
            if (dropped[static_cast<std::size_t>(b)]) continue;
            if (detail::rows_close(points, a, b, eps)) {
                // Keep whichever came first in the input.
                if (b < a) {
                    dropped[static_cast<std::size_t>(a)] = true;
                    break;
                }
                dropped[static_cast<std::size_t>(b)] = true;
            }
        }
    }
    Index kept = 0;
    for (bool d : dropped) kept += d ? 0 : 1;
    Matrix out(kept, points.cols());
    Index r = 0;
    for (Index i = 0; i < m; ++i) {
        if (!dropped[static_cast<std::size_t>(i)]) out.row(r++) = points.row(i);
    }
    return out;
}

/// Convex polytope given by its vertex matrix; rows are points.
/// Lower-dimensional polytopes (segments, single points) are valid.
class VPolytope {
public:
    /// Validates finiteness and merges duplicate rows.
    explicit VPolytope(const Matrix& vertices) {
        if (vertices.rows() < 1 || vertices.cols() < 1) {
            throw ConfigError("polytope needs at least one vertex and one dimension");
        }
        if (!vertices.allFinite()) throw ConfigError("polytope vertices must be finite");
        vertices_ = dedupe_rows(vertices);
        lower_ = vertices_.colwise().minCoeff().transpose();
        upper_ = vertices_.colwise().maxCoeff().transpose();
    }

    static VPolytope from_points(const std::vector<Vector>& points) {
        if (points.empty()) throw ConfigError("polytope needs at least one vertex");
        Matrix m(static_cast<Index>(points.size()), points.front().size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (points[i].size() != m.cols()) throw ConfigError("points of differing dimension");
            m.row(static_cast<Index>(i)) = points[i].transpose();
        }
        return VPolytope(m);
    }

    const Matrix& vertices() const noexcept { return vertices_; }
    Index size() const noexcept { return vertices_.rows(); }
    Index dim() const noexcept { return vertices_.cols(); }
    Vector vertex(Index i) const { return vertices_.row(i).transpose(); }

    /// Axis-aligned bounding box.
    const Vector& lower() const noexcept { return lower_; }
    const Vector& upper() const noexcept { return upper_; }

private:
    Matrix vertices_;
    Vector lower_;
    Vector upper_;
};

/// Ordered union of polytopes sharing one dimension.
class PolytopeSet {
public:
    PolytopeSet() = default;
    explicit PolytopeSet(std::vector<VPolytope> members) {
        for (auto& m : members) add(std::move(m));
    }

    void add(VPolytope p) {
        if (!members_.empty() && p.dim() != members_.front().dim()) {
            throw ConfigError("polytope set members must share one dimension");
        }
        members_.push_back(std::move(p));
    }

    const std::vector<VPolytope>& members() const noexcept { return members_; }
    std::size_t size() const noexcept { return members_.size(); }
    bool empty() const noexcept { return members_.empty(); }
    Index dim() const { return members_.empty() ? 0 : members_.front().dim(); }

    auto begin() const { return members_.begin(); }
    auto end() const { return members_.end(); }

    /// All member vertices stacked into one matrix.
    Matrix stacked() const {
        Index rows = 0;
        for (const auto& m : members_) rows += m.size();
        Matrix out(rows, dim());
        Index r = 0;
        for (const auto& m : members_) {
            out.middleRows(r, m.size()) = m.vertices();
            r += m.size();
        }
        return out;
    }

private:
    std::vector<VPolytope> members_;
};

/// The two pieces of ReLU_d(P): the part above the plane x_d = 0 and the
/// projection of the part below it.
struct SplitResult {
    std::optional<VPolytope> top;
    std::optional<VPolytope> bottom;
};

// ---------------------------------------------------------------------------
// Membership

/// Smallest L1 residual |V^T lambda - x| over the probability simplex.
/// Zero iff x lies in conv(rows of V).
inline double hull_residual(const Matrix& vertices, const Vector& x) {
    const Index m = vertices.rows();
    const Index d = vertices.cols();
    lp::Problem prob;
    prob.rows = Matrix::Zero(d + 1, m + 2 * d);
    prob.rows.topLeftCorner(d, m) = vertices.transpose();
    prob.rows.block(0, m, d, d) = Matrix::Identity(d, d);
    prob.rows.block(0, m + d, d, d) = -Matrix::Identity(d, d);
    prob.rows.block(d, 0, 1, m).setOnes();
    prob.relations.assign(static_cast<std::size_t>(d + 1), lp::Relation::Equal);
    prob.rhs.resize(d + 1);
    prob.rhs.head(d) = x;
    prob.rhs(d) = 1.0;
    prob.objective = Vector::Zero(m + 2 * d);
    prob.objective.tail(2 * d).setOnes();

    const lp::Solution sol = lp::solve(prob);
    if (sol.status != lp::Status::Optimal) {
        throw NumericalError("membership LP did not reach an optimum");
    }
    return std::max(0.0, sol.objective);
}

namespace detail {

/// Membership in conv(vertices) with bounding-box and vertex shortcuts.
inline bool hull_contains(const Matrix& vertices, const Vector& lower, const Vector& upper,
                          const Vector& x, double tol) {
    double outside = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
        outside += std::max(0.0, lower(i) - x(i)) + std::max(0.0, x(i) - upper(i));
    }
    if (outside > tol) return false;
    for (Index r = 0; r < vertices.rows(); ++r) {
        if ((vertices.row(r).transpose() - x).lpNorm<1>() <= tol) return true;
    }
    if (vertices.rows() == 1) return false;
    return hull_residual(vertices, x) <= tol;
}

}  // namespace detail

/// True iff x lies in the polytope within L1 tolerance `tol`.
inline bool contains_point(const VPolytope& p, const Vector& x, double tol = kLpTol) {
    if (x.size() != p.dim()) throw ConfigError("point dimension does not match polytope");
    return detail::hull_contains(p.vertices(), p.lower(), p.upper(), x, tol);
}

namespace detail {

/// Rows of `points` that span their convex hull. Points are visited far-first
/// from the centroid and kept only when outside the hull of those kept so far,
/// so each LP is over the (usually small) running hull rather than all points.
inline Matrix hull_vertex_rows(const Matrix& points, double tol) {
    const Index n = points.rows();
    if (n <= 2) return points;
    const Vector centroid = points.colwise().mean().transpose();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::vector<double> dist(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) dist[static_cast<std::size_t>(i)] = (points.row(i).transpose() - centroid).norm();
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return dist[static_cast<std::size_t>(a)] > dist[static_cast<std::size_t>(b)];
    });
    auto reduce = [&](const std::vector<Index>& candidates, bool against_all) {
        std::vector<Index> kept;
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            std::vector<Index> basis = kept;
            if (against_all) basis.insert(basis.end(), candidates.begin() + static_cast<std::ptrdiff_t>(k) + 1, candidates.end());
            if (basis.empty()) {
                kept.push_back(candidates[k]);
                continue;
            }
            Matrix V(static_cast<Index>(basis.size()), points.cols());
            for (std::size_t r = 0; r < basis.size(); ++r) V.row(static_cast<Index>(r)) = points.row(basis[r]);
            const Vector lo = V.colwise().minCoeff().transpose();
            const Vector hi = V.colwise().maxCoeff().transpose();
            if (!hull_contains(V, lo, hi, points.row(candidates[k]).transpose(), tol)) kept.push_back(candidates[k]);
        }
        return kept;
    };
    // First pass screens against the running hull; the second drops early
    // picks that later points swallowed.
    const std::vector<Index> screened = reduce(order, false);
    const std::vector<Index> final_rows = reduce(screened, true);
    Matrix out(static_cast<Index>(final_rows.size()), points.cols());
    for (std::size_t r = 0; r < final_rows.size(); ++r) out.row(static_cast<Index>(r)) = points.row(final_rows[r]);
    return out;
}

}  // namespace detail

/// Membership oracle for the convex hull of a union, built once and queried often.
class HullMembership {
public:
    explicit HullMembership(const PolytopeSet& set) {
        if (set.empty()) throw ConfigError("convex hull of an empty union");
        vertices_ = detail::hull_vertex_rows(dedupe_rows(set.stacked()), kRedundancyTol);
        lower_ = vertices_.colwise().minCoeff().transpose();
        upper_ = vertices_.colwise().maxCoeff().transpose();
    }

    bool contains(const Vector& x, double tol = kLpTol) const {
        if (x.size() != vertices_.cols()) throw ConfigError("point dimension does not match hull");
        return detail::hull_contains(vertices_, lower_, upper_, x, tol);
    }

    Index vertex_count() const noexcept { return vertices_.rows(); }

private:
    Matrix vertices_;
    Vector lower_;
    Vector upper_;
};

/// True iff x lies in conv(union of all members), decided by one LP over the stacked vertices.
inline bool convex_union_contains(const PolytopeSet& archive, const Vector& x, double tol = kLpTol) {
    return HullMembership(archive).contains(x, tol);
}

// ---------------------------------------------------------------------------
// Affine maps and coordinate planes

/// Image of p under x -> weights * x + bias, applied vertex by vertex.
inline VPolytope affine_map(const VPolytope& p, const Matrix& weights, const Vector& bias) {
    if (weights.cols() != p.dim()) throw ConfigError("weight columns do not match polytope dimension");
    if (bias.size() != weights.rows()) throw ConfigError("bias length does not match weight rows");
    Matrix out = p.vertices() * weights.transpose();
    out.rowwise() += bias.transpose();
    return VPolytope(out);
}

/// Copy of `point` with coordinate d set to zero.
inline Vector project_to_plane(const Vector& point, Index d) {
    if (d < 0 || d >= point.size()) throw ConfigError("dimension index out of range");
    Vector out = point;
    out(d) = 0.0;
    return out;
}

/// The point of segment [s, t] whose coordinate d is zero. Endpoints must lie
/// strictly on opposite sides of the plane.
inline Vector segment_plane_intersection(const Vector& s, const Vector& t, Index d) {
    if (s.size() != t.size()) throw ConfigError("segment endpoints of differing dimension");
    if (d < 0 || d >= s.size()) throw ConfigError("dimension index out of range");
    const double sd = s(d);
    const double td = t(d);
    const bool opposite = (sd < -kSignEps && td > kSignEps) || (sd > kSignEps && td < -kSignEps);
    if (!opposite) throw DegenerateSegment("segment does not cross the coordinate plane");
    const double lambda = sd / (sd - td);
    Vector out = s + lambda * (t - s);
    // Keep the point inside the segment's bounding box despite rounding.
    for (Index i = 0; i < out.size(); ++i) {
        out(i) = std::clamp(out(i), std::min(s(i), t(i)), std::max(s(i), t(i)));
    }
    out(d) = 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Redundancy and the exact ReLU image

/// Subset of p's vertices spanning the same hull, with no vertex inside the hull of the others.
inline VPolytope remove_redundant_vertices(const VPolytope& p) {
    const Index m = p.size();
    if (m <= 2) return p;
    std::vector<bool> keep(static_cast<std::size_t>(m), true);
    Index kept = m;
    for (Index i = 0; i < m; ++i) {
        if (kept <= 1) break;
        Matrix others(kept - 1, p.dim());
        Index r = 0;
        for (Index j = 0; j < m; ++j) {
            if (j != i && keep[static_cast<std::size_t>(j)]) others.row(r++) = p.vertices().row(j);
        }
        const Vector lo = others.colwise().minCoeff().transpose();
        const Vector hi = others.colwise().maxCoeff().transpose();
        if (detail::hull_contains(others, lo, hi, p.vertex(i), kRedundancyTol)) {
            keep[static_cast<std::size_t>(i)] = false;
            --kept;
        }
    }
    Matrix out(kept, p.dim());
    Index r = 0;
    for (Index i = 0; i < m; ++i) {
        if (keep[static_cast<std::size_t>(i)]) out.row(r++) = p.vertices().row(i);
    }
    return VPolytope(out);
}

/// Exact ReLU along one coordinate: ReLU_d(p) = top ∪ bottom.
inline SplitResult exact_relu_split(const VPolytope& p, Index d) {
    if (d < 0 || d >= p.dim()) throw ConfigError("dimension index out of range");
    std::vector<Vector> positives, negatives, on_plane;
    for (Index i = 0; i < p.size(); ++i) {
        Vector v = p.vertex(i);
        if (v(d) > kSignEps) {
            positives.push_back(std::move(v));
        } else if (v(d) < -kSignEps) {
            negatives.push_back(std::move(v));
        } else {
            v(d) = 0.0;
            on_plane.push_back(std::move(v));
        }
    }

    SplitResult out;
    if (negatives.empty()) {
        Matrix clamped = p.vertices();
        clamped.col(d) = clamped.col(d).cwiseMax(0.0);
        for (Index i = 0; i < clamped.rows(); ++i) {
            if (std::abs(clamped(i, d)) <= kSignEps) clamped(i, d) = 0.0;
        }
        out.top = VPolytope(clamped);
        return out;
    }
    if (positives.empty()) {
        Matrix projected = p.vertices();
        projected.col(d).setZero();
        out.bottom = VPolytope(projected);
        return out;
    }

    // Every edge crossing the plane joins a positive and a negative vertex, so
    // all pairwise crossings together with on-plane vertices cover P ∩ H_d.
    std::vector<Vector> cross = on_plane;
    for (const auto& n : negatives) {
        for (const auto& q : positives) cross.push_back(segment_plane_intersection(n, q, d));
    }
    std::vector<Vector> top = positives;
    top.insert(top.end(), cross.begin(), cross.end());
    std::vector<Vector> bottom;
    for (const auto& n : negatives) bottom.push_back(project_to_plane(n, d));
    bottom.insert(bottom.end(), cross.begin(), cross.end());
    out.top = remove_redundant_vertices(VPolytope::from_points(top));
    out.bottom = remove_redundant_vertices(VPolytope::from_points(bottom));
    return out;
}

namespace detail {

inline bool same_vertex_set(const VPolytope& a, const VPolytope& b) {
    if (a.size() != b.size() || a.dim() != b.dim()) return false;
    for (Index i = 0; i < a.size(); ++i) {
        bool found = false;
        for (Index j = 0; j < b.size() && !found; ++j) {
            found = (a.vertices().row(i) - b.vertices().row(j)).cwiseAbs().maxCoeff() <= kDupEps;
        }
        if (!found) return false;
    }
    return true;
}

}  // namespace detail

/// Exact image ReLU(p) as a union, folding the per-dimension split over every
/// coordinate and keeping both branches.
inline PolytopeSet exact_relu(const VPolytope& p, std::size_t cap = kExactReluCap) {
    std::vector<VPolytope> current{p};
    for (Index d = 0; d < p.dim(); ++d) {
        std::vector<VPolytope> next;
        auto push = [&](VPolytope q) {
            for (const auto& existing : next) {
                if (detail::same_vertex_set(existing, q)) return;
            }
            next.push_back(std::move(q));
            if (next.size() > cap) {
                throw BudgetExceeded("exact ReLU image exceeds " + std::to_string(cap) + " polytopes");
            }
        };
        for (const auto& member : current) {
            SplitResult split = exact_relu_split(member, d);
            if (split.top) push(std::move(*split.top));
            if (split.bottom) push(std::move(*split.bottom));
        }
        current = std::move(next);
    }
    return PolytopeSet(std::move(current));
}

/// True iff x lies in some member of the set.
inline bool union_contains(const PolytopeSet& set, const Vector& x, double tol = kLpTol) {
    for (const auto& member : set) {
        if (contains_point(member, x, tol)) return true;
    }
    return false;
}

}  // namespace urv
