// Copyright (c) urv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense two-phase tableau simplex for the small feasibility problems used by
// polytope membership and violation search. Variables are non-negative.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace urv::lp {

enum class Relation { LessEq, Equal, GreaterEq };

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

/// minimize objective·x  subject to  rows[i]·x (relation[i]) rhs[i],  x >= 0.
struct Problem {
    Eigen::MatrixXd rows;
    std::vector<Relation> relations;
    Eigen::VectorXd rhs;
    Eigen::VectorXd objective;
};

struct Solution {
    Status status = Status::Infeasible;
    double objective = std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd x;
};

struct Options {
    double pivot_eps = 1e-11;
    double cost_eps = 1e-11;
    /// Phase-one residual (relative to 1 + max|rhs|) above which the problem is infeasible.
    double feasibility_eps = 1e-9;
    std::size_t max_iterations = 0;  // 0: derived from problem size
};

namespace detail {

class Tableau {
public:
    Tableau(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_((rows + 1) * (cols + 1), 0.0), basis_(rows, 0) {}

    double& at(std::size_t r, std::size_t c) { return data_[r * (cols_ + 1) + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * (cols_ + 1) + c]; }
    double& rhs(std::size_t r) { return at(r, cols_); }
    double& cost(std::size_t c) { return at(rows_, c); }
    double& neg_objective() { return at(rows_, cols_); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::vector<std::size_t>& basis() { return basis_; }

    void pivot(std::size_t pr, std::size_t pc) {
        const std::size_t width = cols_ + 1;
        double* prow = &data_[pr * width];
        const double inv = 1.0 / prow[pc];
        for (std::size_t c = 0; c < width; ++c) prow[c] *= inv;
        prow[pc] = 1.0;
        for (std::size_t r = 0; r <= rows_; ++r) {
            if (r == pr) continue;
            double* row = &data_[r * width];
            const double f = row[pc];
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < width; ++c) row[c] -= f * prow[c];
            row[pc] = 0.0;
        }
        basis_[pr] = pc;
    }

    /// Runs simplex iterations over columns [0, allowed). Returns the terminal status.
    Status optimize(std::size_t allowed, const Options& opt, std::size_t max_iter) {
        std::size_t degenerate_streak = 0;
        const std::size_t bland_after = 2 * (rows_ + cols_) + 16;
        for (std::size_t iter = 0; iter < max_iter; ++iter) {
            const bool bland = degenerate_streak > bland_after;
            std::size_t enter = cols_;
            double best = -opt.cost_eps;
            for (std::size_t c = 0; c < allowed; ++c) {
                const double d = cost(c);
                if (d < best) {
                    enter = c;
                    if (bland) break;
                    best = d;
                }
            }
            if (enter == cols_) return Status::Optimal;

            std::size_t leave = rows_;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < rows_; ++r) {
                const double a = at(r, enter);
                if (a <= opt.pivot_eps) continue;
                const double ratio = std::max(0.0, rhs(r)) / a;
                if (ratio < best_ratio - 1e-14 ||
                    (ratio <= best_ratio + 1e-14 && leave != rows_ && basis_[r] < basis_[leave])) {
                    best_ratio = ratio;
                    leave = r;
                }
            }
            if (leave == rows_) return Status::Unbounded;
            degenerate_streak = best_ratio <= 1e-14 ? degenerate_streak + 1 : 0;
            pivot(leave, enter);
        }
        return Status::IterationLimit;
    }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
    std::vector<std::size_t> basis_;
};

}  // namespace detail

inline Solution solve(const Problem& problem, const Options& opt = {}) {
    const std::size_t m = static_cast<std::size_t>(problem.rows.rows());
    const std::size_t n = static_cast<std::size_t>(problem.rows.cols());

    std::size_t slack_count = 0;
    for (auto rel : problem.relations) {
        if (rel != Relation::Equal) ++slack_count;
    }

    // Decide per row whether its slack can start basic or an artificial is needed.
    std::vector<double> sign(m, 1.0);
    std::vector<long> slack_col(m, -1);
    std::vector<bool> needs_artificial(m, true);
    std::size_t next_slack = n;
    for (std::size_t i = 0; i < m; ++i) {
        if (problem.rhs(static_cast<Eigen::Index>(i)) < 0.0) sign[i] = -1.0;
        if (problem.relations[i] == Relation::Equal) continue;
        slack_col[i] = static_cast<long>(next_slack++);
        const double slack_coeff = (problem.relations[i] == Relation::LessEq ? 1.0 : -1.0) * sign[i];
        if (slack_coeff > 0.0) needs_artificial[i] = false;
    }
    std::size_t artificial_count = 0;
    for (bool a : needs_artificial) artificial_count += a ? 1 : 0;

    const std::size_t first_artificial = n + slack_count;
    const std::size_t total = first_artificial + artificial_count;
    detail::Tableau tab(m, total);

    double rhs_scale = 1.0;
    std::size_t next_artificial = first_artificial;
    for (std::size_t i = 0; i < m; ++i) {
        const auto ei = static_cast<Eigen::Index>(i);
        for (std::size_t j = 0; j < n; ++j) tab.at(i, j) = sign[i] * problem.rows(ei, static_cast<Eigen::Index>(j));
        tab.rhs(i) = sign[i] * problem.rhs(ei);
        rhs_scale = std::max(rhs_scale, 1.0 + std::abs(problem.rhs(ei)));
        if (slack_col[i] >= 0) {
            const auto sc = static_cast<std::size_t>(slack_col[i]);
            tab.at(i, sc) = (problem.relations[i] == Relation::LessEq ? 1.0 : -1.0) * sign[i];
            if (!needs_artificial[i]) tab.basis()[i] = sc;
        }
        if (needs_artificial[i]) {
            tab.at(i, next_artificial) = 1.0;
            tab.basis()[i] = next_artificial++;
        }
    }

    const std::size_t max_iter = opt.max_iterations ? opt.max_iterations : 50 * (m + total) + 1000;
    Solution out;

    if (artificial_count > 0) {
        for (std::size_t i = 0; i < m; ++i) {
            if (!needs_artificial[i]) continue;
            for (std::size_t j = 0; j < first_artificial; ++j) tab.cost(j) -= tab.at(i, j);
            tab.neg_objective() -= tab.rhs(i);
        }
        const Status s1 = tab.optimize(total, opt, max_iter);
        if (s1 == Status::IterationLimit) {
            out.status = s1;
            return out;
        }
        if (-tab.neg_objective() > opt.feasibility_eps * rhs_scale) {
            out.status = Status::Infeasible;
            return out;
        }
        // Drive zero-level artificials out of the basis where possible.
        for (std::size_t i = 0; i < m; ++i) {
            if (tab.basis()[i] < first_artificial) continue;
            std::size_t best_col = first_artificial;
            double best_mag = 1e-9;
            for (std::size_t j = 0; j < first_artificial; ++j) {
                if (std::abs(tab.at(i, j)) > best_mag) {
                    best_mag = std::abs(tab.at(i, j));
                    best_col = j;
                }
            }
            if (best_col < first_artificial) tab.pivot(i, best_col);
        }
    }

    // Phase two cost row.
    for (std::size_t j = 0; j <= total; ++j) tab.cost(j) = 0.0;
    for (std::size_t j = 0; j < n; ++j) tab.cost(j) = problem.objective(static_cast<Eigen::Index>(j));
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t b = tab.basis()[i];
        const double cb = b < n ? problem.objective(static_cast<Eigen::Index>(b)) : 0.0;
        if (cb == 0.0) continue;
        for (std::size_t j = 0; j < total; ++j) tab.cost(j) -= cb * tab.at(i, j);
        tab.neg_objective() -= cb * tab.rhs(i);
    }
    const Status s2 = tab.optimize(first_artificial, opt, max_iter);
    out.status = s2;
    if (s2 != Status::Optimal) return out;

    out.x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t b = tab.basis()[i];
        if (b < n) out.x(static_cast<Eigen::Index>(b)) = std::max(0.0, tab.rhs(i));
    }
    out.objective = problem.objective.dot(out.x);
    return out;
}

}  // namespace urv::lp
