// Copyright (c) urv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Safety properties: input boxes, output conditions over linear inequalities,
// violation search on points and polytopes, the ACAS Xu property family, and
// the urvprop v1 text format.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "urv/error.hpp"
#include "urv/geometry.hpp"
#include "urv/lp.hpp"
#include "urv/network.hpp"

namespace urv {

inline constexpr Index kMaxBoxDim = 20;
inline constexpr std::size_t kMaxConjuncts = 512;

enum class Units { Raw, Normalized };

/// Axis-aligned box. Infinite bounds are allowed until the box is bound to a
/// network; an interval of (-inf, -inf) stands for the input's minimum.
struct InputRegion {
    Vector lower;
    Vector upper;

    Index dim() const { return lower.size(); }

    void validate() const {
        if (lower.size() != upper.size()) throw ConfigError("box bounds of differing length");
        if (lower.size() < 1) throw ConfigError("box needs at least one coordinate");
        for (Index i = 0; i < lower.size(); ++i) {
            if (std::isnan(lower(i)) || std::isnan(upper(i))) throw ConfigError("box bounds must not be NaN");
            if (lower(i) > upper(i)) throw ConfigError("box lower bound exceeds upper bound");
        }
    }

    bool finite() const { return lower.allFinite() && upper.allFinite(); }
};

/// Corners of a finite box; coordinates with lower == upper contribute one value.
inline VPolytope input_vertices(const InputRegion& r) {
    r.validate();
    if (r.dim() > kMaxBoxDim) throw ConfigError("box dimension exceeds " + std::to_string(kMaxBoxDim));
    if (!r.finite()) throw ConfigError("box has unbounded coordinates");
    std::vector<Index> free_dims;
    for (Index i = 0; i < r.dim(); ++i) {
        if (r.upper(i) > r.lower(i)) free_dims.push_back(i);
    }
    const std::size_t count = std::size_t{1} << free_dims.size();
    Matrix corners(static_cast<Index>(count), r.dim());
    for (std::size_t mask = 0; mask < count; ++mask) {
        Vector v = r.lower;
        for (std::size_t k = 0; k < free_dims.size(); ++k) {
            if (mask & (std::size_t{1} << k)) v(free_dims[k]) = r.upper(free_dims[k]);
        }
        corners.row(static_cast<Index>(mask)) = v.transpose();
    }
    return VPolytope(corners);
}

/// Halfspace a·y <= c.
struct Halfspace {
    Vector a;
    double c = 0.0;
};

/// Monotone boolean combination of linear inequalities over network outputs.
/// Arg-extreme nodes ("output i is minimal") expand to pairwise inequalities
/// once the output dimension is known.
class OutputCondition {
public:
    enum class Kind { Leaf, And, Or, Min, NotMin, Max, NotMax };

    static OutputCondition leaf(Vector a, double c) {
        if (!a.allFinite() || !std::isfinite(c)) throw ConfigError("condition coefficients must be finite");
        OutputCondition out(Kind::Leaf);
        out.a_ = std::move(a);
        out.c_ = c;
        return out;
    }
    static OutputCondition all_of(std::vector<OutputCondition> children) { return node(Kind::And, std::move(children)); }
    static OutputCondition any_of(std::vector<OutputCondition> children) { return node(Kind::Or, std::move(children)); }
    /// y_i <= y_j for every j.
    static OutputCondition is_min(Index i) { return extreme(Kind::Min, i); }
    /// y_j <= y_i for some j != i; ties count as "not minimal".
    static OutputCondition not_min(Index i) { return extreme(Kind::NotMin, i); }
    static OutputCondition is_max(Index i) { return extreme(Kind::Max, i); }
    static OutputCondition not_max(Index i) { return extreme(Kind::NotMax, i); }

    Kind kind() const noexcept { return kind_; }
    const Vector& coefficients() const noexcept { return a_; }
    double bound() const noexcept { return c_; }
    Index index() const noexcept { return index_; }
    const std::vector<OutputCondition>& children() const noexcept { return children_; }

    /// Equivalent tree over Leaf/And/Or only, for outputs of dimension m.
    OutputCondition expanded(Index m) const {
        auto pair_leaf = [m](Index lhs, Index rhs) {  // y_lhs - y_rhs <= 0
            Vector a = Vector::Zero(m);
            a(lhs) += 1.0;
            a(rhs) -= 1.0;
            return leaf(std::move(a), 0.0);
        };
        auto others = [&](bool conj, auto make) {
            if (index_ < 0 || index_ >= m) throw ConfigError("output index " + std::to_string(index_) + " out of range");
            std::vector<OutputCondition> parts;
            for (Index j = 0; j < m; ++j) {
                if (j != index_) parts.push_back(make(j));
            }
            if (parts.empty()) {
                // A single output is trivially minimal and maximal.
                return conj ? leaf(Vector::Zero(m), 0.0) : leaf(Vector::Zero(m), -1.0);
            }
            return conj ? all_of(std::move(parts)) : any_of(std::move(parts));
        };
        switch (kind_) {
            case Kind::Leaf:
                if (a_.size() != m) throw ConfigError("condition leaf dimension does not match output dimension");
                return *this;
            case Kind::And:
            case Kind::Or: {
                std::vector<OutputCondition> parts;
                for (const auto& ch : children_) parts.push_back(ch.expanded(m));
                return node(kind_, std::move(parts));
            }
            case Kind::Min: return others(true, [&](Index j) { return pair_leaf(index_, j); });
            case Kind::NotMin: return others(false, [&](Index j) { return pair_leaf(j, index_); });
            case Kind::Max: return others(true, [&](Index j) { return pair_leaf(j, index_); });
            case Kind::NotMax: return others(false, [&](Index j) { return pair_leaf(index_, j); });
        }
        return *this;
    }

    /// Every leaf a·y <= c (tolerance tol) evaluated through the tree.
    bool satisfied(const Vector& y, double tol) const {
        switch (kind_) {
            case Kind::Leaf:
                if (a_.size() != y.size()) throw ConfigError("condition leaf dimension does not match output");
                return a_.dot(y) <= c_ + tol;
            case Kind::And:
                for (const auto& ch : children_) {
                    if (!ch.satisfied(y, tol)) return false;
                }
                return true;
            case Kind::Or:
                for (const auto& ch : children_) {
                    if (ch.satisfied(y, tol)) return true;
                }
                return false;
            default:
                return expanded(y.size()).satisfied(y, tol);
        }
    }

    /// Negation in disjunctive normal form: a list of conjunctions of
    /// halfspaces whose union is the violating set. Violation of a leaf means
    /// a·y >= c + margin.
    std::vector<std::vector<Halfspace>> violation_dnf(Index m, double margin,
                                                      std::size_t cap = kMaxConjuncts) const {
        return expanded(m).negated_dnf(margin, cap);
    }

    /// Condition in network units when outputs are stored normalized:
    /// y_raw = range * y + mean.
    OutputCondition rescaled(const Vector& range, const Vector& mean) const {
        const OutputCondition e = expanded(range.size());
        return e.rescale_expanded(range, mean);
    }

    /// Text form used by urvprop files.
    std::string to_sexpr() const {
        auto idx = [&](const char* op) { return std::string("(") + op + " " + std::to_string(index_) + ")"; };
        switch (kind_) {
            case Kind::Leaf: {
                std::string s = "(le";
                for (Index i = 0; i < a_.size(); ++i) s += " " + detail::format_double(a_(i));
                return s + " " + detail::format_double(c_) + ")";
            }
            case Kind::And:
            case Kind::Or: {
                std::string s = kind_ == Kind::And ? "(and" : "(or";
                for (const auto& ch : children_) s += " " + ch.to_sexpr();
                return s + ")";
            }
            case Kind::Min: return idx("min");
            case Kind::NotMin: return idx("notmin");
            case Kind::Max: return idx("max");
            case Kind::NotMax: return idx("notmax");
        }
        return {};
    }

private:
    explicit OutputCondition(Kind k) : kind_(k) {}

    static OutputCondition node(Kind k, std::vector<OutputCondition> children) {
        if (children.empty()) throw ConfigError("and/or node needs at least one child");
        OutputCondition out(k);
        out.children_ = std::move(children);
        return out;
    }

    static OutputCondition extreme(Kind k, Index i) {
        if (i < 0) throw ConfigError("output index must be non-negative");
        OutputCondition out(k);
        out.index_ = i;
        return out;
    }

    std::vector<std::vector<Halfspace>> negated_dnf(double margin, std::size_t cap) const {
        switch (kind_) {
            case Kind::Leaf:
                return {{Halfspace{-a_, -(c_ + margin)}}};
            case Kind::And: {
                std::vector<std::vector<Halfspace>> out;
                for (const auto& ch : children_) {
                    auto part = ch.negated_dnf(margin, cap);
                    out.insert(out.end(), part.begin(), part.end());
                    if (out.size() > cap) throw ConfigError("violation DNF exceeds " + std::to_string(cap) + " conjuncts");
                }
                return out;
            }
            case Kind::Or: {
                std::vector<std::vector<Halfspace>> out{{}};
                for (const auto& ch : children_) {
                    const auto part = ch.negated_dnf(margin, cap);
                    if (out.size() * part.size() > cap) {
                        throw ConfigError("violation DNF exceeds " + std::to_string(cap) + " conjuncts");
                    }
                    std::vector<std::vector<Halfspace>> next;
                    for (const auto& lhs : out) {
                        for (const auto& rhs : part) {
                            auto merged = lhs;
                            merged.insert(merged.end(), rhs.begin(), rhs.end());
                            next.push_back(std::move(merged));
                        }
                    }
                    out = std::move(next);
                }
                return out;
            }
            default:
                throw ConfigError("condition must be expanded before negation");
        }
    }

    OutputCondition rescale_expanded(const Vector& range, const Vector& mean) const {
        if (kind_ == Kind::Leaf) {
            // a·(range∘y + mean) <= c  <=>  (a∘range)·y <= c - a·mean
            return leaf(a_.cwiseProduct(range), c_ - a_.dot(mean));
        }
        std::vector<OutputCondition> parts;
        for (const auto& ch : children_) parts.push_back(ch.rescale_expanded(range, mean));
        return node(kind_, std::move(parts));
    }

    Kind kind_;
    Vector a_;
    double c_ = 0.0;
    Index index_ = -1;
    std::vector<OutputCondition> children_;
};

/// True iff the output violates the condition (some leaf exceeded beyond tol along every satisfying path).
inline bool point_violates(const Vector& y, const OutputCondition& cond, double tol = kLpTol) {
    return !cond.satisfied(y, tol);
}

/// A point of p violating the condition, if one exists. Vertices are checked
/// first; otherwise one LP per conjunct of the negated condition.
inline std::optional<Vector> polytope_violates(const VPolytope& p, const OutputCondition& cond, double tol = kLpTol) {
    for (Index i = 0; i < p.size(); ++i) {
        Vector v = p.vertex(i);
        if (point_violates(v, cond, tol)) return v;
    }
    const Index m = p.size();
    if (m == 1) return std::nullopt;
    // The extra margin keeps LP round-off from producing a borderline witness.
    const double margin = tol + 1e-8;
    for (const auto& conj : cond.violation_dnf(p.dim(), margin)) {
        const Index k = static_cast<Index>(conj.size());
        lp::Problem prob;
        prob.rows = Matrix::Zero(k + 1, m);
        prob.rhs = Vector(k + 1);
        prob.relations.assign(static_cast<std::size_t>(k), lp::Relation::LessEq);
        prob.relations.push_back(lp::Relation::Equal);
        for (Index r = 0; r < k; ++r) {
            prob.rows.row(r) = (p.vertices() * conj[static_cast<std::size_t>(r)].a).transpose();
            prob.rhs(r) = conj[static_cast<std::size_t>(r)].c;
        }
        prob.rows.row(k).setOnes();
        prob.rhs(k) = 1.0;
        prob.objective = Vector::Zero(m);
        const lp::Solution sol = lp::solve(prob);
        if (sol.status == lp::Status::Infeasible) continue;
        if (sol.status != lp::Status::Optimal) throw NumericalError("violation LP did not reach an optimum");
        const Vector lambda = sol.x / sol.x.sum();
        Vector w = p.vertices().transpose() * lambda;
        if (point_violates(w, cond, tol)) return w;
    }
    return std::nullopt;
}

/// Which members of an indexed network family (previous advisory x, tau index y) a property targets.
struct NetworkSelector {
    int x_lo = 1, x_hi = 5;
    int y_lo = 1, y_hi = 9;

    bool matches(int x, int y) const { return x >= x_lo && x <= x_hi && y >= y_lo && y <= y_hi; }
    bool all() const { return x_lo == 1 && x_hi == 5 && y_lo == 1 && y_hi == 9; }
};

/// A property (X, Y): inputs in the union of `inputs`, outputs required to satisfy `output`.
struct PropertySpec {
    std::string name;
    std::vector<InputRegion> inputs;
    OutputCondition output = OutputCondition::leaf(Vector::Zero(1), 0.0);
    Units units = Units::Raw;
    NetworkSelector applies_to;
};

/// A property resolved against one network: finite boxes in normalized input
/// units and an expanded condition over the network's stored outputs.
struct BoundProperty {
    std::string name;
    std::vector<InputRegion> inputs;
    OutputCondition output = OutputCondition::leaf(Vector::Zero(1), 0.0);
};

inline BoundProperty bind_property(const PropertySpec& spec, const Network& net) {
    if (spec.inputs.empty()) throw ConfigError("property has no input box");
    BoundProperty out{spec.name, {}, spec.output.expanded(net.output_dim())};
    const auto& norm = net.normalization();
    const bool use_stats = spec.units == Units::Raw && norm.has_value();
    for (const InputRegion& box : spec.inputs) {
        box.validate();
        if (box.dim() != net.input_dim()) throw ConfigError("property box dimension does not match network input");
        InputRegion closed = box;
        if (!box.finite()) {
            if (!norm) throw ConfigError("unbounded property box needs network normalization bounds");
            for (Index i = 0; i < box.dim(); ++i) {
                auto close = [&](double v) {
                    if (v == -std::numeric_limits<double>::infinity()) return norm->input_min(i);
                    if (v == std::numeric_limits<double>::infinity()) return norm->input_max(i);
                    return v;
                };
                closed.lower(i) = close(box.lower(i));
                closed.upper(i) = close(box.upper(i));
            }
            if (spec.units == Units::Normalized) {
                // Statistics are raw; convert the completed sides.
                for (Index i = 0; i < box.dim(); ++i) {
                    if (!std::isfinite(box.lower(i))) closed.lower(i) = (closed.lower(i) - norm->input_mean(i)) / norm->input_range(i);
                    if (!std::isfinite(box.upper(i))) closed.upper(i) = (closed.upper(i) - norm->input_mean(i)) / norm->input_range(i);
                }
            }
            if ((closed.lower.array() > closed.upper.array()).any()) {
                throw ConfigError("property box is empty after closing unbounded sides");
            }
        }
        if (use_stats) {
            closed.lower = normalize(net, closed.lower).values;
            closed.upper = normalize(net, closed.upper).values;
        }
        closed.validate();
        out.inputs.push_back(std::move(closed));
    }
    if (use_stats) out.output = out.output.rescaled(norm->output_range, norm->output_mean);
    return out;
}

// ---------------------------------------------------------------------------
// ACAS Xu properties. Inputs: rho (ft), theta, psi (rad), v_own, v_int (ft/s).
// Outputs: COC, WL, WR, SL, SR; the advisory is the minimal score.

namespace acas {

inline constexpr Index kCOC = 0, kWL = 1, kWR = 2, kSL = 3, kSR = 4;

inline InputRegion box(std::initializer_list<std::pair<double, double>> bounds) {
    InputRegion r{Vector(static_cast<Index>(bounds.size())), Vector(static_cast<Index>(bounds.size()))};
    Index i = 0;
    for (const auto& [lo, hi] : bounds) {
        r.lower(i) = lo;
        r.upper(i) = hi;
        ++i;
    }
    return r;
}

}  // namespace acas

/// The ten ACAS Xu safety properties in raw units.
inline PropertySpec acasxu_property(int id) {
    using namespace acas;
    constexpr double inf = std::numeric_limits<double>::infinity();
    constexpr double pi = std::numbers::pi;
    const std::pair<double, double> free{-inf, inf};
    const std::pair<double, double> at_min{-inf, -inf};  // "approximately -pi": the input's minimum

    PropertySpec p;
    p.name = "acas-phi" + std::to_string(id);
    p.units = Units::Raw;
    switch (id) {
        case 1:
            p.inputs = {box({{55948, inf}, free, free, {1145, inf}, {-inf, 60}})};
            p.output = OutputCondition::leaf((Vector(5) << 1, 0, 0, 0, 0).finished(), 1500);
            break;
        case 2:
            p.inputs = {box({{55948, inf}, free, free, {1145, inf}, {-inf, 60}})};
            p.output = OutputCondition::not_max(kCOC);
            p.applies_to = {2, 5, 1, 9};
            break;
        case 3:
            p.inputs = {box({{1500, 1800}, {-0.06, 0.06}, {3.10, inf}, {980, inf}, {960, inf}})};
            p.output = OutputCondition::not_min(kCOC);
            p.applies_to = {1, 1, 7, 9};
            break;
        case 4:
            p.inputs = {box({{1500, 1800}, {-0.06, 0.06}, {0, 0}, {1000, inf}, {700, 800}})};
            p.output = OutputCondition::not_min(kCOC);
            p.applies_to = {1, 1, 7, 9};
            break;
        case 5:
            p.inputs = {box({{250, 500}, {0.2, 0.4}, at_min, {100, 400}, {0, 400}})};
            p.output = OutputCondition::is_min(kSR);
            p.applies_to = {1, 1, 1, 1};
            break;
        case 6:
            // rho upper bound 62000 ft; normalization clamps it to the network's maximum.
            p.inputs = {box({{12000, 62000}, {0.7, pi}, at_min, {100, 1200}, {0, 1200}}),
                        box({{12000, 62000}, {-pi, -0.7}, at_min, {100, 1200}, {0, 1200}})};
            p.output = OutputCondition::is_min(kCOC);
            p.applies_to = {1, 1, 1, 1};
            break;
        case 7:
            p.inputs = {box({{0, 60760}, {-pi, pi}, {-pi, pi}, {100, 1200}, {0, 1200}})};
            p.output = OutputCondition::all_of({OutputCondition::not_min(kSL), OutputCondition::not_min(kSR)});
            p.applies_to = {1, 1, 9, 9};
            break;
        case 8:
            p.inputs = {box({{0, 60760}, {-pi, -0.75 * pi}, {-0.1, 0.1}, {600, 1200}, {600, 1200}})};
            p.output = OutputCondition::any_of({OutputCondition::is_min(kCOC), OutputCondition::is_min(kWL)});
            p.applies_to = {2, 2, 9, 9};
            break;
        case 9:
            p.inputs = {box({{2000, 7000}, {-0.4, -0.14}, at_min, {100, 150}, {0, 140}})};
            p.output = OutputCondition::is_min(kSL);
            p.applies_to = {3, 3, 3, 3};
            break;
        case 10:
            p.inputs = {box({{36000, 60760}, {0.7, pi}, at_min, {900, 1200}, {600, 1200}})};
            p.output = OutputCondition::is_min(kCOC);
            p.applies_to = {4, 4, 5, 5};
            break;
        default:
            throw ConfigError("ACAS Xu property id must be in 1..10, got " + std::to_string(id));
    }
    return p;
}

// ---------------------------------------------------------------------------
// urvprop v1

namespace detail {

inline double parse_bound(std::string_view token, std::size_t line) {
    if (token == "inf" || token == "+inf") return std::numeric_limits<double>::infinity();
    if (token == "-inf") return -std::numeric_limits<double>::infinity();
    return parse_double(token, line);
}

inline std::string format_bound(double v) {
    if (v == std::numeric_limits<double>::infinity()) return "inf";
    if (v == -std::numeric_limits<double>::infinity()) return "-inf";
    return format_double(v);
}

class SexprParser {
public:
    SexprParser(std::string_view text, std::size_t line) : text_(text), line_(line) {}

    OutputCondition parse_all() {
        OutputCondition c = parse();
        skip_ws();
        if (pos_ != text_.size()) fail("trailing characters after condition");
        return c;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, msg); }

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
    }

    std::string_view atom() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < text_.size() && text_[pos_] != ' ' && text_[pos_] != '\t' && text_[pos_] != '(' &&
               text_[pos_] != ')') {
            ++pos_;
        }
        if (start == pos_) fail("expected an atom");
        return text_.substr(start, pos_ - start);
    }

    bool peek_close() {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == ')';
    }

    void expect(char ch) {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != ch) fail(std::string("expected '") + ch + "'");
        ++pos_;
    }

    OutputCondition parse() {
        expect('(');
        const std::string_view op = atom();
        if (op == "and" || op == "or") {
            std::vector<OutputCondition> children;
            while (!peek_close()) children.push_back(parse());
            expect(')');
            if (children.empty()) fail(std::string(op) + " needs at least one operand");
            return op == "and" ? OutputCondition::all_of(std::move(children))
                               : OutputCondition::any_of(std::move(children));
        }
        if (op == "le") {
            std::vector<double> nums;
            while (!peek_close()) nums.push_back(parse_double(atom(), line_));
            expect(')');
            if (nums.size() < 2) fail("le needs coefficients and a bound");
            Vector a(static_cast<Index>(nums.size() - 1));
            for (std::size_t i = 0; i + 1 < nums.size(); ++i) a(static_cast<Index>(i)) = nums[i];
            return OutputCondition::leaf(std::move(a), nums.back());
        }
        if (op == "min" || op == "notmin" || op == "max" || op == "notmax") {
            const long idx = parse_count(atom(), line_);
            expect(')');
            if (op == "min") return OutputCondition::is_min(idx);
            if (op == "notmin") return OutputCondition::not_min(idx);
            if (op == "max") return OutputCondition::is_max(idx);
            return OutputCondition::not_max(idx);
        }
        fail("unknown operator '" + std::string(op) + "'");
    }

    std::string_view text_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

}  // namespace detail

/// Reads urvprop v1 (see docs/formats.md).
inline PropertySpec parse_urvprop(std::string_view text) {
    using namespace detail;
    const auto lines = split_lines(text);
    if (lines.empty() || lines.front().text != "urvprop 1") throw ParseError(1, "expected 'urvprop 1'");
    PropertySpec spec;
    bool have_cond = false;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const TextLine& l = lines[i];
        if (l.text.empty() || l.text.starts_with("#")) continue;
        const std::size_t sp = l.text.find(' ');
        const std::string_view key = l.text.substr(0, sp);
        const std::string_view rest = sp == std::string_view::npos ? std::string_view{} : l.text.substr(sp + 1);
        if (key == "name") {
            spec.name = std::string(rest);
        } else if (key == "units") {
            if (rest == "raw") spec.units = Units::Raw;
            else if (rest == "normalized") spec.units = Units::Normalized;
            else throw ParseError(l.number, "units must be 'raw' or 'normalized'");
        } else if (key == "box") {
            const auto fields = split_single_spaces(l);
            InputRegion box{Vector(static_cast<Index>(fields.size() - 1)), Vector(static_cast<Index>(fields.size() - 1))};
            if (fields.size() < 2) throw ParseError(l.number, "box needs at least one lo:hi pair");
            for (std::size_t f = 1; f < fields.size(); ++f) {
                const auto colon = fields[f].find(':');
                if (colon == std::string_view::npos) throw ParseError(l.number, "box entries must be lo:hi");
                box.lower(static_cast<Index>(f - 1)) = parse_bound(fields[f].substr(0, colon), l.number);
                box.upper(static_cast<Index>(f - 1)) = parse_bound(fields[f].substr(colon + 1), l.number);
            }
            try {
                box.validate();
            } catch (const ConfigError& e) {
                throw ParseError(l.number, e.what());
            }
            if (!spec.inputs.empty() && spec.inputs.front().dim() != box.dim()) {
                throw ParseError(l.number, "boxes of differing dimension");
            }
            spec.inputs.push_back(std::move(box));
        } else if (key == "cond") {
            if (have_cond) throw ParseError(l.number, "duplicate cond line");
            spec.output = SexprParser(rest, l.number).parse_all();
            have_cond = true;
        } else {
            throw ParseError(l.number, "unknown key '" + std::string(key) + "'");
        }
    }
    const std::size_t last = lines.back().number;
    if (spec.inputs.empty()) throw ParseError(last, "property needs a box line");
    if (!have_cond) throw ParseError(last, "property needs a cond line");
    return spec;
}

inline std::string serialize_urvprop(const PropertySpec& spec) {
    std::string out = "urvprop 1\n";
    if (!spec.name.empty()) out += "name " + spec.name + "\n";
    out += spec.units == Units::Raw ? "units raw\n" : "units normalized\n";
    for (const auto& box : spec.inputs) {
        out += "box";
        for (Index i = 0; i < box.dim(); ++i) {
            out += " " + detail::format_bound(box.lower(i)) + ":" + detail::format_bound(box.upper(i));
        }
        out += "\n";
    }
    out += "cond " + spec.output.to_sexpr() + "\n";
    return out;
}

inline PropertySpec load_property(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return parse_urvprop(text);
    } catch (const ParseError& e) {
        throw e.with_source(path.string());
    }
}

}  // namespace urv
