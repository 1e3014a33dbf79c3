// Copyright (c) urv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run reports (text and JSON), the report schema check, and the strategy
// benchmark with its manifest format and CSV/text tables.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "urv/error.hpp"
#include "urv/network.hpp"
#include "urv/properties.hpp"
#include "urv/underapprox.hpp"
#include "urv/verifier.hpp"

namespace urv {

inline constexpr std::string_view kReportSchemaId = "urv-report/1";

struct RunReport {
    VerificationRun run;
    std::string property;
    std::string strategy;
    std::uint64_t seed = 0;
    std::size_t epoch_bound = 0;
    bool include_timings = true;
};

inline RunReport make_report(VerificationRun run, const PropertySpec& prop, const VerifierConfig& cfg,
                             bool include_timings = true) {
    return RunReport{std::move(run), prop.name, strategy_label(cfg.strategy), cfg.master_seed, cfg.epochs,
                     include_timings};
}

inline std::string verdict_name(const Verdict& v) {
    if (std::holds_alternative<Unsafe>(v)) return "unsafe";
    if (std::holds_alternative<UnknownWithConfidence>(v)) return "unknown";
    return "config_error";
}

/// Process exit status: 0 unknown, 1 unsafe, 2 configuration error.
inline int exit_code(const Verdict& v) {
    if (std::holds_alternative<Unsafe>(v)) return 1;
    if (std::holds_alternative<UnknownWithConfidence>(v)) return 0;
    return 2;
}

namespace detail {

inline nlohmann::json to_json_array(const Vector& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

}  // namespace detail

inline nlohmann::json report_json(const RunReport& r) {
    using nlohmann::json;
    const Verdict& v = r.run.verdict;
    json j;
    j["schema"] = kReportSchemaId;
    j["verdict"] = verdict_name(v);
    j["property"] = r.property;
    j["strategy"] = r.strategy;
    j["seed"] = r.seed;
    j["epoch_bound"] = r.epoch_bound;
    j["ve"] = r.run.epochs_run;
    j["vt_ms"] = r.include_timings ? json(r.run.wall_ms) : json(nullptr);
    j["cl"] = nullptr;
    j["witness"] = nullptr;
    j["witness_source"] = nullptr;
    j["witness_epoch"] = nullptr;
    j["witness_input"] = nullptr;
    j["samples_checked"] = 0;
    j["timed_out"] = false;
    j["message"] = nullptr;
    if (const auto* u = std::get_if<Unsafe>(&v)) {
        j["witness"] = detail::to_json_array(u->witness);
        if (const auto* e = std::get_if<ReachEpoch>(&u->source)) {
            j["witness_source"] = "reach";
            j["witness_epoch"] = e->epoch;
        } else {
            j["witness_source"] = "sample";
            j["witness_input"] = detail::to_json_array(std::get<SampleSource>(u->source).input);
        }
    } else if (const auto* k = std::get_if<UnknownWithConfidence>(&v)) {
        j["cl"] = k->cl;
        j["samples_checked"] = k->samples_checked;
        j["timed_out"] = k->timed_out;
    } else {
        j["message"] = std::get<ConfigFailure>(v).message;
    }
    if (r.include_timings) j["epoch_ms"] = r.run.epoch_ms;
    return j;
}

/// Checks a report against the urv-report/1 schema (docs/report.schema.json).
/// Returns the list of violations; empty when valid.
inline std::vector<std::string> validate_report(const nlohmann::json& j) {
    std::vector<std::string> errors;
    if (!j.is_object()) return {"report must be an object"};
    auto require = [&](const char* key, auto check, const char* what) {
        if (!j.contains(key)) {
            errors.push_back(std::string("missing field '") + key + "'");
        } else if (!check(j.at(key))) {
            errors.push_back(std::string("field '") + key + "' must be " + what);
        }
    };
    auto is_uint = [](const nlohmann::json& x) { return x.is_number_unsigned() || (x.is_number_integer() && x.get<long long>() >= 0); };
    auto is_num_array = [](const nlohmann::json& x) {
        if (!x.is_array() || x.empty()) return false;
        for (const auto& e : x) {
            if (!e.is_number()) return false;
        }
        return true;
    };
    require("schema", [](const auto& x) { return x.is_string() && x.template get<std::string>() == kReportSchemaId; }, "\"urv-report/1\"");
    require("verdict", [](const auto& x) {
        if (!x.is_string()) return false;
        const auto s = x.template get<std::string>();
        return s == "unsafe" || s == "unknown" || s == "config_error";
    }, "one of unsafe/unknown/config_error");
    require("property", [](const auto& x) { return x.is_string(); }, "a string");
    require("strategy", [](const auto& x) { return x.is_string(); }, "a string");
    require("seed", is_uint, "a non-negative integer");
    require("epoch_bound", is_uint, "a non-negative integer");
    require("ve", is_uint, "a non-negative integer");
    require("vt_ms", [](const auto& x) { return x.is_null() || (x.is_number() && x.template get<double>() >= 0); }, "null or a non-negative number");
    require("cl", [](const auto& x) { return x.is_null() || (x.is_number() && x.template get<double>() >= 0 && x.template get<double>() <= 1); }, "null or a number in [0, 1]");
    require("witness", [&](const auto& x) { return x.is_null() || is_num_array(x); }, "null or a non-empty number array");
    require("witness_source", [](const auto& x) { return x.is_null() || (x.is_string() && (x == "reach" || x == "sample")); }, "null, \"reach\" or \"sample\"");
    require("witness_epoch", [&](const auto& x) { return x.is_null() || is_uint(x); }, "null or a non-negative integer");
    require("witness_input", [&](const auto& x) { return x.is_null() || is_num_array(x); }, "null or a non-empty number array");
    require("samples_checked", is_uint, "a non-negative integer");
    require("timed_out", [](const auto& x) { return x.is_boolean(); }, "a boolean");
    require("message", [](const auto& x) { return x.is_null() || x.is_string(); }, "null or a string");
    if (j.contains("epoch_ms") && !(j["epoch_ms"].is_array() && std::all_of(j["epoch_ms"].begin(), j["epoch_ms"].end(), [](const auto& e) { return e.is_number(); }))) {
        errors.push_back("field 'epoch_ms' must be a number array");
    }
    static const std::vector<std::string> known = {"schema", "verdict", "property", "strategy", "seed", "epoch_bound",
                                                   "ve", "vt_ms", "cl", "witness", "witness_source", "witness_epoch",
                                                   "witness_input", "samples_checked", "timed_out", "message", "epoch_ms"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) errors.push_back("unknown field '" + key + "'");
    }
    if (!errors.empty()) return errors;

    // Cross-field rules per verdict.
    const std::string verdict = j["verdict"];
    if (verdict == "unsafe") {
        if (j["witness"].is_null() || j["witness_source"].is_null()) errors.push_back("unsafe report needs a witness and its source");
        else if (j["witness_source"] == "reach" && j["witness_epoch"].is_null()) errors.push_back("reach witness needs witness_epoch");
        else if (j["witness_source"] == "sample" && j["witness_input"].is_null()) errors.push_back("sample witness needs witness_input");
        if (!j["cl"].is_null()) errors.push_back("unsafe report must not carry cl");
    } else if (verdict == "unknown") {
        if (j["cl"].is_null()) errors.push_back("unknown report needs cl");
        if (!j["witness"].is_null()) errors.push_back("unknown report must not carry a witness");
    } else {
        if (j["message"].is_null()) errors.push_back("config_error report needs a message");
    }
    if (j["ve"].get<std::size_t>() > j["epoch_bound"].get<std::size_t>()) errors.push_back("ve exceeds epoch_bound");
    return errors;
}

inline std::string report_text(const RunReport& r) {
    std::ostringstream out;
    out << std::setprecision(10);
    const Verdict& v = r.run.verdict;
    auto vec = [&](const Vector& x) {
        out << '[';
        for (Index i = 0; i < x.size(); ++i) out << (i ? ", " : "") << x(i);
        out << ']';
    };
    out << "property:  " << (r.property.empty() ? "-" : r.property) << '\n';
    if (const auto* u = std::get_if<Unsafe>(&v)) {
        out << "verdict:   UNSAFE\n";
        out << "witness:   ";
        vec(u->witness);
        out << '\n';
        if (const auto* e = std::get_if<ReachEpoch>(&u->source)) {
            out << "source:    under-approximation epoch " << e->epoch << '\n';
        } else {
            out << "source:    sample input ";
            vec(std::get<SampleSource>(u->source).input);
            out << '\n';
        }
    } else if (const auto* k = std::get_if<UnknownWithConfidence>(&v)) {
        out << "verdict:   UNKNOWN (no violation found)\n";
        out << "cl:        " << k->cl << '\n';
        out << "samples:   " << k->samples_checked << '\n';
        if (k->timed_out) out << "timed out: yes\n";
    } else {
        out << "verdict:   CONFIG ERROR\n";
        out << "message:   " << std::get<ConfigFailure>(v).message << '\n';
    }
    out << "VE:        " << r.run.epochs_run << " / " << r.epoch_bound << '\n';
    if (r.include_timings) out << "VT:        " << std::fixed << std::setprecision(3) << r.run.wall_ms << " ms\n";
    out << "strategy:  " << r.strategy << '\n';
    out << "seed:      " << r.seed << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Benchmark

struct BenchCase {
    std::string label;
    Network network;
    PropertySpec property;
};

struct BenchCell {
    std::string case_label;
    std::string strategy;
    std::size_t trials = 0;
    std::size_t unsafe = 0;
    double mean_ve = 0.0;
    double mean_vt_ms = 0.0;
};

/// Runs every (case, strategy) cell `trials` times; trial t uses master seed base + t.
inline std::vector<BenchCell> run_bench(const std::vector<BenchCase>& cases, const std::vector<StrategyConfig>& grid,
                                        const VerifierConfig& base, std::size_t trials) {
    if (cases.empty()) throw ConfigError("benchmark has no cases");
    if (grid.empty()) throw ConfigError("benchmark has no strategies");
    if (trials < 1) throw ConfigError("benchmark needs at least one trial");
    std::vector<BenchCell> cells;
    for (const auto& c : cases) {
        for (const auto& strategy : grid) {
            BenchCell cell{c.label, strategy_label(strategy), trials, 0, 0.0, 0.0};
            for (std::size_t t = 0; t < trials; ++t) {
                VerifierConfig cfg = base;
                cfg.strategy = strategy;
                cfg.master_seed = base.master_seed + t;
                const VerificationRun run = verify_detailed(c.network, c.property, cfg);
                if (const auto* f = std::get_if<ConfigFailure>(&run.verdict)) {
                    throw ConfigError(c.label + ": " + f->message);
                }
                if (std::holds_alternative<Unsafe>(run.verdict)) ++cell.unsafe;
                cell.mean_ve += static_cast<double>(run.epochs_run);
                cell.mean_vt_ms += run.wall_ms;
            }
            cell.mean_ve /= static_cast<double>(trials);
            cell.mean_vt_ms /= static_cast<double>(trials);
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

inline std::string bench_csv(const std::vector<BenchCell>& cells, bool include_timings = true) {
    std::ostringstream out;
    out << "case,strategy,trials,unsafe,mean_ve,mean_vt_ms\n";
    for (const auto& c : cells) {
        out << c.case_label << ',' << c.strategy << ',' << c.trials << ',' << c.unsafe << ','
            << std::fixed << std::setprecision(3) << c.mean_ve << ',';
        if (include_timings) out << c.mean_vt_ms;
        else out << "NA";
        out << '\n';
        out.unsetf(std::ios::fixed);
    }
    return out.str();
}

/// Table in the VC / VE / VT layout: "UNS(k)" when k of the trials falsified, "UNK" otherwise.
inline std::string bench_text(const std::vector<BenchCell>& cells, bool include_timings = true) {
    std::size_t case_w = 4, strat_w = 8;
    for (const auto& c : cells) {
        case_w = std::max(case_w, c.case_label.size());
        strat_w = std::max(strat_w, c.strategy.size());
    }
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(case_w)) << "case" << "  " << std::setw(static_cast<int>(strat_w))
        << "strategy" << "  " << std::setw(9) << "VC" << "  " << std::right << std::setw(9) << "VE"
        << "  " << std::setw(12) << "VT(ms)" << '\n';
    for (const auto& c : cells) {
        const std::string vc = c.unsafe ? "UNS(" + std::to_string(c.unsafe) + ")" : "UNK";
        out << std::left << std::setw(static_cast<int>(case_w)) << c.case_label << "  "
            << std::setw(static_cast<int>(strat_w)) << c.strategy << "  " << std::setw(9) << vc << "  " << std::right
            << std::setw(9) << std::fixed << std::setprecision(2) << c.mean_ve << "  " << std::setw(12);
        if (include_timings) out << std::setprecision(3) << c.mean_vt_ms;
        else out << "NA";
        out << '\n';
    }
    return out.str();
}

/// Manifest lines: "<network> <property>", where property is a urvprop path or
/// "acas:K". Relative paths resolve against the manifest's directory; '#'
/// starts a comment.
inline std::vector<BenchCase> load_manifest(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    const auto dir = path.parent_path();
    std::vector<BenchCase> cases;
    for (const auto& line : detail::split_lines(text)) {
        std::string_view t = detail::trim(line.text);
        if (t.empty() || t.starts_with('#')) continue;
        std::istringstream fields{std::string(t)};
        std::string net_path, prop_ref, extra;
        fields >> net_path >> prop_ref;
        if (prop_ref.empty() || (fields >> extra)) {
            throw ParseError(line.number, "expected '<network> <property>'", path.string());
        }
        auto resolve = [&](const std::string& p) {
            const std::filesystem::path fp(p);
            return fp.is_absolute() ? fp : dir / fp;
        };
        const auto np = resolve(net_path);
        Network net = load_network(np);
        PropertySpec prop = [&] {
            if (prop_ref.starts_with("acas:")) {
                int id = 0;
                try {
                    id = std::stoi(prop_ref.substr(5));
                } catch (const std::exception&) {
                    throw ParseError(line.number, "bad ACAS property id '" + prop_ref + "'", path.string());
                }
                return acasxu_property(id);
            }
            return load_property(resolve(prop_ref));
        }();
        std::string label = np.stem().string() + "/" +
                            (prop.name.empty() ? std::filesystem::path(prop_ref).stem().string() : prop.name);
        cases.push_back({std::move(label), std::move(net), std::move(prop)});
    }
    if (cases.empty()) throw ConfigError("manifest '" + path.string() + "' lists no cases");
    return cases;
}

}  // namespace urv
