// Copyright (c) urv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Multi-epoch under-approximation verification. Every epoch propagates the
// input region through the network with a fresh random stream; an output
// polytope leaving the safe region is a genuine counterexample. When the
// epoch budget (or time) runs out, a uniform sample check runs, and failing
// that the result is "unknown" with a confidence level: the fraction of
// sampled outputs inside the convex hull of all archived epoch outputs.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "urv/error.hpp"
#include "urv/geometry.hpp"
#include "urv/network.hpp"
#include "urv/properties.hpp"
#include "urv/rng.hpp"
#include "urv/underapprox.hpp"

namespace urv {

struct VerifierConfig {
    std::size_t epochs = 1000;
    std::chrono::milliseconds timeout{60'000};
    std::size_t sample_count = 10'000;
    StrategyConfig strategy;
    std::uint64_t master_seed = 0;
    unsigned parallelism = 1;
    double tol = kLpTol;
    bool compute_confidence = true;  // skip the hull LPs when only the verdict matters

    void validate() const {
        if (epochs < 1) throw ConfigError("epoch bound must be at least 1");
        if (sample_count < 1) throw ConfigError("sample count must be at least 1");
        if (parallelism < 1) throw ConfigError("parallelism must be at least 1");
        if (timeout.count() <= 0) throw ConfigError("timeout must be positive");
        strategy.validate();
    }
};

/// Random stream of epoch `epoch` (1-based); stream 0 drives the sample set.
inline std::uint64_t epoch_seed(std::uint64_t master, std::size_t epoch) { return stream_seed(master, epoch); }

struct ArchiveEntry {
    VPolytope polytope;
    std::size_t epoch;
    std::uint64_t seed;
};

/// Append-only log of epoch output polytopes.
class EpochArchive {
public:
    void append(ArchiveEntry entry) {
        if (!entries_.empty() && entry.polytope.dim() != entries_.front().polytope.dim()) {
            throw ConfigError("archive members must share the output dimension");
        }
        entries_.push_back(std::move(entry));
    }

    const std::vector<ArchiveEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    /// Polytopes of the first `count` entries (all by default).
    PolytopeSet polytopes(std::size_t count = static_cast<std::size_t>(-1)) const {
        PolytopeSet set;
        for (std::size_t i = 0; i < entries_.size() && i < count; ++i) set.add(entries_[i].polytope);
        return set;
    }

    void sort_by_epoch() {
        std::stable_sort(entries_.begin(), entries_.end(),
                         [](const ArchiveEntry& a, const ArchiveEntry& b) { return a.epoch < b.epoch; });
    }

private:
    std::vector<ArchiveEntry> entries_;
};

struct ReachEpoch {
    std::size_t epoch;
};

struct SampleSource {
    Vector input;
};

struct Unsafe {
    Vector witness;  // violating output, in the network's stored output units
    std::variant<ReachEpoch, SampleSource> source;
};

struct UnknownWithConfidence {
    double cl = 0.0;
    std::size_t epochs_run = 0;
    std::size_t samples_checked = 0;
    bool timed_out = false;
};

struct ConfigFailure {
    std::string message;
};

using Verdict = std::variant<Unsafe, UnknownWithConfidence, ConfigFailure>;

/// Verdict plus the bookkeeping a report needs.
struct VerificationRun {
    Verdict verdict;
    std::size_t epochs_run = 0;
    std::vector<double> epoch_ms;  // per completed epoch, in epoch order
    double wall_ms = 0.0;
    EpochArchive archive;
};

// ---------------------------------------------------------------------------
// Sampling and confidence

/// Uniform draws from the union of boxes; a box is chosen with probability
/// proportional to its volume over non-degenerate coordinates.
inline std::vector<Vector> draw_samples(const std::vector<InputRegion>& boxes, std::size_t count, Rng& rng) {
    if (boxes.empty()) throw ConfigError("no input box to sample");
    std::vector<double> weight;
    double total = 0.0;
    for (const auto& b : boxes) {
        if (!b.finite()) throw ConfigError("cannot sample an unbounded box");
        double w = 1.0;
        for (Index i = 0; i < b.dim(); ++i) {
            const double width = b.upper(i) - b.lower(i);
            if (width > 0.0) w *= width;
        }
        weight.push_back(w);
        total += w;
    }
    std::vector<Vector> out;
    out.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        std::size_t which = 0;
        if (boxes.size() > 1) {
            double pick = rng.uniform() * total;
            while (which + 1 < boxes.size() && pick >= weight[which]) pick -= weight[which++];
        }
        const InputRegion& b = boxes[which];
        Vector x(b.dim());
        for (Index i = 0; i < b.dim(); ++i) x(i) = rng.uniform(b.lower(i), b.upper(i));
        out.push_back(std::move(x));
    }
    return out;
}

/// First sample whose output violates the condition.
inline std::optional<Vector> sample_check(const Network& net, const BoundProperty& prop,
                                          const std::vector<Vector>& samples, double tol = kLpTol) {
    for (const auto& s : samples) {
        if (point_violates(evaluate(net, s), prop.output, tol)) return s;
    }
    return std::nullopt;
}

inline std::optional<Vector> sample_check(const Network& net, const BoundProperty& prop, const VerifierConfig& cfg,
                                          Rng& rng) {
    return sample_check(net, prop, draw_samples(prop.inputs, cfg.sample_count, rng), cfg.tol);
}

/// Fraction of samples whose output lies in the convex hull of the union of archived polytopes.
inline double confidence_level(const PolytopeSet& archive, const Network& net, const std::vector<Vector>& samples,
                               double tol = kLpTol) {
    if (archive.empty()) throw ConfigError("confidence level needs at least one archived polytope");
    if (samples.empty()) throw ConfigError("confidence level needs at least one sample");
    const HullMembership hull(archive);
    std::size_t inside = 0;
    for (const auto& s : samples) {
        if (hull.contains(evaluate(net, s), tol)) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(samples.size());
}

inline double confidence_level(const EpochArchive& archive, const Network& net, const std::vector<Vector>& samples,
                               double tol = kLpTol) {
    return confidence_level(archive.polytopes(), net, samples, tol);
}

// ---------------------------------------------------------------------------
// The epoch loop

namespace detail {

struct EpochOutcome {
    bool completed = false;
    std::vector<VPolytope> outputs;  // one per input box
    std::optional<Vector> witness;
    double ms = 0.0;
};

inline EpochOutcome run_epoch(const std::vector<VPolytope>& inputs, const Network& net, const BoundProperty& prop,
                              const VerifierConfig& cfg, std::uint64_t seed,
                              const std::function<bool()>& should_stop) {
    const auto start = std::chrono::steady_clock::now();
    EpochOutcome out;
    Rng rng(seed);
    for (const auto& input : inputs) {
        auto result = propagate_under(input, net, cfg.strategy, rng, should_stop);
        if (!result) return out;
        if (auto w = polytope_violates(*result, prop.output, cfg.tol)) {
            out.witness = std::move(*w);
            out.outputs.push_back(std::move(*result));
            break;
        }
        out.outputs.push_back(std::move(*result));
    }
    out.completed = true;
    out.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return out;
}

}  // namespace detail

/// Full run with timings and archive.
inline VerificationRun verify_detailed(const Network& net, const PropertySpec& spec, const VerifierConfig& cfg) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    VerificationRun run;
    auto finish = [&](Verdict v) {
        run.verdict = std::move(v);
        run.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
        return std::move(run);
    };

    BoundProperty prop;
    std::vector<VPolytope> inputs;
    try {
        cfg.validate();
        prop = bind_property(spec, net);
        for (const auto& box : prop.inputs) inputs.push_back(input_vertices(box));
    } catch (const ConfigError& e) {
        return finish(ConfigFailure{e.what()});
    }

    const auto deadline = start + cfg.timeout;
    // Lowest epoch with a witness so far; only later epochs are cancelled, so
    // parallel runs report the same witness as sequential ones.
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::atomic<std::size_t> best{kNone};
    std::atomic<bool> failed{false};
    std::atomic<bool> timed_out{false};
    auto should_stop_at = [&](std::size_t epoch) {
        if (failed.load(std::memory_order_relaxed) || epoch > best.load(std::memory_order_relaxed)) return true;
        if (clock::now() >= deadline) {
            timed_out.store(true, std::memory_order_relaxed);
            return true;
        }
        return false;
    };

    std::optional<Unsafe> found;
    std::mutex mu;
    std::vector<std::pair<std::size_t, double>> timings;

    auto record = [&](std::size_t epoch, std::uint64_t seed, detail::EpochOutcome&& outcome) {
        std::lock_guard lock(mu);
        timings.emplace_back(epoch, outcome.ms);
        for (auto& p : outcome.outputs) run.archive.append({std::move(p), epoch, seed});
        if (outcome.witness && epoch < best.load()) {
            found = Unsafe{std::move(*outcome.witness), ReachEpoch{epoch}};
            best.store(epoch);
        }
    };

    auto epoch_job = [&](std::size_t epoch) {
        const std::uint64_t seed = epoch_seed(cfg.master_seed, epoch);
        auto outcome = detail::run_epoch(inputs, net, prop, cfg, seed, [&] { return should_stop_at(epoch); });
        if (!outcome.completed) return false;
        record(epoch, seed, std::move(outcome));
        return true;
    };

    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(cfg.parallelism, cfg.epochs));
    if (workers <= 1) {
        for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
            if (should_stop_at(epoch) || !epoch_job(epoch) || found) break;
        }
    } else {
        std::atomic<std::size_t> next{1};
        std::exception_ptr failure;
        {
            std::vector<std::jthread> pool;
            for (unsigned w = 0; w < workers; ++w) {
                pool.emplace_back([&] {
                    try {
                        for (;;) {
                            const std::size_t epoch = next.fetch_add(1);
                            if (epoch > cfg.epochs || should_stop_at(epoch) || !epoch_job(epoch)) break;
                        }
                    } catch (...) {
                        std::lock_guard lock(mu);
                        if (!failure) failure = std::current_exception();
                        failed.store(true);
                    }
                });
            }
        }
        if (failure) std::rethrow_exception(failure);
        run.archive.sort_by_epoch();
        if (found) {
            // Drop epochs past the witness that finished before cancellation.
            const std::size_t limit = best.load();
            EpochArchive kept;
            for (const auto& e : run.archive.entries()) {
                if (e.epoch <= limit) kept.append(e);
            }
            run.archive = std::move(kept);
            std::erase_if(timings, [&](const auto& t) { return t.first > limit; });
        }
    }

    std::sort(timings.begin(), timings.end());
    for (const auto& [epoch, ms] : timings) run.epoch_ms.push_back(ms);
    run.epochs_run = timings.size();
    if (found) return finish(std::move(*found));

    Rng sample_rng(epoch_seed(cfg.master_seed, 0));
    const std::vector<Vector> samples = draw_samples(prop.inputs, cfg.sample_count, sample_rng);
    if (auto s = sample_check(net, prop, samples, cfg.tol)) {
        Vector y = evaluate(net, *s);
        return finish(Unsafe{std::move(y), SampleSource{std::move(*s)}});
    }
    UnknownWithConfidence unknown;
    unknown.epochs_run = run.epochs_run;
    unknown.samples_checked = samples.size();
    unknown.timed_out = timed_out.load();
    if (cfg.compute_confidence && !run.archive.empty()) {
        unknown.cl = confidence_level(run.archive, net, samples, cfg.tol);
    }
    return finish(unknown);
}

inline Verdict verify(const Network& net, const PropertySpec& spec, const VerifierConfig& cfg) {
    return verify_detailed(net, spec, cfg).verdict;
}

}  // namespace urv
