#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <thread>
#include <vector>

#include "uwbnli/error.hpp"
#include "uwbnli/link_budget.hpp"
#include "uwbnli/scenario.hpp"
#include "uwbnli/units.hpp"

namespace uwbnli {

// ---------------------------------------------------------------------------
// Compass search
// ---------------------------------------------------------------------------

struct CompassSettings {
    double initial_step = 1.0;
    double min_step = 0.0625;
    int max_evaluations = 2000;
    double min_relative_improvement = 1e-3; // per step level; 0 disables the test
    unsigned threads = 1;
};

struct CompassResult {
    std::vector<double> x;
    double value = -std::numeric_limits<double>::infinity();
    double initial_value = -std::numeric_limits<double>::infinity();
    int evaluations = 0;
    bool feasible = false;
    double final_step = 0.0;
};

/// Maximizes `f` by polling +/- step along each coordinate (scaled by
/// `scales`) in a fixed order and moving to the first improving point. The
/// step is halved after a poll without improvement. `f` returns nullopt for
/// infeasible points. Results do not depend on the thread count: only the
/// evaluations up to and including the accepted candidate count toward the
/// budget.
template <class Objective>
CompassResult compass_search(Objective&& f, std::vector<double> x0, std::span<const double> scales,
                             const CompassSettings& cs) {
    const std::size_t dim = x0.size();
    if (scales.size() != dim) throw InvariantError("compass_search: scale vector size mismatch");
    if (!(cs.initial_step > 0.0 && cs.min_step > 0.0)) throw InvariantError("compass_search: steps must be > 0");

    CompassResult res;
    res.x = std::move(x0);
    const auto v0 = f(std::span<const double>(res.x));
    res.evaluations = 1;
    if (v0) {
        res.value = *v0;
        res.feasible = true;
    }
    res.initial_value = res.value;

    const std::size_t n_dir = 2 * dim;
    const unsigned batch = std::max(1u, cs.threads);
    double step = cs.initial_step;
    double level_start = res.value;
    std::size_t first_dir = 0;

    auto candidate = [&](std::size_t d) {
        std::vector<double> x = res.x;
        const std::size_t i = d / 2;
        x[i] += (d % 2 == 0 ? 1.0 : -1.0) * step * scales[i];
        return x;
    };

    while (step >= cs.min_step && res.evaluations < cs.max_evaluations) {
        bool improved = false;
        std::size_t polled = 0;
        while (polled < n_dir && res.evaluations < cs.max_evaluations && !improved) {
            const std::size_t room = static_cast<std::size_t>(cs.max_evaluations - res.evaluations);
            const std::size_t count = std::min({static_cast<std::size_t>(batch), n_dir - polled, room});
            std::vector<std::size_t> dirs(count);
            std::vector<std::vector<double>> xs(count);
            std::vector<std::optional<double>> vals(count);
            for (std::size_t c = 0; c < count; ++c) {
                dirs[c] = (first_dir + polled + c) % n_dir;
                xs[c] = candidate(dirs[c]);
            }
            if (count == 1) {
                vals[0] = f(std::span<const double>(xs[0]));
            } else {
                std::vector<std::thread> pool;
                for (std::size_t c = 0; c < count; ++c)
                    pool.emplace_back([&, c] { vals[c] = f(std::span<const double>(xs[c])); });
                for (auto& t : pool) t.join();
            }
            for (std::size_t c = 0; c < count; ++c) {
                ++res.evaluations;
                ++polled;
                if (vals[c] && (!res.feasible || *vals[c] > res.value)) {
                    res.x = std::move(xs[c]);
                    res.value = *vals[c];
                    res.feasible = true;
                    first_dir = dirs[c]; // retry the successful direction first
                    improved = true;
                    break;
                }
            }
        }
        if (improved) continue;
        if (res.evaluations >= cs.max_evaluations) break;
        // Full poll failed at this step size.
        const double gain = res.value - level_start;
        const double rel = std::isfinite(level_start) && level_start != 0.0 ? gain / std::abs(level_start)
                                                                             : (gain > 0.0 ? 1.0 : 0.0);
        if (cs.min_relative_improvement > 0.0 && res.feasible && rel < cs.min_relative_improvement) break;
        step *= 0.5;
        level_start = res.value;
        first_dir = 0;
    }
    res.final_step = step;
    return res;
}

// ---------------------------------------------------------------------------
// Launch power policy
// ---------------------------------------------------------------------------

/// Per-band cubic launch profile: P_dBm(f) = c0 + c1 x + c2 x^2 + c3 x^3 with
/// x = f - band centre in THz. Identical at every span input.
struct PowerPolicy {
    std::map<BandLabel, std::array<double, 4>> coefficients;

    bool operator==(const PowerPolicy&) const = default;

    static PowerPolicy flat(std::span<const BandLabel> bands, double dbm) {
        PowerPolicy p;
        for (auto b : bands) p.coefficients[b] = {dbm, 0.0, 0.0, 0.0};
        return p;
    }
};

/// Bands of `bands` that contain at least one channel of the comb, in frequency order.
inline std::vector<BandLabel> populated_bands(const Scenario& s) {
    std::vector<const Band*> found;
    for (const auto& c : s.channels) {
        const Band* b = &band_of(s, c.frequency_thz);
        if (std::find(found.begin(), found.end(), b) == found.end()) found.push_back(b);
    }
    std::sort(found.begin(), found.end(), [](const Band* a, const Band* b) { return a->lower_thz < b->lower_thz; });
    std::vector<BandLabel> out;
    for (const Band* b : found) out.push_back(b->label);
    return out;
}

/// Launch powers in dBm for every channel under `policy`.
inline std::vector<double> policy_powers_dbm(const PowerPolicy& policy, const Scenario& s) {
    std::vector<double> out;
    out.reserve(s.channels.size());
    for (const auto& c : s.channels) {
        const Band& b = band_of(s, c.frequency_thz);
        auto it = policy.coefficients.find(b.label);
        if (it == policy.coefficients.end())
            throw InvariantError("policy has no coefficients for band " + std::string(to_string(b.label)));
        const auto& k = it->second;
        const double x = c.frequency_thz - b.center_thz();
        out.push_back(k[0] + x * (k[1] + x * (k[2] + x * k[3])));
    }
    return out;
}

/// Launch powers in W, or nullopt if any channel falls outside the bounds.
inline std::optional<std::vector<double>> apply_policy(const PowerPolicy& policy, const Scenario& s) {
    auto dbm = policy_powers_dbm(policy, s);
    std::vector<double> w(dbm.size());
    for (std::size_t i = 0; i < dbm.size(); ++i) {
        if (dbm[i] < s.optimizer.power_min_dbm || dbm[i] > s.optimizer.power_max_dbm) return std::nullopt;
        w[i] = dbm_to_watt(dbm[i]);
    }
    return w;
}

struct OptimizeOptions {
    unsigned threads = 1;
    RhoCorrection rho = rho_identity;
    std::optional<PowerPolicy> start; // default: flat 0 dBm in every populated band
};

struct OptimizeResult {
    PowerPolicy policy;
    LinkReport report;
    int evaluations = 0;
    double initial_throughput_tbps = 0.0;
};

namespace detail {

/// Largest |f - band centre| among the comb's channels in the band, used to
/// scale coefficient steps so each term moves the outermost channel by the
/// same number of dB.
inline double band_extent(const Scenario& s, BandLabel label) {
    const Band* b = find_band(s.bands, label);
    double h = 0.0;
    for (const auto& c : s.channels)
        if (b->contains(c.frequency_thz)) h = std::max(h, std::abs(c.frequency_thz - b->center_thz()));
    return std::max(h, 0.05);
}

inline double clamp_start(const Scenario& s, double dbm) {
    return std::clamp(dbm, s.optimizer.power_min_dbm, s.optimizer.power_max_dbm);
}

// A warm start taken from a smaller comb can leave the bounds once the
// polynomial is evaluated at new, further-out channels. Such a band restarts
// flat at its mean power.
inline void make_feasible(PowerPolicy& policy, const Scenario& s) {
    const auto dbm = policy_powers_dbm(policy, s);
    std::map<BandLabel, std::pair<double, std::size_t>> mean;
    std::set<BandLabel> outside;
    for (std::size_t i = 0; i < dbm.size(); ++i) {
        const BandLabel b = band_of(s, s.channels[i].frequency_thz).label;
        mean[b].first += dbm[i];
        ++mean[b].second;
        if (dbm[i] < s.optimizer.power_min_dbm || dbm[i] > s.optimizer.power_max_dbm) outside.insert(b);
    }
    for (BandLabel b : outside) {
        const auto& [sum, n] = mean[b];
        policy.coefficients[b] = {clamp_start(s, sum / static_cast<double>(n)), 0.0, 0.0, 0.0};
    }
}

class PolicyObjective {
public:
    PolicyObjective(const Scenario& s, std::vector<BandLabel> free_bands, PowerPolicy base, const RhoCorrection& rho)
        : s_(s), bands_(std::move(free_bands)), base_(std::move(base)), rho_(rho) {}

    PowerPolicy policy(std::span<const double> x) const {
        PowerPolicy p = base_;
        for (std::size_t b = 0; b < bands_.size(); ++b)
            for (std::size_t k = 0; k < 4; ++k) p.coefficients[bands_[b]][k] = x[4 * b + k];
        return p;
    }

    std::vector<double> point(const PowerPolicy& p) const {
        std::vector<double> x;
        for (auto b : bands_) {
            const auto& c = p.coefficients.at(b);
            x.insert(x.end(), c.begin(), c.end());
        }
        return x;
    }

    std::vector<double> scales() const {
        std::vector<double> sc;
        for (auto b : bands_) {
            const double h = band_extent(s_, b);
            for (int k = 0; k < 4; ++k) sc.push_back(1.0 / std::pow(h, k));
        }
        return sc;
    }

    std::optional<double> operator()(std::span<const double> x) const {
        const auto w = apply_policy(policy(x), s_);
        if (!w) return std::nullopt;
        LinkOptions lo;
        lo.rho = rho_;
        return evaluate_link(s_, *w, lo).throughput_tbps;
    }

private:
    const Scenario& s_;
    std::vector<BandLabel> bands_;
    PowerPolicy base_;
    const RhoCorrection& rho_;
};

inline CompassSettings compass_settings(const OptimizerSettings& o, unsigned threads, int budget) {
    return CompassSettings{o.initial_step_db, o.min_step_db, budget, o.min_relative_improvement, threads};
}

} // namespace detail

/// Maximizes total throughput over the cubic coefficients of every populated
/// band by compass search. Deterministic for given inputs.
inline OptimizeResult optimize_launch(const Scenario& s, const OptimizeOptions& opt = {}) {
    const auto bands = populated_bands(s);
    if (bands.empty()) throw InvariantError("optimize_launch: no populated band");

    PowerPolicy start = PowerPolicy::flat(bands, detail::clamp_start(s, 0.0));
    if (opt.start)
        for (const auto& [label, c] : opt.start->coefficients)
            if (start.coefficients.count(label)) start.coefficients[label] = c;
    detail::make_feasible(start, s);

    OptimizeResult out;
    PowerPolicy current = start;
    const int budget = s.optimizer.max_evaluations;

    if (s.optimizer.mode == OptimizerMode::Joint) {
        detail::PolicyObjective obj(s, bands, current, opt.rho);
        const auto sc = obj.scales();
        const auto r = compass_search(obj, obj.point(current), sc, detail::compass_settings(s.optimizer, opt.threads, budget));
        out.evaluations = r.evaluations;
        if (!r.feasible) throw InvariantError("optimize_launch: no feasible policy within the evaluation budget");
        current = obj.policy(r.x);
        out.initial_throughput_tbps = r.initial_value;
    } else {
        // Band-by-band coordinate passes until a full pass stops improving.
        double best = -std::numeric_limits<double>::infinity();
        bool first = true;
        for (int pass = 0; pass < 3 && out.evaluations < budget; ++pass) {
            const double pass_start = best;
            for (auto b : bands) {
                if (out.evaluations >= budget) break;
                detail::PolicyObjective obj(s, {b}, current, opt.rho);
                const auto sc = obj.scales();
                const auto r = compass_search(obj, obj.point(current), sc,
                                              detail::compass_settings(s.optimizer, opt.threads, budget - out.evaluations));
                out.evaluations += r.evaluations;
                if (first) {
                    out.initial_throughput_tbps = r.initial_value;
                    first = false;
                }
                if (r.feasible && r.value >= best) {
                    current = obj.policy(r.x);
                    best = r.value;
                }
            }
            if (!std::isfinite(best)) throw InvariantError("optimize_launch: no feasible policy within the evaluation budget");
            if (std::isfinite(pass_start) && best - pass_start <= s.optimizer.min_relative_improvement * std::abs(pass_start))
                break;
        }
    }

    out.policy = current;
    LinkOptions lo;
    lo.rho = opt.rho;
    lo.threads = opt.threads;
    out.report = evaluate_link(s, *apply_policy(current, s), lo);
    return out;
}

// ---------------------------------------------------------------------------
// Band-fill sweep
// ---------------------------------------------------------------------------

struct SweepStep {
    int step = 0;
    std::size_t channels = 0;
    std::size_t added = 0;
    BandLabel last_band = BandLabel::C;
    double throughput_tbps = 0.0;
    double marginal_ir = 0.0;      // delta throughput / added symbol rate, bits/symbol
    double added_rate_gbaud = 0.0; // symbol rate added in this step
    double added_mean_ir = 0.0;    // mean IR of the channels added in this step, bits/symbol
    int evaluations = 0;
    double initial_throughput_tbps = 0.0; // at the warm-start policy
    PowerPolicy policy;
    LinkReport report;
};

struct SweepOptions {
    unsigned threads = 1;
    RhoCorrection rho = rho_identity;
    std::size_t max_channels = 0; // 0: the whole fill sequence
    bool warm_start = true;
    std::function<void(const SweepStep&)> on_step;
};

/// Step sizes of the sweep: `increment` channels at a time, never crossing a
/// band boundary, so every band completion is its own step.
inline std::vector<std::size_t> sweep_counts(std::span<const FillSlot> seq, std::size_t increment, std::size_t limit) {
    if (increment < 1) throw InvariantError("band_fill_sweep: increment must be >= 1");
    std::vector<std::size_t> counts;
    const std::size_t total = limit == 0 ? seq.size() : std::min(limit, seq.size());
    std::size_t n = 0;
    while (n < total) {
        std::size_t band_end = n;
        while (band_end < total && seq[band_end].band == seq[n].band) ++band_end;
        n = std::min(n + increment, band_end);
        counts.push_back(n);
    }
    return counts;
}

/// Progressive band-fill: extend the comb through the grid's fill order,
/// re-optimizing the launch policy at each step (warm-started from the
/// previous step's policy).
inline std::vector<SweepStep> band_fill_sweep(const Scenario& tmpl, std::size_t increment,
                                              const SweepOptions& opt = {}) {
    if (!tmpl.grid) throw InvariantError("band_fill_sweep: scenario has no channel grid");
    const auto seq = fill_sequence(*tmpl.grid, tmpl.bands);
    const auto counts = sweep_counts(seq, increment, opt.max_channels);

    std::vector<SweepStep> steps;
    std::optional<PowerPolicy> previous;
    double prev_throughput = 0.0, prev_rate = 0.0;
    std::set<long long> previous_f; // frequencies of the previous comb, in MHz
    for (std::size_t i = 0; i < counts.size(); ++i) {
        Scenario s = tmpl;
        s.channels = comb_from_slots(*tmpl.grid, std::span<const FillSlot>(seq.data(), counts[i]));
        OptimizeOptions oo;
        oo.threads = opt.threads;
        oo.rho = opt.rho;
        if (opt.warm_start) oo.start = previous;
        auto r = optimize_launch(s, oo);

        SweepStep st;
        st.step = static_cast<int>(i) + 1;
        st.channels = counts[i];
        st.added = counts[i] - (i == 0 ? 0 : counts[i - 1]);
        st.last_band = seq[counts[i] - 1].band;
        st.throughput_tbps = r.report.throughput_tbps;
        double rate = 0.0;
        for (const auto& c : s.channels) rate += c.symbol_rate_gbaud;
        st.added_rate_gbaud = rate - prev_rate;
        st.marginal_ir = (st.throughput_tbps - prev_throughput) * 1e3 / st.added_rate_gbaud;
        std::size_t fresh = 0;
        for (const auto& c : r.report.channels)
            if (!previous_f.count(std::llround(c.frequency_thz * 1e6))) {
                st.added_mean_ir += c.info_rate;
                ++fresh;
            }
        if (fresh) st.added_mean_ir /= static_cast<double>(fresh);
        previous_f.clear();
        for (const auto& c : s.channels) previous_f.insert(std::llround(c.frequency_thz * 1e6));
        st.evaluations = r.evaluations;
        st.initial_throughput_tbps = r.initial_throughput_tbps;
        st.policy = r.policy;
        st.report = std::move(r.report);
        prev_throughput = st.throughput_tbps;
        prev_rate = rate;
        previous = st.policy;
        if (opt.on_step) opt.on_step(st);
        steps.push_back(std::move(st));
    }
    return steps;
}

} // namespace uwbnli
