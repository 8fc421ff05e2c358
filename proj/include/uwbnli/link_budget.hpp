#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "uwbnli/error.hpp"
#include "uwbnli/fiber.hpp"
#include "uwbnli/nli.hpp"
#include "uwbnli/profile_fit.hpp"
#include "uwbnli/raman_solver.hpp"
#include "uwbnli/scenario.hpp"
#include "uwbnli/transceiver.hpp"
#include "uwbnli/units.hpp"

namespace uwbnli {

/// ASE power (W) in the symbol-rate bandwidth of one lumped amplifier with
/// linear gain G. `gain_minus_one` may be passed separately for precision
/// when G is close to 1.
inline double ase_power_gain(double f_thz, double nf_db, double gain, double bandwidth_gbaud,
                             std::optional<double> gain_minus_one = std::nullopt) {
    if (!(gain >= 1.0)) throw ConfigError("amplifier", "gain below 1 (attenuating amplifier)");
    if (!(nf_db >= 0.0)) throw ConfigError("amplifier", "noise figure must be >= 0 dB");
    const double gm1 = gain_minus_one.value_or(gain - 1.0);
    return kPlanck * f_thz * 1e12 * db_to_linear(nf_db) * gm1 * bandwidth_gbaud * 1e9;
}

/// ASE added by the amplifier that restores `channel` from `span_output_w`
/// back to its launch power.
inline double ase_power(const Channel& channel, double nf_db, double launch_w, double span_output_w) {
    if (!(span_output_w > 0.0)) throw ConfigError("amplifier", "span output power must be > 0");
    return ase_power_gain(channel.frequency_thz, nf_db, launch_w / span_output_w, channel.symbol_rate_gbaud);
}

/// Generalized OSNR in dB.
inline double gosnr(double launch_w, double ase_w, double nli_w) {
    const double noise = ase_w + nli_w;
    if (!(noise > 0.0)) throw InvariantError("gosnr: total noise must be > 0");
    if (launch_w == 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(launch_w / noise);
}

struct ChannelReport {
    std::size_t index = 0;
    double frequency_thz = 0.0;
    double symbol_rate_gbaud = 0.0;
    BandLabel band = BandLabel::C;
    double launch_w = 0.0;
    double ase_w = 0.0;
    double nli_w = 0.0;
    double gosnr_db = 0.0;
    double info_rate = 0.0;      // bits/symbol
    double data_rate_gbps = 0.0; // info_rate * symbol rate
};

/// Per-span diagnostics retained in every report.
struct SpanSummary {
    int series_order = 1;
    bool series_capped = false;
    std::size_t clamped_pairs = 0;
    double max_fit_residual_db = 0.0;
    double ode_validation_error = 0.0;
    bool reused = false; // identical to the previous span, solved once
};

/// Full per-span intermediate results, filled on request.
struct LinkTrace {
    std::vector<PowerProfile> profiles;
    std::vector<SpanFit> fits;
    std::vector<NliSpanResult> nli;
};

struct LinkReport {
    std::vector<ChannelReport> channels;
    std::vector<SpanSummary> spans;
    double throughput_tbps = 0.0;
};

struct LinkOptions {
    RhoCorrection rho = rho_identity;
    unsigned threads = 1;
    LinkTrace* trace = nullptr;
};

/// Sum of IR * R over channels in Tbit/s.
inline double total_throughput_tbps(std::span<const ChannelReport> channels) {
    double s = 0.0;
    for (const auto& c : channels) s += c.data_rate_gbps;
    return s * 1e-3;
}

/// Evaluate the whole link for the given per-channel launch powers (W),
/// identical at every span input. Consecutive identical spans are solved once.
inline LinkReport evaluate_link(const Scenario& scenario, std::span<const double> launch_w,
                                const LinkOptions& opt = {}) {
    if (scenario.spans.empty()) throw InvariantError("evaluate_link: scenario needs at least one span");
    const auto& comb = scenario.channels;
    const std::size_t n_ch = comb.size();
    if (launch_w.size() != n_ch) throw InvariantError("evaluate_link: launch powers do not match comb");
    const auto& solver = scenario.solver;
    const NliOptions nli_opt = NliOptions::from(solver, opt.threads);

    LinkReport report;
    report.channels.resize(n_ch);
    std::vector<double> ase(n_ch, 0.0), nli(n_ch, 0.0), acc_disp(n_ch, 0.0);
    std::vector<double> nf(n_ch);

    std::optional<PowerProfile> profile;
    std::optional<SpanFit> fit;
    std::optional<NliTerms> terms;
    const FiberSpec* prev = nullptr;
    for (std::size_t s = 0; s < scenario.spans.size(); ++s) {
        const Span& span = scenario.spans[s];
        const bool reuse = prev != nullptr && *prev == span.fiber;
        if (!reuse) {
            profile = propagate_span(launch_w, span.fiber, comb, solver);
            fit = fit_span(*profile, SigmaSearch::for_span(solver, span.fiber.length_km));
            terms = nli_terms(launch_w, comb, fit->channels, span.fiber, nli_opt);
        }
        prev = &span.fiber;

        const auto rho = evaluate_rho(opt.rho, comb, s, acc_disp);
        auto span_nli = apply_rho(*terms, rho);

        SpanSummary summary;
        summary.series_order = span_nli.series_order;
        summary.series_capped = span_nli.series_capped;
        summary.clamped_pairs = span_nli.clamped_pairs;
        summary.ode_validation_error = profile->validation_error;
        summary.reused = reuse;
        for (const auto& cf : fit->channels) summary.max_fit_residual_db = std::max(summary.max_fit_residual_db, cf.residual_db);
        report.spans.push_back(summary);

        for (std::size_t n = 0; n < n_ch; ++n) {
            nf[n] = noise_figure_db(scenario, span.amplifier, comb[n].frequency_thz);
            const double u_end = profile->log_gain_of(n).back(); // ln(P(L)/P(0))
            ase[n] += ase_power_gain(comb[n].frequency_thz, nf[n], std::exp(-u_end), comb[n].symbol_rate_gbaud,
                                     std::expm1(-u_end));
            nli[n] += span_nli.nli_w[n];
            acc_disp[n] += effective_beta2(span.fiber, comb[n].frequency_thz, comb[n].frequency_thz) *
                           span.fiber.length_km;
        }
        if (opt.trace) {
            opt.trace->profiles.push_back(*profile);
            opt.trace->fits.push_back(*fit);
            opt.trace->nli.push_back(std::move(span_nli));
        }
    }

    for (std::size_t n = 0; n < n_ch; ++n) {
        auto& c = report.channels[n];
        c.index = comb[n].index;
        c.frequency_thz = comb[n].frequency_thz;
        c.symbol_rate_gbaud = comb[n].symbol_rate_gbaud;
        c.band = band_of(scenario, c.frequency_thz).label;
        c.launch_w = launch_w[n];
        c.ase_w = ase[n];
        c.nli_w = nli[n];
        c.gosnr_db = gosnr(c.launch_w, c.ase_w, c.nli_w);
        c.info_rate = info_rate(scenario.transceiver, c.gosnr_db);
        c.data_rate_gbps = c.info_rate * c.symbol_rate_gbaud;
    }
    report.throughput_tbps = total_throughput_tbps(report.channels);
    return report;
}

/// Evaluate with the launch powers stored on the scenario's channels.
inline LinkReport evaluate_link(const Scenario& scenario, const LinkOptions& opt = {}) {
    const auto p = launch_powers(scenario.channels);
    return evaluate_link(scenario, p, opt);
}

} // namespace uwbnli
