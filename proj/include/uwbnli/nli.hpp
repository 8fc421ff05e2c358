#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <thread>
#include <vector>

#include "uwbnli/error.hpp"
#include "uwbnli/fiber.hpp"
#include "uwbnli/profile_fit.hpp"
#include "uwbnli/scenario.hpp"
#include "uwbnli/units.hpp"

namespace uwbnli {

/// Inputs available to a per-channel NLI correction.
struct RhoContext {
    std::size_t channel = 0;            // 0-based position in the comb
    double frequency_thz = 0.0;
    std::size_t span = 0;               // 0-based span index
    double accumulated_dispersion = 0.0; // ps^2, sum over earlier spans of beta2_eff(f, f) * L
    ModulationFormat format = ModulationFormat::Gaussian;
};

/// Multiplicative correction applied to each interfering channel's term.
/// Must be pure and return a positive value.
using RhoCorrection = std::function<double(const RhoContext&)>;

inline double rho_identity(const RhoContext&) { return 1.0; }

inline RhoCorrection constant_rho(double value) {
    if (!(value > 0.0)) throw InvariantError("rho: constant must be > 0");
    return [value](const RhoContext&) { return value; };
}

struct SeriesOrder {
    int order = 1;
    int uncapped = 1;
    bool capped = false;
};

/// Number of exponential-expansion terms needed for the fitted loss profiles:
/// max over channels of floor(10 |2 alpha1 / sigma|) + 1, limited to `cap`.
inline SeriesOrder series_order(std::span<const ChannelFit> fits, int cap = 30) {
    if (cap < 1) throw InvariantError("series_order: cap must be >= 1");
    double worst = 0.0;
    for (const auto& f : fits) {
        if (!(f.sigma > 0.0)) throw InvariantError("series_order: sigma must be > 0");
        worst = std::max(worst, std::abs(2.0 * f.alpha1 / f.sigma));
    }
    SeriesOrder out;
    const double raw = std::floor(10.0 * worst) + 1.0;
    out.uncapped = raw > 1e6 ? 1000000 : static_cast<int>(raw);
    out.order = std::min(out.uncapped, cap);
    out.capped = out.uncapped > cap;
    return out;
}

/// asinh(pi^2 beta2 R_n (f_m - f_n + (-1)^j R_m / 2) / (2 alpha0 + k sigma)).
/// Units: ps^2/km, GBaud, THz, 1/km.
inline double psi(double beta2_eff, double rate_n_gbaud, double df_thz, int j, double rate_m_gbaud, double alpha0,
                  int k, double sigma) {
    const double den = 2.0 * alpha0 + static_cast<double>(k) * sigma;
    if (den == 0.0) throw NumericalError("psi: zero denominator");
    const double offset = df_thz + (j % 2 == 0 ? 0.5 : -0.5) * gbaud_to_thz(rate_m_gbaud);
    return std::asinh(kPi * kPi * beta2_eff * gbaud_to_thz(rate_n_gbaud) * offset / den);
}

struct NliSpanResult {
    std::vector<double> nli_w;        // per channel, W
    std::vector<double> frequencies;  // THz, identifies the comb
    int series_order = 1;
    bool series_capped = false;
    std::size_t clamped_pairs = 0;    // pairs whose beta2_eff hit the dispersion floor
};

/// Per-pair NLI terms without the rho factor: the span NLI of channel n is
/// sum_m rho_m * terms(n, m).
struct NliTerms {
    std::size_t channels = 0;
    std::vector<double> values; // row-major [n][m], W
    std::vector<double> frequencies;
    SeriesOrder order;
    std::size_t clamped_pairs = 0;

    double operator()(std::size_t n, std::size_t m) const { return values[n * channels + m]; }
};

struct NliOptions {
    int series_cap = 30;
    double dispersion_floor = 1e-4; // ps^2/km
    unsigned threads = 1;
    int series_extra = 0; // terms added past the automatic order (truncation studies)

    static NliOptions from(const SolverSettings& s, unsigned threads = 1) {
        return NliOptions{s.series_cap, s.dispersion_floor, threads, 0};
    }
};

namespace detail {

inline constexpr int kAsinhTerms = 14;

/// Coefficients of asinh(x) - ln(2x) in powers of x^-2.
inline const std::array<double, kAsinhTerms>& asinh_tail_coefficients() {
    static const std::array<double, kAsinhTerms> c = [] {
        std::array<double, kAsinhTerms> out{};
        double binom = 1.0; // C(2i, i)
        double four = 1.0;
        for (int i = 1; i <= kAsinhTerms; ++i) {
            binom *= static_cast<double>((2 * i) * (2 * i - 1)) / static_cast<double>(i * i);
            four *= 4.0;
            out[i - 1] = (i % 2 == 1 ? 1.0 : -1.0) * binom / (four * 2.0 * i);
        }
        return out;
    }();
    return c;
}

/// Ratio |A| / D_max above which the large-argument expansion of asinh is
/// used for every k at once.
inline constexpr double kAsymptoticRatio = 4.0;

/// Per-interfering-channel series data: W_k = sum_q of the (k, q) weights,
/// with the q-sum folded in because psi does not depend on q.
struct SeriesWeights {
    std::vector<double> w;   // k = 0..M
    std::vector<double> den; // 2 alpha0 + k sigma
    double s0 = 0.0;         // sum W_k
    double slog = 0.0;       // sum W_k ln D_k
    std::array<double, kAsinhTerms> s2{}; // sum W_k D_k^(2i)
    double d_max = 0.0;
};

inline SeriesWeights series_weights(const ChannelFit& fit, int order) {
    SeriesWeights sw;
    const std::size_t terms = static_cast<std::size_t>(order) + 1;
    sw.w.assign(terms, 0.0);
    sw.den.resize(terms);
    const double x = 2.0 * fit.alpha1 / fit.sigma;
    for (std::size_t k = 0; k < terms; ++k) {
        sw.den[k] = 2.0 * fit.alpha0 + static_cast<double>(k) * fit.sigma;
        if (!(sw.den[k] > 0.0)) throw NumericalError("nli: non-positive series denominator (alpha0 <= 0?)");
    }
    if (x == 0.0) {
        sw.w[0] = 1.0 / (4.0 * fit.alpha0);
    } else {
        // (2 alpha1/sigma)^(k+q) e^(-4 alpha1/sigma) / (k! q! (4 alpha0 + (k+q) sigma)), in log domain.
        const double log_x = std::log(std::abs(x));
        const double shift = -4.0 * fit.alpha1 / fit.sigma;
        std::vector<double> log_fact(terms), log_kq(2 * terms - 1);
        for (std::size_t k = 1; k < terms; ++k) log_fact[k] = log_fact[k - 1] + std::log(static_cast<double>(k));
        for (std::size_t kq = 0; kq < log_kq.size(); ++kq) {
            const double lin_den = 4.0 * fit.alpha0 + static_cast<double>(kq) * fit.sigma;
            if (!(lin_den > 0.0)) throw NumericalError("nli: non-positive series denominator (alpha0 <= 0?)");
            log_kq[kq] = static_cast<double>(kq) * log_x + shift - std::log(lin_den);
        }
        for (std::size_t k = 0; k < terms; ++k) {
            double acc = 0.0;
            for (std::size_t q = 0; q < terms; ++q) {
                const double mag = std::exp(log_kq[k + q] - log_fact[k] - log_fact[q]);
                acc += (x < 0.0 && (k + q) % 2 == 1) ? -mag : mag;
            }
            sw.w[k] = acc;
        }
    }
    // Trailing terms far below double precision only push D_max up and
    // keep near pairs off the asymptotic path.
    double total = 0.0;
    for (double v : sw.w) total += std::abs(v);
    std::size_t keep = terms;
    while (keep > 1 && std::abs(sw.w[keep - 1]) < 1e-20 * total) --keep;
    sw.w.resize(keep);
    sw.den.resize(keep);
    sw.d_max = sw.den.back();
    for (std::size_t k = 0; k < sw.w.size(); ++k) {
        sw.s0 += sw.w[k];
        sw.slog += sw.w[k] * std::log(sw.den[k]);
        const double d2 = sw.den[k] * sw.den[k];
        double p = 1.0;
        for (int i = 0; i < kAsinhTerms; ++i) {
            p *= d2;
            sw.s2[i] += sw.w[k] * p;
        }
    }
    return sw;
}

/// sum_k W_k asinh(a / D_k) by direct evaluation.
inline double weighted_asinh_direct(const SeriesWeights& sw, double a) {
    double acc = 0.0;
    for (std::size_t k = 0; k < sw.w.size(); ++k)
        if (sw.w[k] != 0.0) acc += sw.w[k] * std::asinh(a / sw.den[k]);
    return acc;
}

/// sum_k W_k asinh(a / D_k) minus its leading ln(2|a|) S0 part, for |a| >= 8 D_max.
inline double weighted_asinh_tail(const SeriesWeights& sw, double a) {
    const auto& c = asinh_tail_coefficients();
    const double inv2 = 1.0 / (a * a);
    const double r = sw.d_max * sw.d_max * inv2; // bounds |term i| / sum |W_k| by r^i
    double p = 1.0, bound = 1.0, acc = 0.0;
    for (int i = 0; i < kAsinhTerms && bound > 1e-18; ++i) {
        p *= inv2;
        bound *= r;
        acc += c[i] * sw.s2[i] * p;
    }
    return acc - sw.slog;
}

inline double weighted_asinh(const SeriesWeights& sw, double a) {
    if (std::abs(a) < kAsymptoticRatio * sw.d_max) return weighted_asinh_direct(sw, a);
    const double s = a > 0.0 ? 1.0 : -1.0;
    return s * (std::log(2.0 * std::abs(a)) * sw.s0 + weighted_asinh_tail(sw, a));
}

/// sum_j (-1)^j sum_k W_k psi(a_j / D_k) with a_0 - a_1 = gap.
inline double psi_difference(const SeriesWeights& sw, double a0, double a1, double gap) {
    const double lim = kAsymptoticRatio * sw.d_max;
    if (std::abs(a0) >= lim && std::abs(a1) >= lim && (a0 > 0.0) == (a1 > 0.0)) {
        // Both in the asymptotic regime on the same side: take the log
        // difference directly to avoid cancellation for distant pairs.
        const double s = a0 > 0.0 ? 1.0 : -1.0;
        const double log_ratio = std::log1p(gap / a1);
        const auto& c = asinh_tail_coefficients();
        const double inv0 = 1.0 / (a0 * a0), inv1 = 1.0 / (a1 * a1);
        const double r = sw.d_max * sw.d_max * std::max(inv0, inv1);
        double p0 = 1.0, p1 = 1.0, bound = 1.0, acc = 0.0;
        for (int i = 0; i < kAsinhTerms && bound > 1e-18; ++i) {
            p0 *= inv0;
            p1 *= inv1;
            bound *= r;
            acc += c[i] * sw.s2[i] * (p0 - p1);
        }
        return s * (log_ratio * sw.s0 + acc);
    }
    return weighted_asinh(sw, a0) - weighted_asinh(sw, a1);
}

struct PairInputs {
    std::vector<double> f;       // THz
    std::vector<double> rate;    // THz
    std::vector<double> aeff;    // um^2
    std::vector<double> power;   // W
    std::vector<SeriesWeights> weights;
};

inline double clamp_dispersion(double b, double floor, bool& clamped) {
    clamped = std::abs(b) < floor;
    if (!clamped) return b;
    return b < 0.0 ? -floor : floor;
}

/// Row n of the terms matrix; returns the number of clamped pairs.
inline std::size_t nli_row(std::size_t n, const PairInputs& in, const FiberSpec& fiber, double floor,
                           double* row) {
    const std::size_t n_ch = in.f.size();
    std::size_t clamped_pairs = 0;
    const double pn = in.power[n];
    for (std::size_t m = 0; m < n_ch; ++m) {
        const double pm = in.power[m];
        if (pn == 0.0 || pm == 0.0) {
            row[m] = 0.0;
            continue;
        }
        bool clamped = false;
        const double b2 = clamp_dispersion(effective_beta2(fiber, in.f[n], in.f[m]), floor, clamped);
        clamped_pairs += clamped ? 1 : 0;
        const double g = gamma_from_areas(fiber.n2, in.f[n], in.aeff[n], in.aeff[m]);
        const double rm = in.rate[m];
        const double scale = kPi * kPi * b2 * in.rate[n];
        const double df = in.f[m] - in.f[n];
        const double a0 = scale * (df + 0.5 * rm);
        const double a1 = scale * (df - 0.5 * rm);
        const double sum = psi_difference(in.weights[m], a0, a1, scale * rm);
        const double pref = (16.0 / 27.0) * pn * g * g * pm * pm * (m == n ? 1.0 : 2.0) / (2.0 * kPi * rm * rm * b2);
        row[m] = pref * sum;
    }
    return clamped_pairs;
}

inline PairInputs pair_inputs(std::span<const double> launch_w, std::span<const Channel> comb,
                              std::span<const ChannelFit> fits, const FiberSpec& fiber, int order) {
    const std::size_t n_ch = comb.size();
    PairInputs in;
    in.f.resize(n_ch);
    in.rate.resize(n_ch);
    in.aeff.resize(n_ch);
    in.power.assign(launch_w.begin(), launch_w.end());
    in.weights.reserve(n_ch);
    for (std::size_t i = 0; i < n_ch; ++i) {
        in.f[i] = comb[i].frequency_thz;
        in.rate[i] = gbaud_to_thz(comb[i].symbol_rate_gbaud);
        in.aeff[i] = effective_area(fiber, in.f[i]);
        in.weights.push_back(series_weights(fits[i], order));
    }
    return in;
}

inline void check_nli_inputs(std::span<const double> launch_w, std::span<const Channel> comb,
                             std::span<const ChannelFit> fits) {
    if (launch_w.size() != comb.size() || fits.size() != comb.size())
        throw InvariantError("nli: launch powers, fits and comb sizes differ");
    for (double p : launch_w)
        if (!(p >= 0.0) || !std::isfinite(p)) throw InvariantError("nli: launch powers must be >= 0");
}

/// Neumaier-compensated sum in index order.
inline double compensated_sum(std::span<const double> v) {
    double sum = 0.0, comp = 0.0;
    for (double x : v) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    return sum + comp;
}

} // namespace detail

/// All pairwise span NLI terms for the given launch powers and fitted loss
/// profiles. Rows are independent and may be split across threads.
inline NliTerms nli_terms(std::span<const double> launch_w, std::span<const Channel> comb,
                          std::span<const ChannelFit> fits, const FiberSpec& fiber, const NliOptions& opt = {}) {
    detail::check_nli_inputs(launch_w, comb, fits);
    NliTerms out;
    out.channels = comb.size();
    out.order = series_order(fits, opt.series_cap);
    out.order.order += std::max(0, opt.series_extra);
    const auto in = detail::pair_inputs(launch_w, comb, fits, fiber, out.order.order);
    out.frequencies = in.f;
    out.values.assign(out.channels * out.channels, 0.0);

    const unsigned workers = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(out.channels)));
    std::vector<std::size_t> clamped(workers, 0);
    auto work = [&](unsigned w) {
        for (std::size_t n = w; n < out.channels; n += workers)
            clamped[w] += detail::nli_row(n, in, fiber, opt.dispersion_floor, &out.values[n * out.channels]);
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (auto c : clamped) out.clamped_pairs += c;
    return out;
}

/// Span NLI of every channel from precomputed terms and per-channel rho.
inline NliSpanResult apply_rho(const NliTerms& terms, std::span<const double> rho) {
    if (rho.size() != terms.channels) throw InvariantError("nli: rho size does not match comb");
    for (double r : rho)
        if (!(r > 0.0) || !std::isfinite(r)) throw InvariantError("nli: rho must be > 0");
    NliSpanResult out;
    out.frequencies = terms.frequencies;
    out.series_order = terms.order.order;
    out.series_capped = terms.order.capped;
    out.clamped_pairs = terms.clamped_pairs;
    out.nli_w.resize(terms.channels);
    std::vector<double> scratch(terms.channels);
    for (std::size_t n = 0; n < terms.channels; ++n) {
        for (std::size_t m = 0; m < terms.channels; ++m) scratch[m] = rho[m] * terms(n, m);
        out.nli_w[n] = detail::compensated_sum(scratch);
    }
    return out;
}

inline std::vector<double> evaluate_rho(const RhoCorrection& rho, std::span<const Channel> comb, std::size_t span,
                                        std::span<const double> accumulated_dispersion) {
    std::vector<double> out(comb.size());
    for (std::size_t m = 0; m < comb.size(); ++m)
        out[m] = rho(RhoContext{m, comb[m].frequency_thz, span,
                                accumulated_dispersion.empty() ? 0.0 : accumulated_dispersion[m], comb[m].format});
    return out;
}

/// Span NLI of every channel.
inline NliSpanResult nli_power_span(std::span<const double> launch_w, std::span<const Channel> comb,
                                    std::span<const ChannelFit> fits, const FiberSpec& fiber,
                                    const RhoCorrection& rho = rho_identity, const NliOptions& opt = {},
                                    std::size_t span = 0, std::span<const double> accumulated_dispersion = {}) {
    const auto terms = nli_terms(launch_w, comb, fits, fiber, opt);
    return apply_rho(terms, evaluate_rho(rho, comb, span, accumulated_dispersion));
}

/// Span NLI of a single channel n (0-based), with the per-m breakdown.
struct NliChannelResult {
    double nli_w = 0.0;
    std::vector<double> by_interferer; // W, rho applied
    SeriesOrder order;
    std::size_t clamped_pairs = 0;
};

inline NliChannelResult nli_power_channel(std::size_t n, std::span<const double> launch_w,
                                          std::span<const Channel> comb, std::span<const ChannelFit> fits,
                                          const FiberSpec& fiber, const RhoCorrection& rho = rho_identity,
                                          const NliOptions& opt = {}, std::size_t span = 0,
                                          std::span<const double> accumulated_dispersion = {}) {
    detail::check_nli_inputs(launch_w, comb, fits);
    if (n >= comb.size()) throw InvariantError("nli: channel index out of range");
    NliChannelResult out;
    out.order = series_order(fits, opt.series_cap);
    out.order.order += std::max(0, opt.series_extra);
    const auto in = detail::pair_inputs(launch_w, comb, fits, fiber, out.order.order);
    out.by_interferer.assign(comb.size(), 0.0);
    out.clamped_pairs = detail::nli_row(n, in, fiber, opt.dispersion_floor, out.by_interferer.data());
    const auto r = evaluate_rho(rho, comb, span, accumulated_dispersion);
    for (std::size_t m = 0; m < comb.size(); ++m) {
        if (!(r[m] > 0.0)) throw InvariantError("nli: rho must be > 0");
        out.by_interferer[m] *= r[m];
    }
    out.nli_w = detail::compensated_sum(out.by_interferer);
    return out;
}

/// Incoherent accumulation over spans.
inline std::vector<double> accumulate_link(std::span<const NliSpanResult> spans) {
    if (spans.empty()) return {};
    std::vector<double> total(spans.front().nli_w.size(), 0.0);
    for (const auto& s : spans) {
        if (s.frequencies != spans.front().frequencies || s.nli_w.size() != total.size())
            throw InvariantError("accumulate_link: spans were evaluated on different combs");
        for (std::size_t n = 0; n < total.size(); ++n) total[n] += s.nli_w[n];
    }
    return total;
}

} // namespace uwbnli
