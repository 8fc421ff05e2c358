#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "uwbnli/error.hpp"
#include "uwbnli/fiber.hpp"
#include "uwbnli/scenario.hpp"
#include "uwbnli/units.hpp"

// Reference GN-model NLI by direct numerical integration of the double
// frequency integral, for small combs with a frequency-flat loss and no ISRS.

namespace uwbnli {

enum class OracleMode {
    CenterPsd, // PSD at the channel centre times its symbol rate
    Bandwidth, // PSD integrated over [f_n - R_n/2, f_n + R_n/2]
};

struct OracleOptions {
    OracleMode mode = OracleMode::CenterPsd;
    int initial_nodes = 32;    // per integration segment
    int max_nodes = 2048;
    double tolerance_db = 0.02; // stop when doubling changes the result by less
    double grading = 6.0;       // sinh clustering of nodes toward the x = 0 / y = 0 ridges
    std::size_t max_channels = 9;
};

struct OracleResult {
    double nli_w = 0.0;
    int nodes = 0;
    double last_change_db = 0.0;
};

namespace detail {

struct OracleChannel {
    double lo, hi;  // THz
    double psd;     // W/THz
    double f;
};

/// Trapezoid weights over nodes; appends (node, weight) for [lo, hi], clustering
/// nodes toward 0 when it lies inside or at an end of the interval.
inline void add_segment(double lo, double hi, int n, double grading, std::vector<double>& x,
                        std::vector<double>& w) {
    if (!(hi > lo)) return;
    auto add_graded = [&](double a, double b) {
        // nodes a + (b - a) s_i with s clustered toward the end that is 0
        const bool toward_a = std::abs(a) <= std::abs(b);
        const double norm = std::sinh(grading);
        double prev = 0.0;
        std::vector<double> nodes(static_cast<std::size_t>(n) + 1);
        for (int i = 0; i <= n; ++i) {
            const double s = std::sinh(grading * static_cast<double>(i) / n) / norm;
            nodes[static_cast<std::size_t>(i)] = toward_a ? a + (b - a) * s : b - (b - a) * s;
        }
        if (!toward_a) std::reverse(nodes.begin(), nodes.end());
        for (int i = 0; i <= n; ++i) {
            const double cur = nodes[static_cast<std::size_t>(i)];
            const double left = i > 0 ? cur - prev : 0.0;
            const double right = i < n ? nodes[static_cast<std::size_t>(i) + 1] - cur : 0.0;
            x.push_back(cur);
            w.push_back(0.5 * (left + right));
            prev = cur;
        }
    };
    if (lo < 0.0 && hi > 0.0) {
        add_graded(lo, 0.0);
        add_graded(0.0, hi);
    } else if (lo == 0.0 || hi == 0.0) {
        add_graded(lo, hi);
    } else {
        const double h = (hi - lo) / n;
        for (int i = 0; i <= n; ++i) {
            x.push_back(lo + h * i);
            w.push_back(i == 0 || i == n ? 0.5 * h : h);
        }
    }
}

class GnIntegrand {
public:
    GnIntegrand(std::size_t n, std::span<const Channel> comb, std::span<const double> launch_w, const FiberSpec& fiber)
        : fiber_(fiber), fn_(comb[n].frequency_thz) {
        alpha_ = attenuation(fiber, fn_);
        e_ = std::exp(-2.0 * alpha_ * fiber.length_km);
        for (std::size_t i = 0; i < comb.size(); ++i) {
            const double r = gbaud_to_thz(comb[i].symbol_rate_gbaud);
            if (launch_w[i] > 0.0)
                ch_.push_back({comb[i].frequency_thz - 0.5 * r, comb[i].frequency_thz + 0.5 * r, launch_w[i] / r,
                               comb[i].frequency_thz});
        }
        for (const auto& c : ch_) {
            gamma_.push_back(gamma(fiber, fn_, c.f));
            beta_.push_back(effective_beta2(fiber, fn_, c.f));
        }
    }

    bool empty() const { return ch_.empty(); }

    /// NLI PSD (W/THz) at absolute frequency f.
    double psd(double f, int nodes, double grading) const {
        std::vector<double> xs, xw;
        for (const auto& a : ch_) add_segment(a.lo - f, a.hi - f, nodes, grading, xs, xw);
        const double loss_sq = 4.0 * alpha_ * alpha_;
        const double len = fiber_.length_km;
        const double tail = 1.0 + e_ * e_;
        std::vector<double> ys, yw;
        double outer = 0.0;
        for (std::size_t ix = 0; ix < xs.size(); ++ix) {
            const double x = xs[ix];
            const double g1 = psd_at(f + x);
            if (g1 == 0.0) continue;
            double inner = 0.0;
            for (const auto& b : ch_) {
                for (std::size_t c = 0; c < ch_.size(); ++c) {
                    const double lo = std::max(b.lo - f, ch_[c].lo - f - x);
                    const double hi = std::min(b.hi - f, ch_[c].hi - f - x);
                    if (!(hi > lo)) continue;
                    ys.clear();
                    yw.clear();
                    add_segment(lo, hi, nodes, grading, ys, yw);
                    const double k = 4.0 * kPi * kPi * beta_[c] * x;
                    double acc = 0.0;
                    for (std::size_t iy = 0; iy < ys.size(); ++iy) {
                        const double phi = k * ys[iy];
                        acc += yw[iy] * (tail - 2.0 * e_ * std::cos(phi * len)) / (loss_sq + phi * phi);
                    }
                    inner += b.psd * ch_[c].psd * gamma_[c] * gamma_[c] * acc;
                }
            }
            outer += xw[ix] * g1 * inner;
        }
        return (16.0 / 27.0) * outer;
    }

    double psd_at(double f) const {
        for (const auto& c : ch_)
            if (f >= c.lo && f <= c.hi) return c.psd;
        return 0.0;
    }

private:
    const FiberSpec& fiber_;
    double fn_;
    double alpha_ = 0.0;
    double e_ = 0.0;
    std::vector<OracleChannel> ch_;
    std::vector<double> gamma_;
    std::vector<double> beta_;
};

inline double oracle_once(const GnIntegrand& g, double fn, double rate_thz, int nodes, const OracleOptions& opt) {
    if (opt.mode == OracleMode::CenterPsd) return g.psd(fn, nodes, opt.grading) * rate_thz;
    const int k = std::max(8, nodes / 4);
    const double h = rate_thz / k;
    double acc = 0.0;
    for (int i = 0; i <= k; ++i) {
        const double f = fn - 0.5 * rate_thz + h * i;
        acc += (i == 0 || i == k ? 0.5 : 1.0) * g.psd(f, nodes, opt.grading);
    }
    return acc * h;
}

} // namespace detail

/// GN NLI power (W) of channel n (0-based) after one span, with rectangular
/// channel spectra. Requires the same attenuation at every lit channel.
inline OracleResult nli_integral(std::size_t n, std::span<const Channel> comb, std::span<const double> launch_w,
                                 const FiberSpec& fiber, const OracleOptions& opt = {}) {
    if (comb.size() > opt.max_channels) throw RangeError("nli_integral: comb too large for the oracle");
    if (n >= comb.size()) throw InvariantError("nli_integral: channel index out of range");
    if (launch_w.size() != comb.size()) throw InvariantError("nli_integral: launch powers do not match comb");
    const double alpha = attenuation(fiber, comb[n].frequency_thz);
    for (std::size_t i = 0; i < comb.size(); ++i) {
        if (!(launch_w[i] >= 0.0)) throw InvariantError("nli_integral: launch powers must be >= 0");
        if (std::abs(attenuation(fiber, comb[i].frequency_thz) - alpha) > 1e-12 * alpha)
            throw RangeError("nli_integral: oracle requires a frequency-flat loss");
    }

    const detail::GnIntegrand g(n, comb, launch_w, fiber);
    OracleResult out;
    if (g.empty()) return out;
    const double rate = gbaud_to_thz(comb[n].symbol_rate_gbaud);
    int nodes = opt.initial_nodes;
    double prev = detail::oracle_once(g, comb[n].frequency_thz, rate, nodes, opt);
    while (nodes < opt.max_nodes) {
        nodes *= 2;
        const double cur = detail::oracle_once(g, comb[n].frequency_thz, rate, nodes, opt);
        out.nli_w = cur;
        out.nodes = nodes;
        if (cur == 0.0 && prev == 0.0) return out;
        out.last_change_db = std::abs(10.0 * std::log10(cur / prev));
        if (out.last_change_db < opt.tolerance_db) return out;
        prev = cur;
    }
    throw NumericalError("nli_integral: no convergence at maximum resolution");
}

} // namespace uwbnli
