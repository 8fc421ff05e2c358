#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "uwbnli/error.hpp"
#include "uwbnli/fiber.hpp"
#include "uwbnli/scenario.hpp"

namespace uwbnli {

/// Per-channel power evolution along one span on a uniform z grid.
/// Stored as log-gain ln(P(z)/P(0)) so unlit channels keep a defined shape.
struct PowerProfile {
    std::vector<double> z_km;
    std::vector<double> launch_w;
    std::vector<double> log_gain; // row-major [channel][sample]
    double step_km = 0.0;
    double validation_error = 0.0; // max relative change under step halving

    std::size_t channels() const noexcept { return launch_w.size(); }
    std::size_t samples() const noexcept { return z_km.size(); }

    std::span<const double> log_gain_of(std::size_t n) const {
        return {log_gain.data() + n * samples(), samples()};
    }
    double power_w(std::size_t n, std::size_t i) const { return launch_w[n] * std::exp(log_gain[n * samples() + i]); }
    /// Net span gain exp(ln(P(L)/P(0))) of channel n.
    double span_gain(std::size_t n) const { return std::exp(log_gain[n * samples() + samples() - 1]); }
};

namespace detail {

/// Raman coupling matrix K such that d ln P_n / dz = -2 alpha_n + sum_m K_nm P_m.
/// Lower-frequency channels gain from higher ones; the pump side loses the
/// photon-energy-scaled amount.
inline std::vector<double> raman_coupling(const RamanModel& model, std::span<const Channel> comb) {
    const std::size_t n_ch = comb.size();
    std::vector<double> k(n_ch * n_ch, 0.0);
    for (std::size_t n = 0; n < n_ch; ++n) {
        const double fn = comb[n].frequency_thz;
        for (std::size_t m = 0; m < n_ch; ++m) {
            if (m == n) continue;
            const double fm = comb[m].frequency_thz;
            if (fm > fn)
                k[n * n_ch + m] = raman_gain(model, fm, fm - fn);
            else
                k[n * n_ch + m] = -(fn / fm) * raman_gain(model, fn, fn - fm);
        }
    }
    return k;
}

inline double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

struct RamanSystem {
    std::vector<double> loss;     // 2 alpha_n
    std::vector<double> coupling; // K, row-major
    std::vector<double> launch;   // W; unlit channels do not pump
    bool coupled = false;

    void rhs(const std::vector<double>& u, std::vector<double>& power, std::vector<double>& du) const {
        const std::size_t n_ch = loss.size();
        if (!coupled) {
            for (std::size_t n = 0; n < n_ch; ++n) du[n] = -loss[n];
            return;
        }
        for (std::size_t m = 0; m < n_ch; ++m) power[m] = launch[m] * std::exp(u[m]);
        for (std::size_t n = 0; n < n_ch; ++n)
            du[n] = -loss[n] + dot(&coupling[n * n_ch], power.data(), n_ch);
    }
};

/// Classical RK4 in log-gain, recording every `per_sample` steps.
inline std::vector<double> integrate_rk4(const RamanSystem& sys, double length_km, std::size_t intervals,
                                         std::size_t per_sample) {
    const std::size_t n_ch = sys.loss.size();
    const std::size_t samples = intervals + 1;
    const double h = length_km / static_cast<double>(intervals * per_sample);
    std::vector<double> out(n_ch * samples, 0.0);
    std::vector<double> u(n_ch, 0.0), tmp(n_ch), power(n_ch), k1(n_ch), k2(n_ch), k3(n_ch), k4(n_ch);
    for (std::size_t s = 1; s < samples; ++s) {
        for (std::size_t step = 0; step < per_sample; ++step) {
            sys.rhs(u, power, k1);
            for (std::size_t n = 0; n < n_ch; ++n) tmp[n] = u[n] + 0.5 * h * k1[n];
            sys.rhs(tmp, power, k2);
            for (std::size_t n = 0; n < n_ch; ++n) tmp[n] = u[n] + 0.5 * h * k2[n];
            sys.rhs(tmp, power, k3);
            for (std::size_t n = 0; n < n_ch; ++n) tmp[n] = u[n] + h * k3[n];
            sys.rhs(tmp, power, k4);
            for (std::size_t n = 0; n < n_ch; ++n) u[n] += h / 6.0 * (k1[n] + 2.0 * k2[n] + 2.0 * k3[n] + k4[n]);
        }
        for (std::size_t n = 0; n < n_ch; ++n) {
            if (!std::isfinite(u[n])) throw NumericalError("propagate_span: non-finite power state");
            out[n * samples + s] = u[n];
        }
    }
    return out;
}

} // namespace detail

/// Solve the channel-resolved ISRS power equations along one span.
///
/// The profile is sampled at `settings.fit_samples` evenly spaced points; the
/// integration step is the largest step not exceeding `settings.ode_step_km`
/// that divides the sample spacing. The run is repeated at half step and the
/// result rejected if any sample moves by more than `settings.step_tolerance`.
inline PowerProfile propagate_span(std::span<const double> launch_w, const FiberSpec& fiber,
                                   std::span<const Channel> comb, const SolverSettings& settings) {
    if (launch_w.size() != comb.size()) throw InvariantError("propagate_span: launch powers do not match comb");
    for (double p : launch_w)
        if (!(p >= 0.0) || !std::isfinite(p)) throw InvariantError("propagate_span: launch powers must be >= 0");
    if (settings.fit_samples < 2) throw InvariantError("propagate_span: need at least two samples");

    const std::size_t n_ch = comb.size();
    detail::RamanSystem sys;
    sys.loss.resize(n_ch);
    for (std::size_t n = 0; n < n_ch; ++n) sys.loss[n] = 2.0 * attenuation(fiber, comb[n].frequency_thz);
    sys.coupling = detail::raman_coupling(fiber.raman, comb);
    sys.launch.assign(launch_w.begin(), launch_w.end());
    for (double v : sys.coupling)
        if (v != 0.0) {
            sys.coupled = true;
            break;
        }
    bool any_lit = false;
    for (double p : launch_w) any_lit = any_lit || p > 0.0;
    sys.coupled = sys.coupled && any_lit;

    const std::size_t intervals = static_cast<std::size_t>(settings.fit_samples - 1);
    const double spacing = fiber.length_km / static_cast<double>(intervals);
    const std::size_t per_sample = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(spacing / settings.ode_step_km - 1e-9)));

    PowerProfile profile;
    profile.z_km.resize(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i)
        profile.z_km[i] = i == intervals ? fiber.length_km : spacing * static_cast<double>(i);
    profile.launch_w = sys.launch;
    profile.step_km = spacing / static_cast<double>(per_sample);
    profile.log_gain = detail::integrate_rk4(sys, fiber.length_km, intervals, per_sample);

    const auto fine = detail::integrate_rk4(sys, fiber.length_km, intervals, 2 * per_sample);
    double worst = 0.0;
    for (std::size_t i = 0; i < fine.size(); ++i)
        worst = std::max(worst, std::abs(std::expm1(profile.log_gain[i] - fine[i])));
    profile.validation_error = worst;
    if (worst > settings.step_tolerance)
        throw NumericalError("propagate_span: half-step validation failed (relative change " +
                             std::to_string(worst) + ")");
    return profile;
}

} // namespace uwbnli
