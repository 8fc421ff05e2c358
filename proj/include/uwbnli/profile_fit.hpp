#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "uwbnli/error.hpp"
#include "uwbnli/raman_solver.hpp"
#include "uwbnli/scenario.hpp"
#include "uwbnli/units.hpp"

namespace uwbnli {

/// Loss model alpha(z) = alpha0 + alpha1 exp(-sigma z) for one channel in one
/// span (field attenuation, 1/km).
struct ChannelFit {
    double alpha0 = 0.0;
    double alpha1 = 0.0;
    double sigma = 0.0;
    double residual_db = 0.0;      // max |fitted - input| over the samples
    bool sigma_identifiable = true;
};

struct SpanFit {
    std::vector<ChannelFit> channels;
};

struct AlphaPair {
    double alpha0 = 0.0;
    double alpha1 = 0.0;
};

/// Bounds and tolerance of the sigma search.
struct SigmaSearch {
    double lower = 1e-4;
    double upper = 2.0;
    double tolerance = 1e-6;

    /// The configured lower bound, floored at 1/L: slower decays are
    /// indistinguishable from a constant loss over the span.
    static SigmaSearch for_span(const SolverSettings& s, double length_km) {
        return SigmaSearch{std::max(s.sigma_min, 1.0 / length_km), s.sigma_max, s.sigma_tolerance};
    }
};

/// Fitted ln P(z) - ln P(0) of the loss model.
inline double model_log_gain(double z, double alpha0, double alpha1, double sigma) {
    return -2.0 * alpha0 * z - (2.0 * alpha1 / sigma) * (-std::expm1(-sigma * z));
}

namespace detail {

/// Evaluates exp(-sigma z_i) for all samples, using a multiplicative
/// recurrence on uniform grids with periodic exact resynchronisation.
class DecayBasis {
public:
    explicit DecayBasis(std::span<const double> z) : z_(z), values_(z.size()) {
        uniform_ = z.size() > 2;
        if (uniform_) {
            const double h = (z.back() - z.front()) / static_cast<double>(z.size() - 1);
            for (std::size_t i = 0; i < z.size() && uniform_; ++i)
                uniform_ = std::abs(z[i] - (z.front() + h * static_cast<double>(i))) <= 1e-12 * std::max(1.0, std::abs(z.back()));
            step_ = h;
        }
    }

    /// Fills and returns 1 - exp(-sigma z_i).
    std::span<const double> one_minus_decay(double sigma) {
        if (!uniform_) {
            for (std::size_t i = 0; i < z_.size(); ++i) values_[i] = -std::expm1(-sigma * z_[i]);
            return values_;
        }
        const double ratio = std::exp(-sigma * step_);
        double e = 0.0;
        for (std::size_t i = 0; i < z_.size(); ++i) {
            if (i % 32 == 0)
                e = std::exp(-sigma * z_[i]);
            else
                e *= ratio;
            values_[i] = 1.0 - e;
        }
        return values_;
    }

private:
    std::span<const double> z_;
    std::vector<double> values_;
    bool uniform_ = false;
    double step_ = 0.0;
};

struct InnerFit {
    AlphaPair alpha;
    double sse = 0.0;
};

/// Least squares of y_i = ln P(z_i) - ln P(z_0) on x1 = -2 z, x2 = -(2/sigma)(1 - e^{-sigma z}).
inline InnerFit solve_inner(std::span<const double> z, std::span<const double> y, std::span<const double> omd,
                            double sigma) {
    double s11 = 0.0, s12 = 0.0, s22 = 0.0, b1 = 0.0, b2 = 0.0;
    const double c2 = -2.0 / sigma;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double x1 = -2.0 * z[i];
        const double x2 = c2 * omd[i];
        s11 += x1 * x1;
        s12 += x1 * x2;
        s22 += x2 * x2;
        b1 += x1 * y[i];
        b2 += x2 * y[i];
    }
    const double det = s11 * s22 - s12 * s12;
    if (!(std::abs(det) > 1e-13 * s11 * s22))
        throw NumericalError("fit_alpha_given_sigma: degenerate normal matrix");
    InnerFit out;
    out.alpha.alpha0 = (b1 * s22 - b2 * s12) / det;
    out.alpha.alpha1 = (b2 * s11 - b1 * s12) / det;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double r = y[i] - (-2.0 * z[i] * out.alpha.alpha0 + c2 * omd[i] * out.alpha.alpha1);
        out.sse += r * r;
    }
    return out;
}

inline std::vector<double> relative_log(std::span<const double> log_power) {
    std::vector<double> y(log_power.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = log_power[i] - log_power[0];
    return y;
}

inline void check_profile(std::span<const double> z, std::span<const double> log_power) {
    if (z.size() != log_power.size()) throw InvariantError("fit: z and power sample counts differ");
    if (z.size() < 3) throw NumericalError("fit: degenerate fit, at least three samples required");
    for (double v : log_power)
        if (!std::isfinite(v)) throw InvariantError("fit: profile powers must be positive and finite");
}

inline double max_deviation_db(std::span<const double> z, std::span<const double> y, const ChannelFit& fit) {
    double worst = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
        worst = std::max(worst, std::abs(y[i] - model_log_gain(z[i], fit.alpha0, fit.alpha1, fit.sigma)));
    return worst * 10.0 * std::numbers::log10e;
}

} // namespace detail

/// Closed-form (alpha0, alpha1) for a given sigma. `log_power` is ln P(z) in
/// any consistent scale; the model is anchored at the first sample.
inline AlphaPair fit_alpha_given_sigma(std::span<const double> z_km, std::span<const double> log_power,
                                       double sigma) {
    detail::check_profile(z_km, log_power);
    if (!(sigma > 0.0)) throw InvariantError("fit_alpha_given_sigma: sigma must be > 0");
    const auto y = detail::relative_log(log_power);
    detail::DecayBasis basis(z_km);
    return detail::solve_inner(z_km, y, basis.one_minus_decay(sigma), sigma).alpha;
}

/// Best (alpha0, alpha1, sigma) by golden-section search on sigma.
/// Channels whose fitted |alpha1| stays below 1e-6 1/km are reported with
/// alpha1 = 0, sigma at the lower bound and `sigma_identifiable = false`.
inline ChannelFit optimize_sigma(std::span<const double> z_km, std::span<const double> log_power,
                                 const SigmaSearch& search) {
    detail::check_profile(z_km, log_power);
    const auto y = detail::relative_log(log_power);
    detail::DecayBasis basis(z_km);
    auto objective = [&](double sigma) { return detail::solve_inner(z_km, y, basis.one_minus_decay(sigma), sigma); };

    constexpr double kInvPhi = 0.6180339887498949;
    double a = search.lower, b = search.upper;
    double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
    double fc = objective(c).sse, fd = objective(d).sse;
    while (b - a > search.tolerance) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = objective(c).sse;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = objective(d).sse;
        }
    }
    const double sigma = 0.5 * (a + b);
    const auto best = objective(sigma);

    ChannelFit fit;
    fit.alpha0 = best.alpha.alpha0;
    fit.alpha1 = best.alpha.alpha1;
    fit.sigma = sigma;
    if (std::abs(fit.alpha1) < 1e-6) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < z_km.size(); ++i) {
            num += -2.0 * z_km[i] * y[i];
            den += 4.0 * z_km[i] * z_km[i];
        }
        fit.alpha0 = num / den;
        fit.alpha1 = 0.0;
        fit.sigma = search.lower;
        fit.sigma_identifiable = false;
    }
    fit.residual_db = detail::max_deviation_db(z_km, y, fit);
    return fit;
}

inline ChannelFit optimize_sigma(std::span<const double> z_km, std::span<const double> log_power) {
    return optimize_sigma(z_km, log_power, SigmaSearch{});
}

/// Fits every channel of a span profile.
inline SpanFit fit_span(const PowerProfile& profile, const SigmaSearch& search) {
    SpanFit out;
    out.channels.reserve(profile.channels());
    for (std::size_t n = 0; n < profile.channels(); ++n)
        out.channels.push_back(optimize_sigma(profile.z_km, profile.log_gain_of(n), search));
    return out;
}

} // namespace uwbnli
