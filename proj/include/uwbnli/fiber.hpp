#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <variant>
#include <vector>

#include "uwbnli/error.hpp"
#include "uwbnli/table.hpp"
#include "uwbnli/units.hpp"

namespace uwbnli {

// ---------------------------------------------------------------------------
// Built-in defaults. None of these are measured data for a specific fiber;
// they are typical standard single-mode fiber values used when a scenario
// does not override them.
// ---------------------------------------------------------------------------
namespace defaults {

inline constexpr double kBeta2 = -21.3;   // ps^2/km
inline constexpr double kBeta3 = 0.12;    // ps^3/km
inline constexpr double kBeta4 = -5e-4;   // ps^4/km
inline constexpr double kReferenceFrequency = 193.4; // THz
inline constexpr double kN2 = 2.6e-20;    // m^2/W
inline constexpr double kNumericalAperture = 0.124;
inline constexpr double kCoreRadiusUm = 4.1;

inline constexpr double kRamanPeakValue = 0.39;  // 1/(W km)
inline constexpr double kRamanPeakShift = 13.2;  // THz
inline constexpr double kRamanReferencePump = 193.4; // THz

/// Zero-water-peak SMF attenuation, dB/km, every 1 THz from 179 to 238 THz.
inline LinearTable smf_loss_table() {
    static const std::pair<double, double> pts[] = {
        {179, 0.255}, {180, 0.245}, {181, 0.236}, {182, 0.229}, {183, 0.222}, {184, 0.215},
        {185, 0.210}, {186, 0.206}, {187, 0.202}, {188, 0.198}, {189, 0.196}, {190, 0.194},
        {191, 0.192}, {192, 0.191}, {193, 0.190}, {194, 0.191}, {195, 0.191}, {196, 0.192},
        {197, 0.195}, {198, 0.198}, {199, 0.201}, {200, 0.204}, {201, 0.208}, {202, 0.212},
        {203, 0.216}, {204, 0.221}, {205, 0.225}, {206, 0.230}, {207, 0.235}, {208, 0.241},
        {209, 0.246}, {210, 0.252}, {211, 0.257}, {212, 0.263}, {213, 0.268}, {214, 0.274},
        {215, 0.279}, {216, 0.286}, {217, 0.291}, {218, 0.288}, {219, 0.288}, {220, 0.292},
        {221, 0.296}, {222, 0.300}, {223, 0.304}, {224, 0.309}, {225, 0.313}, {226, 0.317},
        {227, 0.322}, {228, 0.326}, {229, 0.331}, {230, 0.335}, {231, 0.339}, {232, 0.344},
        {233, 0.348}, {234, 0.352}, {235, 0.357}, {236, 0.362}, {237, 0.367}, {238, 0.372},
    };
    return LinearTable::from_pairs(pts);
}

/// Normalized silica Raman gain shape, peak 1 at 13.2 THz, zero beyond 45 THz.
/// Hand-digitized approximation of the textbook fused-silica curve.
inline const LinearTable& silica_raman_shape() {
    static const std::pair<double, double> pts[] = {
        {0.0, 0.0},   {1.0, 0.06},  {2.0, 0.12},  {3.0, 0.19},  {4.0, 0.26},  {5.0, 0.33},
        {6.0, 0.40},  {7.0, 0.47},  {8.0, 0.54},  {9.0, 0.62},  {10.0, 0.71}, {11.0, 0.80},
        {12.0, 0.90}, {13.2, 1.0},  {14.0, 0.93}, {14.7, 0.95}, {15.5, 0.70}, {16.2, 0.40},
        {17.0, 0.25}, {18.0, 0.20}, {19.0, 0.19}, {20.0, 0.18}, {22.0, 0.15}, {24.0, 0.14},
        {25.0, 0.13}, {27.0, 0.08}, {30.0, 0.05}, {33.0, 0.03}, {36.0, 0.02}, {40.0, 0.01},
        {45.0, 0.0},
    };
    static const LinearTable table = LinearTable::from_pairs(pts);
    return table;
}
inline constexpr double kSilicaShapePeak = 13.2; // THz

} // namespace defaults

// ---------------------------------------------------------------------------
// Model types
// ---------------------------------------------------------------------------

/// Empirical mode-field model parameters (step-index fiber).
struct MarcuseParams {
    double numerical_aperture = defaults::kNumericalAperture;
    double core_radius_um = defaults::kCoreRadiusUm;
    bool operator==(const MarcuseParams&) const = default;
};

/// Either a Marcuse parameter pair or a tabulated A_eff(f) in um^2.
using EffectiveAreaModel = std::variant<MarcuseParams, LinearTable>;

enum class RamanScaling { None, LinearInPump };

/// Raman gain coefficient C_r(f_p, dnu). Queried with the pump (higher)
/// frequency and the pump-signal separation; sign handling is the caller's.
struct RamanModel {
    /// Silica shape scaled to `peak_value` at `peak_shift` for pump `reference_pump_thz`.
    struct Parametric {
        double peak_value = defaults::kRamanPeakValue;         // 1/(W km)
        double peak_shift_thz = defaults::kRamanPeakShift;
        double reference_pump_thz = defaults::kRamanReferencePump;
        bool operator==(const Parametric&) const = default;
    };
    /// Measured samples on a (pump x shift) grid, row-major by pump. Pumps
    /// outside the tabulated rows use the nearest row and the scaling rule.
    struct Measured {
        std::vector<double> pump_thz;
        std::vector<double> shift_thz;
        std::vector<double> gain; // size pump * shift
        bool operator==(const Measured&) const = default;
    };

    std::variant<Parametric, Measured> form = Parametric{};
    RamanScaling scaling = RamanScaling::LinearInPump;

    bool operator==(const RamanModel&) const = default;

    bool is_measured() const noexcept { return std::holds_alternative<Measured>(form); }
};

struct FiberSpec {
    double length_km = 100.0;
    LinearTable loss_db_per_km = defaults::smf_loss_table();
    double beta2 = defaults::kBeta2; // ps^2/km
    double beta3 = defaults::kBeta3; // ps^3/km
    double beta4 = defaults::kBeta4; // ps^4/km
    double reference_frequency_thz = defaults::kReferenceFrequency;
    double n2 = defaults::kN2;       // m^2/W
    EffectiveAreaModel effective_area = MarcuseParams{};
    RamanModel raman{};

    bool operator==(const FiberSpec&) const = default;
};

inline void validate(const RamanModel& model) {
    if (const auto* p = std::get_if<RamanModel::Parametric>(&model.form)) {
        if (!(p->peak_value >= 0.0)) throw InvariantError("raman: peak_value must be >= 0");
        if (!(p->peak_shift_thz > 0.0)) throw InvariantError("raman: peak_shift must be > 0");
        if (!(p->reference_pump_thz > 0.0)) throw InvariantError("raman: reference pump must be > 0");
        return;
    }
    const auto& m = std::get<RamanModel::Measured>(model.form);
    if (m.pump_thz.empty() || m.shift_thz.size() < 2)
        throw InvariantError("raman: table needs at least one pump row and two shift columns");
    if (m.gain.size() != m.pump_thz.size() * m.shift_thz.size())
        throw InvariantError("raman: table is not a full pump x shift grid");
    for (std::size_t i = 1; i < m.pump_thz.size(); ++i)
        if (!(m.pump_thz[i] > m.pump_thz[i - 1])) throw InvariantError("raman: pump axis not increasing");
    for (std::size_t i = 1; i < m.shift_thz.size(); ++i)
        if (!(m.shift_thz[i] > m.shift_thz[i - 1])) throw InvariantError("raman: shift axis not increasing");
    if (m.shift_thz.front() != 0.0) throw InvariantError("raman: shift axis must start at 0");
    for (std::size_t r = 0; r < m.pump_thz.size(); ++r) {
        if (m.gain[r * m.shift_thz.size()] != 0.0) throw InvariantError("raman: C_r(f_p, 0) must be 0");
        for (std::size_t c = 0; c < m.shift_thz.size(); ++c)
            if (!(m.gain[r * m.shift_thz.size() + c] >= 0.0)) throw InvariantError("raman: negative gain sample");
    }
}

inline void validate(const FiberSpec& fiber) {
    if (!(fiber.length_km > 0.0)) throw InvariantError("fiber: length must be > 0");
    if (fiber.loss_db_per_km.empty()) throw InvariantError("fiber: loss curve is empty");
    for (double v : fiber.loss_db_per_km.ys())
        if (!(v > 0.0)) throw InvariantError("fiber: loss curve values must be > 0");
    if (!(fiber.n2 > 0.0)) throw InvariantError("fiber: n2 must be > 0");
    if (!(fiber.reference_frequency_thz > 0.0)) throw InvariantError("fiber: reference frequency must be > 0");
    if (const auto* m = std::get_if<MarcuseParams>(&fiber.effective_area)) {
        if (!(m->numerical_aperture > 0.0)) throw InvariantError("fiber: numerical aperture must be > 0");
        if (!(m->core_radius_um > 0.0)) throw InvariantError("fiber: core radius must be > 0");
    } else {
        for (double v : std::get<LinearTable>(fiber.effective_area).ys())
            if (!(v > 0.0)) throw InvariantError("fiber: effective area table values must be > 0");
    }
    validate(fiber.raman);
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Field attenuation in 1/km; power decays as exp(-2 alpha z).
inline double attenuation(const FiberSpec& fiber, double f_thz) {
    return fiber.loss_db_per_km.at(f_thz) / kDbPerFieldNeper;
}

/// Normalized frequency of the step-index fiber.
inline double v_number(const MarcuseParams& m, double f_thz) {
    return 2.0 * kPi * m.core_radius_um * 1e-6 * m.numerical_aperture * f_thz * 1e12 / kSpeedOfLight;
}

/// Effective area in um^2.
inline double effective_area(const FiberSpec& fiber, double f_thz) {
    if (const auto* table = std::get_if<LinearTable>(&fiber.effective_area))
        return table->at(f_thz);
    const auto& m = std::get<MarcuseParams>(fiber.effective_area);
    const double v = v_number(m, f_thz);
    if (!(v > 0.0)) throw RangeError("effective_area: V number must be > 0");
    const double w = m.core_radius_um * (0.65 + 1.619 * std::pow(v, -1.5) + 2.879 * std::pow(v, -6.0));
    return kPi * w * w;
}

/// gamma_{n,m} in 1/(W km) given both effective areas (um^2).
inline double gamma_from_areas(double n2, double f_n_thz, double aeff_n_um2, double aeff_m_um2) {
    const double k0 = 2.0 * kPi * f_n_thz * 1e12 / kSpeedOfLight; // 1/m
    return k0 * 2.0 * n2 / ((aeff_n_um2 + aeff_m_um2) * 1e-12) * 1e3;
}

/// Pairwise nonlinearity coefficient in 1/(W km).
inline double gamma(const FiberSpec& fiber, double f_n_thz, double f_m_thz) {
    return gamma_from_areas(fiber.n2, f_n_thz, effective_area(fiber, f_n_thz), effective_area(fiber, f_m_thz));
}

/// Pair-dependent effective dispersion in ps^2/km (frequencies in THz).
inline double effective_beta2(const FiberSpec& fiber, double f_n_thz, double f_m_thz) {
    const double dn = f_n_thz - fiber.reference_frequency_thz;
    const double dm = f_m_thz - fiber.reference_frequency_thz;
    return fiber.beta2 + kPi * fiber.beta3 * (dn + dm) +
           (2.0 * kPi * kPi / 3.0) * fiber.beta4 * ((dn * dn + dm * dm) + dn * dm); // grouped so swapping n, m is exact
}

namespace detail {

inline double raman_pump_scale(RamanScaling rule, double f_p, double f_ref) {
    return rule == RamanScaling::LinearInPump ? f_p / f_ref : 1.0;
}

inline double measured_row(const RamanModel::Measured& m, std::size_t row, double shift) {
    const auto& s = m.shift_thz;
    if (shift > s.back()) return 0.0;
    auto it = std::upper_bound(s.begin(), s.end(), shift);
    if (it == s.end()) return m.gain[row * s.size() + s.size() - 1];
    const std::size_t hi = static_cast<std::size_t>(it - s.begin());
    const std::size_t lo = hi - 1;
    const double t = (shift - s[lo]) / (s[hi] - s[lo]);
    const double* g = &m.gain[row * s.size()];
    return g[lo] + t * (g[hi] - g[lo]);
}

} // namespace detail

/// Raman gain coefficient C_r(f_p, dnu) in 1/(W km). Shifts beyond the
/// model support return 0.
inline double raman_gain(const RamanModel& model, double f_pump_thz, double delta_nu_thz) {
    const double shift = std::abs(delta_nu_thz);
    if (shift == 0.0) return 0.0;
    if (const auto* p = std::get_if<RamanModel::Parametric>(&model.form)) {
        const auto& shape = defaults::silica_raman_shape();
        const double x = shift * defaults::kSilicaShapePeak / p->peak_shift_thz;
        if (x > shape.x_max()) return 0.0;
        return p->peak_value * shape.at(x) *
               detail::raman_pump_scale(model.scaling, f_pump_thz, p->reference_pump_thz);
    }
    const auto& m = std::get<RamanModel::Measured>(model.form);
    const auto& pumps = m.pump_thz;
    if (f_pump_thz <= pumps.front())
        return detail::measured_row(m, 0, shift) * detail::raman_pump_scale(model.scaling, f_pump_thz, pumps.front());
    if (f_pump_thz >= pumps.back()) {
        const std::size_t last = pumps.size() - 1;
        return detail::measured_row(m, last, shift) * detail::raman_pump_scale(model.scaling, f_pump_thz, pumps.back());
    }
    auto it = std::upper_bound(pumps.begin(), pumps.end(), f_pump_thz);
    const std::size_t hi = static_cast<std::size_t>(it - pumps.begin());
    const std::size_t lo = hi - 1;
    const double t = (f_pump_thz - pumps[lo]) / (pumps[hi] - pumps[lo]);
    return (1.0 - t) * detail::measured_row(m, lo, shift) + t * detail::measured_row(m, hi, shift);
}

} // namespace uwbnli
