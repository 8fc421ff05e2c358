#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uwbnli/error.hpp"
#include "uwbnli/fiber.hpp"
#include "uwbnli/transceiver.hpp"
#include "uwbnli/units.hpp"

namespace uwbnli {

enum class BandLabel { U, L, C, S, E, O };

inline constexpr std::array<BandLabel, 6> kAllBands = {BandLabel::U, BandLabel::L, BandLabel::C,
                                                       BandLabel::S, BandLabel::E, BandLabel::O};

inline std::string_view to_string(BandLabel b) {
    switch (b) {
    case BandLabel::U: return "U";
    case BandLabel::L: return "L";
    case BandLabel::C: return "C";
    case BandLabel::S: return "S";
    case BandLabel::E: return "E";
    case BandLabel::O: return "O";
    }
    return "?";
}

inline std::optional<BandLabel> parse_band_label(std::string_view s) {
    for (BandLabel b : kAllBands)
        if (to_string(b) == s) return b;
    return std::nullopt;
}

/// Modulation identifier. Only the correction hook looks at it.
enum class ModulationFormat { Gaussian, QPSK, QAM16, QAM64, PCS64QAM };

inline std::string_view to_string(ModulationFormat f) {
    switch (f) {
    case ModulationFormat::Gaussian: return "gaussian";
    case ModulationFormat::QPSK: return "qpsk";
    case ModulationFormat::QAM16: return "16qam";
    case ModulationFormat::QAM64: return "64qam";
    case ModulationFormat::PCS64QAM: return "pcs-64qam";
    }
    return "?";
}

inline std::optional<ModulationFormat> parse_modulation_format(std::string_view s) {
    for (auto f : {ModulationFormat::Gaussian, ModulationFormat::QPSK, ModulationFormat::QAM16,
                   ModulationFormat::QAM64, ModulationFormat::PCS64QAM})
        if (to_string(f) == s) return f;
    return std::nullopt;
}

struct Channel {
    std::size_t index = 1;          // 1-based ordinal within the comb
    double frequency_thz = 0.0;
    double symbol_rate_gbaud = 0.0;
    std::optional<double> launch_power_w; // at every span input
    ModulationFormat format = ModulationFormat::Gaussian;

    bool operator==(const Channel&) const = default;
};

/// Half-open frequency interval [lower, upper).
struct Band {
    BandLabel label = BandLabel::C;
    double lower_thz = 0.0;
    double upper_thz = 0.0;

    bool contains(double f_thz) const noexcept { return f_thz >= lower_thz && f_thz < upper_thz; }
    double center_thz() const noexcept { return 0.5 * (lower_thz + upper_thz); }
    double half_width_thz() const noexcept { return 0.5 * (upper_thz - lower_thz); }
    bool operator==(const Band&) const = default;
};

/// ITU-style band edges in THz, ordered by frequency.
inline std::vector<Band> default_bands() {
    return {{BandLabel::U, 179.0, 184.5}, {BandLabel::L, 184.5, 191.6}, {BandLabel::C, 191.6, 195.9},
            {BandLabel::S, 195.9, 205.3}, {BandLabel::E, 205.3, 220.4}, {BandLabel::O, 220.4, 237.9}};
}

/// Lumped amplifier closing a span. Gain restores each channel to its launch
/// power; the noise figure is looked up by the channel's band.
struct AmplifierSpec {
    std::map<BandLabel, double> noise_figure_db;

    static AmplifierSpec case_study_default() {
        return AmplifierSpec{{{BandLabel::C, 5.0},
                              {BandLabel::L, 6.0},
                              {BandLabel::S, 7.0},
                              {BandLabel::E, 7.0},
                              {BandLabel::U, 8.0}}};
    }
    bool operator==(const AmplifierSpec&) const = default;
};

struct Span {
    FiberSpec fiber;
    AmplifierSpec amplifier = AmplifierSpec::case_study_default();
    bool operator==(const Span&) const = default;
};

/// Regular channel grid f_k = anchor + k * spacing, used to populate bands.
struct CombGrid {
    double anchor_thz = 191.6375;
    double spacing_ghz = 75.0;
    double symbol_rate_gbaud = 64.0;
    ModulationFormat format = ModulationFormat::Gaussian;
    double launch_power_w = 1e-3;
    std::vector<BandLabel> fill_order = {BandLabel::C, BandLabel::L, BandLabel::S, BandLabel::U,
                                         BandLabel::E};
    bool operator==(const CombGrid&) const = default;
};

struct SolverSettings {
    double ode_step_km = 0.05;
    int fit_samples = 1001;
    int series_cap = 30;
    double step_tolerance = 1e-4;   // relative, half-step validation
    double sigma_min = 1e-4;        // 1/km; the span length also floors it at 1/L
    double sigma_max = 2.0;         // 1/km
    double sigma_tolerance = 1e-6;  // 1/km
    double dispersion_floor = 1e-4; // ps^2/km
    bool operator==(const SolverSettings&) const = default;
};

enum class OptimizerMode { Joint, BandByBand };

struct OptimizerSettings {
    double power_min_dbm = -10.0;
    double power_max_dbm = 6.0;
    int max_evaluations = 2000;
    double initial_step_db = 1.0;
    double min_step_db = 0.0625;
    double min_relative_improvement = 1e-3;
    OptimizerMode mode = OptimizerMode::Joint;
    int sweep_increment = 10;
    bool operator==(const OptimizerSettings&) const = default;
};

struct Scenario {
    std::vector<Span> spans;
    std::vector<Channel> channels;
    std::vector<Band> bands = default_bands();
    std::optional<CombGrid> grid;
    TransceiverCurve transceiver = TransceiverCurve::default_curve();
    OptimizerSettings optimizer;
    SolverSettings solver;

    bool operator==(const Scenario&) const = default;
};

// ---------------------------------------------------------------------------

inline const Band* find_band(std::span<const Band> bands, double f_thz) {
    for (const auto& b : bands)
        if (b.contains(f_thz)) return &b;
    return nullptr;
}

inline const Band& band_of(const Scenario& s, double f_thz) {
    const Band* b = find_band(s.bands, f_thz);
    if (!b) throw InvariantError("channel outside all bands (" + std::to_string(f_thz) + " THz)");
    return *b;
}

inline const Band* find_band(std::span<const Band> bands, BandLabel label) {
    for (const auto& b : bands)
        if (b.label == label) return &b;
    return nullptr;
}

/// Evenly spaced comb; launch powers are left unset.
inline std::vector<Channel> build_comb(double start_thz, std::size_t count, double spacing_ghz,
                                       double symbol_rate_gbaud,
                                       ModulationFormat format = ModulationFormat::Gaussian) {
    if (count < 1) throw InvariantError("build_comb: count must be >= 1");
    if (!(spacing_ghz > 0.0)) throw InvariantError("build_comb: spacing must be > 0");
    std::vector<Channel> comb;
    comb.reserve(count);
    for (std::size_t k = 0; k < count; ++k)
        comb.push_back(Channel{k + 1, start_thz + static_cast<double>(k) * ghz_to_thz(spacing_ghz),
                               symbol_rate_gbaud, std::nullopt, format});
    return comb;
}

/// Grid slots of one band in fill order. The first band in the fill order is
/// populated upward from its lower edge; later bands start at the edge
/// adjacent to the already-populated spectrum and move away from it.
inline std::vector<long> band_fill_slots(const CombGrid& grid, const Band& band, bool upward) {
    const double step = ghz_to_thz(grid.spacing_ghz);
    const long k_lo = static_cast<long>(std::ceil((band.lower_thz - grid.anchor_thz) / step - 1e-9));
    const long k_hi = static_cast<long>(std::floor((band.upper_thz - grid.anchor_thz) / step + 1e-9));
    std::vector<long> slots;
    for (long k = k_lo; k <= k_hi; ++k)
        if (band.contains(grid.anchor_thz + static_cast<double>(k) * step)) slots.push_back(k);
    if (!upward) std::reverse(slots.begin(), slots.end());
    return slots;
}

/// Full fill sequence over the grid's band order: grid slots in the order
/// channels are added, tagged with their band.
struct FillSlot {
    long slot;
    BandLabel band;
};

inline std::vector<FillSlot> fill_sequence(const CombGrid& grid, std::span<const Band> bands) {
    std::vector<FillSlot> seq;
    double occupied_lo = 0.0, occupied_hi = 0.0;
    bool first = true;
    for (BandLabel label : grid.fill_order) {
        const Band* band = find_band(bands, label);
        if (!band) throw InvariantError("fill order names band " + std::string(to_string(label)) + " which is not defined");
        bool upward = true;
        if (!first) upward = band->center_thz() > 0.5 * (occupied_lo + occupied_hi);
        for (long k : band_fill_slots(grid, *band, upward)) seq.push_back({k, label});
        if (first) {
            occupied_lo = band->lower_thz;
            occupied_hi = band->upper_thz;
            first = false;
        } else {
            occupied_lo = std::min(occupied_lo, band->lower_thz);
            occupied_hi = std::max(occupied_hi, band->upper_thz);
        }
    }
    return seq;
}

/// Comb made of the given grid slots, sorted by frequency and re-indexed.
inline std::vector<Channel> comb_from_slots(const CombGrid& grid, std::span<const FillSlot> slots) {
    std::vector<long> ks;
    ks.reserve(slots.size());
    for (const auto& s : slots) ks.push_back(s.slot);
    std::sort(ks.begin(), ks.end());
    std::vector<Channel> comb;
    comb.reserve(ks.size());
    for (std::size_t i = 0; i < ks.size(); ++i)
        comb.push_back(Channel{i + 1, grid.anchor_thz + static_cast<double>(ks[i]) * ghz_to_thz(grid.spacing_ghz),
                               grid.symbol_rate_gbaud, grid.launch_power_w, grid.format});
    return comb;
}

inline double noise_figure_db(const Scenario& s, const AmplifierSpec& amp, double f_thz) {
    const Band& b = band_of(s, f_thz);
    auto it = amp.noise_figure_db.find(b.label);
    if (it == amp.noise_figure_db.end())
        throw InvariantError("amplifier has no noise figure for band " + std::string(to_string(b.label)));
    return it->second;
}

/// Launch powers of the comb in W. Throws if any is unset.
inline std::vector<double> launch_powers(std::span<const Channel> comb) {
    std::vector<double> p;
    p.reserve(comb.size());
    for (const auto& c : comb) {
        if (!c.launch_power_w) throw InvariantError("channel " + std::to_string(c.index) + " has no launch power");
        p.push_back(*c.launch_power_w);
    }
    return p;
}

inline void validate_comb(std::span<const Channel> comb) {
    if (comb.empty()) throw InvariantError("comb is empty");
    for (std::size_t i = 0; i < comb.size(); ++i) {
        const auto& c = comb[i];
        if (!(c.frequency_thz > 0.0)) throw InvariantError("channel frequency must be > 0");
        if (!(c.symbol_rate_gbaud > 0.0)) throw InvariantError("channel symbol rate must be > 0");
        if (c.launch_power_w && !(*c.launch_power_w >= 0.0))
            throw InvariantError("channel launch power must be >= 0");
        if (i > 0) {
            const auto& p = comb[i - 1];
            if (!(c.frequency_thz > p.frequency_thz))
                throw InvariantError("channel frequencies must be strictly increasing");
            const double spacing_ghz = (c.frequency_thz - p.frequency_thz) * 1e3;
            if (spacing_ghz < 0.5 * (c.symbol_rate_gbaud + p.symbol_rate_gbaud) - 1e-9)
                throw InvariantError("channels " + std::to_string(p.index) + " and " + std::to_string(c.index) +
                                     " overlap (spacing below symbol rate)");
        }
    }
}

inline void validate(const SolverSettings& s) {
    if (!(s.ode_step_km > 0.0)) throw InvariantError("solver: ode step must be > 0");
    if (s.fit_samples < 3) throw InvariantError("solver: fit samples must be >= 3");
    if (s.series_cap < 1) throw InvariantError("solver: series cap must be >= 1");
    if (!(s.step_tolerance > 0.0)) throw InvariantError("solver: step tolerance must be > 0");
    if (!(s.sigma_min > 0.0 && s.sigma_max > s.sigma_min)) throw InvariantError("solver: sigma bounds invalid");
    if (!(s.sigma_tolerance > 0.0)) throw InvariantError("solver: sigma tolerance must be > 0");
    if (!(s.dispersion_floor > 0.0)) throw InvariantError("solver: dispersion floor must be > 0");
}

inline void validate(const OptimizerSettings& o) {
    if (!(o.power_max_dbm > o.power_min_dbm)) throw InvariantError("optimizer: power bounds invalid");
    if (o.max_evaluations < 1) throw InvariantError("optimizer: evaluation budget must be >= 1");
    if (!(o.initial_step_db > 0.0 && o.min_step_db > 0.0)) throw InvariantError("optimizer: steps must be > 0");
    if (!(o.min_relative_improvement >= 0.0)) throw InvariantError("optimizer: improvement threshold must be >= 0");
    if (o.sweep_increment < 1) throw InvariantError("optimizer: sweep increment must be >= 1");
}

/// Full structural and physical validation of a scenario.
inline void validate(const Scenario& s) {
    if (s.spans.empty()) throw InvariantError("scenario needs at least one span");
    for (std::size_t i = 0; i < s.bands.size(); ++i) {
        const auto& b = s.bands[i];
        if (!(b.lower_thz < b.upper_thz)) throw InvariantError("band " + std::string(to_string(b.label)) + " has lower >= upper edge");
        for (std::size_t j = 0; j < i; ++j) {
            const auto& o = s.bands[j];
            if (o.label == b.label) throw InvariantError("band " + std::string(to_string(b.label)) + " defined twice");
            if (b.lower_thz < o.upper_thz && o.lower_thz < b.upper_thz)
                throw InvariantError("bands " + std::string(to_string(o.label)) + " and " +
                                     std::string(to_string(b.label)) + " overlap");
        }
    }
    validate_comb(s.channels);
    for (std::size_t i = 0; i < s.channels.size(); ++i)
        if (s.channels[i].index != i + 1) throw InvariantError("channel indices must be 1..N in order");
    for (const auto& c : s.channels) band_of(s, c.frequency_thz);
    for (const auto& span : s.spans) {
        validate(span.fiber);
        for (const auto& [label, nf] : span.amplifier.noise_figure_db)
            if (!(nf >= 0.0)) throw InvariantError("noise figure must be >= 0 dB");
        for (const auto& c : s.channels) {
            if (!span.fiber.loss_db_per_km.contains(c.frequency_thz))
                throw InvariantError("channel at " + std::to_string(c.frequency_thz) +
                                     " THz lies outside the fiber loss table");
            noise_figure_db(s, span.amplifier, c.frequency_thz);
        }
    }
    if (s.grid) {
        if (!(s.grid->spacing_ghz > 0.0 && s.grid->symbol_rate_gbaud > 0.0))
            throw InvariantError("grid spacing and symbol rate must be > 0");
        if (!(s.grid->launch_power_w >= 0.0)) throw InvariantError("grid launch power must be >= 0");
        fill_sequence(*s.grid, s.bands);
    }
    validate(s.transceiver);
    validate(s.solver);
    validate(s.optimizer);
}

} // namespace uwbnli
