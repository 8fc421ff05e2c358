#pragma once

#include <utility>
#include <vector>

#include "uwbnli/error.hpp"

namespace uwbnli {

/// Net information rate (bits/symbol) versus GOSNR (dB). Linear between
/// knots, held at the last knot above the table, and 0 below the first knot.
struct TransceiverCurve {
    std::vector<std::pair<double, double>> knots; // (gosnr_db, bits_per_symbol)

    bool operator==(const TransceiverCurve&) const = default;

    /// Placeholder next-generation transceiver: a gap-to-capacity shape
    /// capped at 7.5 bits/symbol (see docs/scenario-format.md).
    static TransceiverCurve default_curve() {
        return TransceiverCurve{{{3.0, 1.0},
                                 {5.0, 2.0},
                                 {7.0, 3.0},
                                 {9.0, 4.0},
                                 {11.0, 5.0},
                                 {13.0, 6.25},
                                 {15.0, 7.5}}};
    }

    double cap() const { return knots.empty() ? 0.0 : knots.back().second; }
};

inline void validate(const TransceiverCurve& curve) {
    if (curve.knots.empty()) throw InvariantError("transceiver: curve has no knots");
    for (std::size_t i = 0; i < curve.knots.size(); ++i) {
        if (!(curve.knots[i].second >= 0.0)) throw InvariantError("transceiver: rates must be >= 0");
        if (i > 0) {
            if (!(curve.knots[i].first > curve.knots[i - 1].first))
                throw InvariantError("transceiver: GOSNR knots must be strictly increasing");
            if (curve.knots[i].second < curve.knots[i - 1].second)
                throw InvariantError("transceiver: curve must be non-decreasing");
        }
    }
}

/// Clamped linear interpolation of the transceiver curve.
inline double info_rate(const TransceiverCurve& curve, double gosnr_db) {
    const auto& k = curve.knots;
    if (k.empty() || !(gosnr_db >= k.front().first)) return 0.0;
    if (gosnr_db >= k.back().first) return k.back().second;
    for (std::size_t i = 1; i < k.size(); ++i) {
        if (gosnr_db == k[i].first) return k[i].second;
        if (gosnr_db < k[i].first) {
            const double t = (gosnr_db - k[i - 1].first) / (k[i].first - k[i - 1].first);
            return k[i - 1].second + t * (k[i].second - k[i - 1].second);
        }
    }
    return k.back().second;
}

} // namespace uwbnli
