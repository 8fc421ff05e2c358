#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uwbnli/error.hpp"

namespace uwbnli {

/// Piecewise-linear table y(x) over strictly increasing abscissae.
/// `at()` refuses to extrapolate; `clamped()` holds the end values.
class LinearTable {
public:
    LinearTable() = default;

    LinearTable(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
        if (x_.size() != y_.size())
            throw InvariantError("table: abscissa and ordinate lengths differ");
        if (x_.size() < 2)
            throw InvariantError("table: at least two points are required");
        for (std::size_t i = 1; i < x_.size(); ++i)
            if (!(x_[i] > x_[i - 1]))
                throw InvariantError("table: abscissae must be strictly increasing");
    }

    static LinearTable from_pairs(std::span<const std::pair<double, double>> pts) {
        std::vector<double> x, y;
        x.reserve(pts.size());
        y.reserve(pts.size());
        for (const auto& [a, b] : pts) {
            x.push_back(a);
            y.push_back(b);
        }
        return LinearTable(std::move(x), std::move(y));
    }

    bool empty() const noexcept { return x_.empty(); }
    std::size_t size() const noexcept { return x_.size(); }
    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }
    const std::vector<double>& xs() const noexcept { return x_; }
    const std::vector<double>& ys() const noexcept { return y_; }

    bool contains(double x) const noexcept { return !x_.empty() && x >= x_.front() && x <= x_.back(); }

    double at(double x) const {
        if (!contains(x))
            throw RangeError("table: query " + std::to_string(x) + " outside [" +
                             std::to_string(x_.front()) + ", " + std::to_string(x_.back()) + "]");
        return interpolate(x);
    }

    double clamped(double x) const {
        if (x <= x_.front()) return y_.front();
        if (x >= x_.back()) return y_.back();
        return interpolate(x);
    }

    bool operator==(const LinearTable&) const = default;

private:
    double interpolate(double x) const {
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        if (it == x_.end()) return y_.back();
        const std::size_t hi = static_cast<std::size_t>(it - x_.begin());
        const std::size_t lo = hi - 1;
        const double t = (x - x_[lo]) / (x_[hi] - x_[lo]);
        return y_[lo] + t * (y_[hi] - y_[lo]);
    }

    std::vector<double> x_;
    std::vector<double> y_;
};

} // namespace uwbnli
