#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

namespace orbitfit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Closed interval [lo, hi] of admissible flow durations.
struct TimeInterval {
    double lo = 0.0;
    double hi = 1.0;

    double max_abs() const noexcept { return std::max(std::abs(lo), std::abs(hi)); }
    double length() const noexcept { return hi - lo; }
    bool contains(double t) const noexcept { return t >= lo && t <= hi; }
    bool contains_zero() const noexcept { return contains(0.0); }

    friend bool operator==(const TimeInterval&, const TimeInterval&) = default;
};

void validate_interval(const TimeInterval& interval, const std::string& where);

}  // namespace orbitfit
