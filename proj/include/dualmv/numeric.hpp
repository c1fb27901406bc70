#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dualmv {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Neumaier's variant of Kahan summation. The result does not depend on
/// magnitude ordering to within one rounding of the exact sum.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    CompensatedSum& operator+=(double x) {
        add(x);
        return *this;
    }

    [[nodiscard]] double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Scale used for relative residuals: max(1, |a|, |b|).
inline double residual_scale(double a, double b = 0.0) {
    return std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace dualmv
