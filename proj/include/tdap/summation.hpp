#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace tdap {

/// Neumaier-compensated running sum. Scans in the estimators are
/// order-dependent prefix sums, so compensation stands in for pairwise
/// reduction there.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x)) {
            carry_ += (sum_ - t) + x;
        } else {
            carry_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    CompensatedSum& operator+=(double x) noexcept {
        add(x);
        return *this;
    }

    double value() const noexcept { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

/// Pairwise sum in index order; fixed reduction tree for a given length.
inline double pairwise_sum(std::span<const double> xs) noexcept {
    constexpr std::size_t block = 32;
    if (xs.size() <= block) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

} // namespace tdap
