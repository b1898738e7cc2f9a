#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tdap/cohort.hpp"
#include "tdap/error.hpp"

namespace tdap {

/// Step-function estimate of the censoring survival G(c) = Pr(C >= c).
///
/// `values()[k]` is the curve on (jump_times()[k], jump_times()[k+1]]; the
/// curve is 1 on [0, jump_times()[0]]. Evaluation is the left limit, so a
/// subject censored exactly at c still counts as C >= c.
class CensorSurvival {
public:
    CensorSurvival() = default;

    CensorSurvival(std::vector<double> jump_times, std::vector<double> values)
        : jumps_(std::move(jump_times)), values_(std::move(values)) {
        if (jumps_.size() != values_.size()) {
            throw Error(ErrorKind::InvalidArgument, "jump/value length mismatch");
        }
        double prev_value = 1.0;
        for (std::size_t k = 0; k < jumps_.size(); ++k) {
            if (!(jumps_[k] > 0.0) || !std::isfinite(jumps_[k]) ||
                (k > 0 && !(jumps_[k] > jumps_[k - 1]))) {
                throw Error(ErrorKind::InvalidArgument,
                            "jump times must be positive and strictly increasing");
            }
            if (!(values_[k] >= 0.0) || values_[k] > prev_value) {
                throw Error(ErrorKind::InvalidArgument,
                            "survival values must be non-increasing in [0, 1]");
            }
            prev_value = values_[k];
        }
    }

    double operator()(double c) const noexcept {
        const auto below = std::lower_bound(jumps_.begin(), jumps_.end(), c) - jumps_.begin();
        return below == 0 ? 1.0 : values_[static_cast<std::size_t>(below - 1)];
    }

    std::span<const double> jump_times() const noexcept { return jumps_; }
    std::span<const double> values() const noexcept { return values_; }

private:
    std::vector<double> jumps_;
    std::vector<double> values_;
};

/// Inverse-probability-of-censoring weights at a fixed horizon, aligned
/// with the cohort rows.
struct WeightVector {
    double t0 = 0.0;
    std::vector<double> weights;

    std::size_t size() const noexcept { return weights.size(); }
    double operator[](std::size_t i) const noexcept { return weights[i]; }
};

/// Reverse Kaplan-Meier: censorings are the "events". At a time carrying
/// both, events leave the risk set first, so the censoring risk set at c_k
/// is #{X > c_k} + #{X = c_k, delta = 0}. With this convention
/// G(t-) * S(t-) = #{X >= t} / n exactly.
inline CensorSurvival fit_censor_km(const CohortSample& cohort) {
    if (cohort.empty()) throw Error(ErrorKind::EmptyCohort);
    const auto t = cohort.times();
    const auto d = cohort.statuses();
    std::vector<std::size_t> order(t.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return t[a] < t[b]; });

    std::vector<double> jumps;
    std::vector<double> values;
    double surv = 1.0;
    std::size_t at_risk = t.size();
    for (std::size_t k = 0; k < order.size();) {
        const double time = t[order[k]];
        std::size_t events = 0;
        std::size_t censored = 0;
        while (k < order.size() && t[order[k]] == time) {
            if (d[order[k]] == 0) {
                ++censored;
            } else {
                ++events;
            }
            ++k;
        }
        at_risk -= events;
        if (censored > 0) {
            surv *= 1.0 - static_cast<double>(censored) / static_cast<double>(at_risk);
            jumps.push_back(time);
            values.push_back(surv);
        }
        at_risk -= censored;
    }
    return CensorSurvival(std::move(jumps), std::move(values));
}

/// w_i = I(X_i < t0) delta_i / G(X_i) + I(X_i >= t0) / G(t0).
inline WeightVector ipw_weights(const CohortSample& cohort, const CensorSurvival& censor,
                                double t0) {
    const auto t = cohort.times();
    const auto d = cohort.statuses();
    WeightVector out{t0, std::vector<double>(t.size(), 0.0)};
    const double at_horizon = censor(t0);
    for (std::size_t i = 0; i < t.size(); ++i) {
        double g = 0.0;
        if (t[i] < t0) {
            if (d[i] == 0) continue;
            g = censor(t[i]);
        } else {
            g = at_horizon;
        }
        if (!(g > 0.0)) {
            throw Error(ErrorKind::ZeroCensorSurvival, "index " + std::to_string(i));
        }
        out.weights[i] = 1.0 / g;
    }
    return out;
}

/// Convenience: fit the censoring curve on the cohort itself and weight it.
inline WeightVector ipw_weights(const CohortSample& cohort, double t0) {
    return ipw_weights(cohort, fit_censor_km(cohort), t0);
}

} // namespace tdap
