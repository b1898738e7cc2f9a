#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tdap/censoring.hpp"
#include "tdap/cohort.hpp"
#include "tdap/error.hpp"
#include "tdap/estimators.hpp"
#include "tdap/parallel.hpp"
#include "tdap/random.hpp"
#include "tdap/summation.hpp"

namespace tdap {

enum class Estimand { ap, auc, rap, delta_auc };

constexpr std::string_view estimand_name(Estimand e) noexcept {
    switch (e) {
    case Estimand::ap: return "AP";
    case Estimand::auc: return "AUC";
    case Estimand::rap: return "rAP";
    case Estimand::delta_auc: return "dAUC";
    }
    return "?";
}

struct BootstrapSpec {
    std::size_t replicates = 1000;
    double level = 0.95;
    std::uint64_t seed = 20190301;

    void validate() const {
        if (replicates < 2) {
            throw Error(ErrorKind::InvalidArgument, "bootstrap needs at least 2 replicates");
        }
        if (!(level > 0.0 && level < 1.0)) {
            throw Error(ErrorKind::InvalidArgument, "confidence level must lie in (0, 1)");
        }
    }
};

struct AccuracySummary {
    Estimand estimand = Estimand::ap;
    Score score = Score::first;
    double t0 = 0.0;
    double point = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double se = 0.0;
    std::size_t replicates_used = 0;
    std::size_t replicates_failed = 0;

    bool covers(double value) const noexcept { return lower <= value && value <= upper; }
};

/// One quantity to bootstrap. `score` is ignored for the paired contrasts.
struct BootstrapTarget {
    double t0 = 0.0;
    Estimand estimand = Estimand::ap;
    Score score = Score::first;
};

/// Empirical quantile with linear interpolation between order statistics
/// at position (B - 1) p (zero-based). `sorted` must be ascending.
inline double empirical_quantile(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw Error(ErrorKind::InvalidArgument, "quantile of empty sample");
    const double h = static_cast<double>(sorted.size() - 1) * std::clamp(p, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    if (frac == 0.0) return sorted[lo];
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
inline double sample_sd(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    const double mean = pairwise_sum(values) / static_cast<double>(values.size());
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        sq[i] = (values[i] - mean) * (values[i] - mean);
    }
    return std::sqrt(pairwise_sum(sq) / static_cast<double>(values.size() - 1));
}

/// Percentile interval and SE from replicate values in replicate order;
/// NaN entries mark failed replicates.
inline AccuracySummary summarize_replicates(const BootstrapTarget& target, double point,
                                            std::span<const double> replicate_values,
                                            double level) {
    std::vector<double> ok;
    ok.reserve(replicate_values.size());
    for (double v : replicate_values) {
        if (!std::isnan(v)) ok.push_back(v);
    }
    AccuracySummary s;
    s.estimand = target.estimand;
    s.score = target.score;
    s.t0 = target.t0;
    s.point = point;
    s.replicates_used = ok.size();
    s.replicates_failed = replicate_values.size() - ok.size();
    // More than 10% failures means the horizon is too extreme for this n.
    if (ok.empty() || 10 * s.replicates_failed > replicate_values.size()) {
        throw Error(ErrorKind::TooManyFailedReplicates,
                    std::string(estimand_name(target.estimand)) + " at t0 = " +
                        detail::format_double(target.t0) + ": " +
                        std::to_string(s.replicates_failed) + " of " +
                        std::to_string(replicate_values.size()) + " failed");
    }
    s.se = sample_sd(ok);
    std::sort(ok.begin(), ok.end());
    const double alpha = 1.0 - level;
    s.lower = empirical_quantile(ok, alpha / 2.0);
    s.upper = empirical_quantile(ok, 1.0 - alpha / 2.0);
    return s;
}

namespace detail {

/// Lazily evaluated estimates sharing one weight vector. Resamples skip
/// the support check: AP stays defined without controls, and AUC raises
/// NoControlsAtT0 by itself.
class HorizonEvaluator {
public:
    HorizonEvaluator(const CohortSample& cohort, const CensorSurvival& censor, double t0,
                     bool check_support)
        : cohort_(cohort) {
        if (check_support) validate_horizon(cohort, t0);
        weights_ = ipw_weights(cohort, censor, t0);
    }

    double operator()(Estimand e, Score score) {
        switch (e) {
        case Estimand::ap: return ap(score);
        case Estimand::auc: return auc(score);
        case Estimand::rap: {
            if (!cohort_.paired()) throw Error(ErrorKind::NotPaired);
            const double denom = ap(Score::second);
            if (!(denom > 0.0)) throw Error(ErrorKind::DivisionByZeroAP);
            return ap(Score::first) / denom;
        }
        case Estimand::delta_auc:
            if (!cohort_.paired()) throw Error(ErrorKind::NotPaired);
            return auc(Score::first) - auc(Score::second);
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

private:
    static std::size_t slot(Score s) { return s == Score::first ? 0 : 1; }

    double ap(Score s) {
        auto& v = ap_[slot(s)];
        if (!v) v = ap_hat(cohort_, weights_, s);
        return *v;
    }

    double auc(Score s) {
        auto& v = auc_[slot(s)];
        if (!v) v = auc_hat(cohort_, weights_, s);
        return *v;
    }

    const CohortSample& cohort_;
    WeightVector weights_;
    std::optional<double> ap_[2];
    std::optional<double> auc_[2];
};

/// Evaluates every target on one cohort; an undefined target yields NaN
/// when `tolerate_failures`, otherwise the error propagates.
inline std::vector<double> evaluate_targets(const CohortSample& cohort,
                                            std::span<const BootstrapTarget> targets,
                                            bool tolerate_failures) {
    const auto censor = fit_censor_km(cohort);
    std::vector<double> out(targets.size(), std::numeric_limits<double>::quiet_NaN());
    std::map<double, HorizonEvaluator> by_horizon;
    std::map<double, bool> horizon_failed;
    for (std::size_t k = 0; k < targets.size(); ++k) {
        const auto& target = targets[k];
        if (horizon_failed.count(target.t0)) continue;
        try {
            auto it = by_horizon.find(target.t0);
            if (it == by_horizon.end()) {
                try {
                    it = by_horizon.try_emplace(target.t0, cohort, censor, target.t0,
                                                   !tolerate_failures)
                             .first;
                } catch (const Error&) {
                    horizon_failed[target.t0] = true;
                    throw;
                }
            }
            out[k] = it->second(target.estimand, target.score);
        } catch (const Error& e) {
            if (!tolerate_failures) throw;
            if (e.kind() == ErrorKind::NotPaired) throw;
        }
    }
    return out;
}

} // namespace detail

/// Point estimates plus the replicate matrix (row b, column k = target k;
/// NaN where the target was undefined in resample b).
struct ReplicateDraws {
    std::vector<double> points;
    std::vector<double> values;
    std::size_t replicates = 0;

    std::vector<double> column(std::size_t k) const {
        const std::size_t width = points.size();
        std::vector<double> out(replicates);
        for (std::size_t b = 0; b < replicates; ++b) out[b] = values[b * width + k];
        return out;
    }
};

/// Resamples subjects with replacement; inside each replicate Ĝ, the
/// weights, and every target are recomputed. Paired targets share the
/// resample. Replicates run on `threads` workers (0 = all cores) and are
/// merged by replicate index, so the draws do not depend on the thread count.
inline ReplicateDraws bootstrap_draws(const CohortSample& cohort,
                                      std::span<const BootstrapTarget> targets,
                                      const BootstrapSpec& spec, unsigned threads = 1) {
    spec.validate();
    ReplicateDraws draws;
    draws.points = detail::evaluate_targets(cohort, targets, false);
    draws.replicates = spec.replicates;
    const std::size_t n = cohort.size();
    const std::size_t width = targets.size();
    draws.values.assign(spec.replicates * width, std::numeric_limits<double>::quiet_NaN());
    if (width == 0) return draws;
    parallel_for(spec.replicates, threads, [&](std::size_t b) {
        auto engine = make_stream(spec.seed, b);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::vector<std::size_t> rows(n);
        for (auto& r : rows) r = pick(engine);
        const auto resample = cohort.select(rows);
        const auto v = detail::evaluate_targets(resample, targets, true);
        std::copy(v.begin(), v.end(),
                  draws.values.begin() + static_cast<std::ptrdiff_t>(b * width));
    });
    return draws;
}

inline std::vector<AccuracySummary> bootstrap_summaries(const CohortSample& cohort,
                                                        std::span<const BootstrapTarget> targets,
                                                        const BootstrapSpec& spec,
                                                        unsigned threads = 1) {
    const auto draws = bootstrap_draws(cohort, targets, spec, threads);
    std::vector<AccuracySummary> out;
    out.reserve(targets.size());
    for (std::size_t k = 0; k < targets.size(); ++k) {
        out.push_back(summarize_replicates(targets[k], draws.points[k], draws.column(k), spec.level));
    }
    return out;
}

inline AccuracySummary bootstrap_summary(const CohortSample& cohort, double t0,
                                         Estimand estimand, const BootstrapSpec& spec,
                                         unsigned threads = 1, Score score = Score::first) {
    const BootstrapTarget target{t0, estimand, score};
    return bootstrap_summaries(cohort, std::span(&target, 1), spec, threads).front();
}

} // namespace tdap
