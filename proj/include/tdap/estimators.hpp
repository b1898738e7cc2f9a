#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tdap/censoring.hpp"
#include "tdap/cohort.hpp"
#include "tdap/error.hpp"
#include "tdap/summation.hpp"

namespace tdap {

enum class CurveKind { precision_recall, roc };

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
};

/// PR or ROC trace evaluated at each distinct observed score, thresholds
/// descending. PR: x = TPF, y = PPV. ROC: x = FPF, y = TPF.
struct CurveTrace {
    CurveKind kind = CurveKind::precision_recall;
    std::vector<CurvePoint> points;
    std::vector<double> thresholds;
};

struct HorizonEstimates {
    double t0 = 0.0;
    double event_rate = 0.0;
    double ap = 0.0;
    double auc = 0.0;
};

struct PairedEstimates {
    double t0 = 0.0;
    double event_rate = 0.0;
    double ap1 = 0.0;
    double ap2 = 0.0;
    double auc1 = 0.0;
    double auc2 = 0.0;
    double rap = 0.0;
    double delta_auc = 0.0;
};

namespace detail {

inline double clamp_unit(double p) noexcept { return std::clamp(p, 0.0, 1.0); }

inline void check_aligned(const CohortSample& cohort, const WeightVector& weights) {
    if (weights.size() != cohort.size()) {
        throw Error(ErrorKind::InvalidArgument,
                    "weight vector has " + std::to_string(weights.size()) +
                        " entries for a cohort of " + std::to_string(cohort.size()));
    }
}

/// Subjects sharing one score value, listed from the highest score down.
struct ScoreGroup {
    double score = 0.0;
    double case_mass = 0.0;    // sum of w_i I(X_i < t0)
    double control_mass = 0.0; // sum of w_i I(X_i >= t0)
    std::size_t count = 0;
};

struct GroupedScores {
    std::vector<ScoreGroup> groups;
    double case_mass = 0.0;
    double control_mass = 0.0;
    std::size_t n = 0;
};

/// Groups subjects by score in descending order. Ties are visited in row
/// order, so the result depends only on the ranking of the scores.
inline GroupedScores group_scores(const CohortSample& cohort, const WeightVector& weights,
                                  Score which) {
    check_aligned(cohort, weights);
    const auto z = cohort.scores(which);
    const auto t = cohort.times();
    const double t0 = weights.t0;

    std::vector<std::size_t> order(z.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return z[a] > z[b]; });

    GroupedScores out;
    out.n = z.size();
    CompensatedSum total_case;
    CompensatedSum total_control;
    for (std::size_t k = 0; k < order.size();) {
        const double score = z[order[k]];
        CompensatedSum case_mass;
        CompensatedSum control_mass;
        std::size_t count = 0;
        for (; k < order.size() && z[order[k]] == score; ++k) {
            const std::size_t i = order[k];
            if (t[i] < t0) {
                case_mass += weights[i];
            } else {
                control_mass += weights[i];
            }
            ++count;
        }
        out.groups.push_back({score, case_mass.value(), control_mass.value(), count});
        total_case += out.groups.back().case_mass;
        total_control += out.groups.back().control_mass;
    }
    out.case_mass = total_case.value();
    out.control_mass = total_control.value();
    return out;
}

inline double half_tie_ppv(double mass_above, std::size_t count_above, const ScoreGroup& g) {
    return (mass_above + 0.5 * g.case_mass) /
           (static_cast<double>(count_above) + 0.5 * static_cast<double>(g.count));
}

} // namespace detail

/// Weighted cases among subjects scoring at least z, over the unweighted
/// count of such subjects.
inline double ppv_at(const CohortSample& cohort, const WeightVector& weights, double z,
                     Score which = Score::first) {
    detail::check_aligned(cohort, weights);
    const auto scores = cohort.scores(which);
    const auto t = cohort.times();
    CompensatedSum num;
    std::size_t den = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] >= z) {
            if (t[i] < weights.t0) num += weights[i];
            ++den;
        }
    }
    if (den == 0) throw Error(ErrorKind::EmptyThresholdSet);
    return detail::clamp_unit(num.value() / static_cast<double>(den));
}

inline double tpf_at(const CohortSample& cohort, const WeightVector& weights, double z,
                     Score which = Score::first) {
    detail::check_aligned(cohort, weights);
    const auto scores = cohort.scores(which);
    const auto t = cohort.times();
    CompensatedSum num;
    CompensatedSum den;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (t[i] < weights.t0) {
            den += weights[i];
            if (scores[i] >= z) num += weights[i];
        }
    }
    if (!(den.value() > 0.0)) throw Error(ErrorKind::NoEventsBeforeT0);
    return num.value() / den.value();
}

/// PPV at subject j's own score with tied subjects counted at half mass.
inline double ppv_tie_corrected(const CohortSample& cohort, const WeightVector& weights,
                                std::size_t j, Score which = Score::first) {
    detail::check_aligned(cohort, weights);
    const auto scores = cohort.scores(which);
    if (j >= scores.size()) throw Error(ErrorKind::InvalidArgument, "case index out of range");
    const auto t = cohort.times();
    const double zj = scores[j];
    CompensatedSum num;
    CompensatedSum den;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double k = scores[i] > zj ? 1.0 : (scores[i] == zj ? 0.5 : 0.0);
        if (k == 0.0) continue;
        if (t[i] < weights.t0) num += k * weights[i];
        den += k;
    }
    return detail::clamp_unit(num.value() / den.value());
}

/// Average positive predictive value at the horizon: the case-weighted
/// mean of the tie-corrected PPV evaluated at each case's score.
inline double ap_hat(const CohortSample& cohort, const WeightVector& weights,
                     Score which = Score::first) {
    const auto grouped = detail::group_scores(cohort, weights, which);
    if (!(grouped.case_mass > 0.0)) throw Error(ErrorKind::NoEventsBeforeT0);
    CompensatedSum mass_above;
    std::size_t count_above = 0;
    CompensatedSum num;
    for (const auto& g : grouped.groups) {
        if (g.case_mass > 0.0) {
            num += g.case_mass * detail::half_tie_ppv(mass_above.value(), count_above, g);
        }
        mass_above += g.case_mass;
        count_above += g.count;
    }
    // IPW weights above 1 can push a PPV past 1 in small censored samples.
    return detail::clamp_unit(num.value() / grouped.case_mass);
}

/// IPW time-dependent AUC: weighted case/control concordance, ties at 1/2.
inline double auc_hat(const CohortSample& cohort, const WeightVector& weights,
                      Score which = Score::first) {
    const auto grouped = detail::group_scores(cohort, weights, which);
    if (!(grouped.case_mass > 0.0)) throw Error(ErrorKind::NoEventsBeforeT0);
    if (!(grouped.control_mass > 0.0)) throw Error(ErrorKind::NoControlsAtT0);
    // Walk from the lowest score up, tracking control mass strictly below.
    CompensatedSum controls_below;
    CompensatedSum num;
    for (auto it = grouped.groups.rbegin(); it != grouped.groups.rend(); ++it) {
        if (it->case_mass > 0.0) {
            num += it->case_mass * (controls_below.value() + 0.5 * it->control_mass);
        }
        controls_below += it->control_mass;
    }
    return detail::clamp_unit(num.value() / (grouped.case_mass * grouped.control_mass));
}

inline double event_rate(const CohortSample& cohort, const WeightVector& weights) {
    detail::check_aligned(cohort, weights);
    const auto t = cohort.times();
    std::vector<double> case_mass(t.size(), 0.0);
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < weights.t0) case_mass[i] = weights[i];
    }
    return detail::clamp_unit(pairwise_sum(case_mass) / static_cast<double>(t.size()));
}

/// (TPF, PPV) at every distinct score, using the thresholded PPV of
/// `ppv_at`.
inline CurveTrace pr_curve(const CohortSample& cohort, const WeightVector& weights,
                           Score which = Score::first) {
    const auto grouped = detail::group_scores(cohort, weights, which);
    if (!(grouped.case_mass > 0.0)) throw Error(ErrorKind::NoEventsBeforeT0);
    CurveTrace trace{CurveKind::precision_recall, {}, {}};
    trace.points.reserve(grouped.groups.size());
    trace.thresholds.reserve(grouped.groups.size());
    CompensatedSum mass_at_or_above;
    std::size_t count_at_or_above = 0;
    for (const auto& g : grouped.groups) {
        mass_at_or_above += g.case_mass;
        count_at_or_above += g.count;
        const double tpf = detail::clamp_unit(mass_at_or_above.value() / grouped.case_mass);
        const double ppv = detail::clamp_unit(mass_at_or_above.value() /
                                              static_cast<double>(count_at_or_above));
        trace.points.push_back({tpf, ppv});
        trace.thresholds.push_back(g.score);
    }
    return trace;
}

/// (FPF, TPF) at every distinct score.
inline CurveTrace roc_curve(const CohortSample& cohort, const WeightVector& weights,
                            Score which = Score::first) {
    const auto grouped = detail::group_scores(cohort, weights, which);
    if (!(grouped.case_mass > 0.0)) throw Error(ErrorKind::NoEventsBeforeT0);
    if (!(grouped.control_mass > 0.0)) throw Error(ErrorKind::NoControlsAtT0);
    CurveTrace trace{CurveKind::roc, {}, {}};
    CompensatedSum cases;
    CompensatedSum controls;
    for (const auto& g : grouped.groups) {
        cases += g.case_mass;
        controls += g.control_mass;
        trace.points.push_back({detail::clamp_unit(controls.value() / grouped.control_mass),
                                detail::clamp_unit(cases.value() / grouped.case_mass)});
        trace.thresholds.push_back(g.score);
    }
    return trace;
}

inline double rap_hat(const CohortSample& cohort, const WeightVector& weights) {
    if (!cohort.paired()) throw Error(ErrorKind::NotPaired);
    const double ap1 = ap_hat(cohort, weights, Score::first);
    const double ap2 = ap_hat(cohort, weights, Score::second);
    if (!(ap2 > 0.0)) throw Error(ErrorKind::DivisionByZeroAP);
    return ap1 / ap2;
}

inline double rap_hat(const CohortSample& cohort, double t0) {
    if (!cohort.paired()) throw Error(ErrorKind::NotPaired);
    validate_horizon(cohort, t0);
    return rap_hat(cohort, ipw_weights(cohort, t0));
}

inline double delta_auc_hat(const CohortSample& cohort, const WeightVector& weights) {
    if (!cohort.paired()) throw Error(ErrorKind::NotPaired);
    return auc_hat(cohort, weights, Score::first) - auc_hat(cohort, weights, Score::second);
}

inline double delta_auc_hat(const CohortSample& cohort, double t0) {
    if (!cohort.paired()) throw Error(ErrorKind::NotPaired);
    validate_horizon(cohort, t0);
    return delta_auc_hat(cohort, ipw_weights(cohort, t0));
}

/// Event rate, AP and AUC of one score at one horizon, Ĝ fitted on the
/// cohort itself.
inline HorizonEstimates estimate_horizon(const CohortSample& cohort, double t0,
                                         Score which = Score::first) {
    validate_horizon(cohort, t0);
    const auto w = ipw_weights(cohort, t0);
    return {t0, event_rate(cohort, w), ap_hat(cohort, w, which), auc_hat(cohort, w, which)};
}

inline PairedEstimates estimate_paired(const CohortSample& cohort, double t0) {
    if (!cohort.paired()) throw Error(ErrorKind::NotPaired);
    validate_horizon(cohort, t0);
    const auto w = ipw_weights(cohort, t0);
    PairedEstimates out;
    out.t0 = t0;
    out.event_rate = event_rate(cohort, w);
    out.ap1 = ap_hat(cohort, w, Score::first);
    out.ap2 = ap_hat(cohort, w, Score::second);
    out.auc1 = auc_hat(cohort, w, Score::first);
    out.auc2 = auc_hat(cohort, w, Score::second);
    if (!(out.ap2 > 0.0)) throw Error(ErrorKind::DivisionByZeroAP);
    out.rap = out.ap1 / out.ap2;
    out.delta_auc = out.auc1 - out.auc2;
    return out;
}

} // namespace tdap
