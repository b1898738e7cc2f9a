#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "brute_force.hpp"
#include "tdap/estimators.hpp"
#include "tdap/simulation.hpp"

using namespace tdap;
using Catch::Approx;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

CohortSample make(std::vector<double> times, std::vector<int> statuses, std::vector<double> z1,
                  std::vector<double> z2 = {}) {
    std::vector<SubjectRecord> rows;
    for (std::size_t i = 0; i < times.size(); ++i) {
        SubjectRecord r{times[i], statuses[i], z1[i], std::nullopt};
        if (!z2.empty()) r.score2 = z2[i];
        rows.push_back(r);
    }
    return CohortSample(rows);
}

// Four subjects, all events, t0 = 2.5: cases are the first two.
CohortSample four() { return make({1, 2, 3, 4}, {1, 1, 1, 1}, {4, 2, 3, 1}); }

ErrorKind error_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::InvalidArgument;
}

} // namespace

TEST_CASE("ppv_at") {
    const auto c = four();
    const auto w = ipw_weights(c, 2.5);
    CHECK(ppv_at(c, w, 2.0) == Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(ppv_at(c, w, -inf) == event_rate(c, w));
    CHECK(ppv_at(c, w, 4.0) == 1.0);
    CHECK(error_of([&] { (void)ppv_at(c, w, 5.0); }) == ErrorKind::EmptyThresholdSet);

    const auto perfect = make({1, 1, 5, 5}, {1, 1, 1, 1}, {9, 8, 2, 1});
    CHECK(ppv_at(perfect, ipw_weights(perfect, 3.0), 8.0) == 1.0);
}

TEST_CASE("tpf_at") {
    const auto c = four();
    const auto w = ipw_weights(c, 2.5);
    CHECK(tpf_at(c, w, 2.0) == 1.0);
    CHECK(tpf_at(c, w, 3.0) == 0.5);
    CHECK(tpf_at(c, w, 5.0) == 0.0);
    CHECK(tpf_at(c, w, -inf) == 1.0);
    const auto no_cases = make({3, 4}, {1, 1}, {1, 2});
    CHECK(error_of([&] { (void)tpf_at(no_cases, ipw_weights(no_cases, 2.0), 0.0); }) ==
          ErrorKind::NoEventsBeforeT0);
}

TEST_CASE("ppv_tie_corrected on tied scores") {
    // Cases at t0 = 3 are subjects 0 and 2; subject 1 is a control.
    const auto c = make({1, 5, 1}, {1, 1, 1}, {2, 2, 1});
    const auto w = ipw_weights(c, 3.0);
    CHECK(ppv_tie_corrected(c, w, 0) == 0.5);
    CHECK(ppv_tie_corrected(c, w, 2) == Approx(0.6).epsilon(1e-15));

    const auto same = make({1, 5}, {1, 1}, {1, 1});
    CHECK(ppv_tie_corrected(same, ipw_weights(same, 3.0), 0) == 0.5);
}

TEST_CASE("ppv_tie_corrected with distinct scores counts only itself at half mass") {
    const auto c = four();
    const auto w = ipw_weights(c, 2.5);
    // Subject 1 (score 2): above it scores 4 (case) and 3 (control).
    CHECK(ppv_tie_corrected(c, w, 1) == Approx((1.0 + 0.5) / (2.0 + 0.5)).epsilon(1e-15));
    // Subject 0 (score 4): nothing above.
    CHECK(ppv_tie_corrected(c, w, 0) == 1.0);
    // A control evaluates to the cases strictly above it over count + 1/2.
    CHECK(ppv_tie_corrected(c, w, 2) == Approx(1.0 / 1.5).epsilon(1e-15));
}

TEST_CASE("ap_hat on the four-subject cohort") {
    const auto c = four();
    CHECK(ap_hat(c, ipw_weights(c, 2.5)) == 0.8);
}

TEST_CASE("ap_hat equals one for a perfect score") {
    const auto c = make({1, 2, 6, 7, 8}, {1, 1, 0, 1, 0}, {10, 9, 3, 2, 1});
    const auto w = ipw_weights(c, 5.0);
    CHECK(ap_hat(c, w) == 1.0);
    CHECK(auc_hat(c, w) == 1.0);
}

TEST_CASE("ap_hat requires cases") {
    const auto c = make({3, 4}, {1, 0}, {1, 2});
    CHECK(error_of([&] { (void)ap_hat(c, ipw_weights(c, 2.0)); }) == ErrorKind::NoEventsBeforeT0);
}

TEST_CASE("weight vector must match the cohort") {
    const auto c = four();
    const WeightVector short_w{2.5, {1.0, 1.0}};
    CHECK(error_of([&] { (void)ap_hat(c, short_w); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("auc_hat") {
    const auto one_pair = make({1, 5}, {1, 1}, {2, 1});
    CHECK(auc_hat(one_pair, ipw_weights(one_pair, 3.0)) == 1.0);
    const auto tied = make({1, 5}, {1, 1}, {1, 1});
    CHECK(auc_hat(tied, ipw_weights(tied, 3.0)) == 0.5);
    const auto c = four();
    CHECK(auc_hat(c, ipw_weights(c, 2.5)) == 0.75);

    const auto all_cases = make({1, 2}, {1, 1}, {1, 2});
    CHECK(error_of([&] { (void)auc_hat(all_cases, WeightVector{3.0, {1.0, 1.0}}); }) ==
          ErrorKind::NoControlsAtT0);
}

TEST_CASE("event_rate") {
    const auto c = four();
    CHECK(event_rate(c, ipw_weights(c, 2.5)) == 0.5);
    const auto censored = make({1, 2, 5}, {0, 0, 1}, {1, 2, 3});
    CHECK(event_rate(censored, ipw_weights(censored, 3.0)) == 0.0);
}

TEST_CASE("pr_curve on the four-subject cohort") {
    const auto c = four();
    const auto trace = pr_curve(c, ipw_weights(c, 2.5));
    CHECK(trace.kind == CurveKind::precision_recall);
    REQUIRE(trace.thresholds == std::vector<double>{4, 3, 2, 1});
    const std::vector<std::pair<double, double>> expected{
        {0.5, 1.0}, {0.5, 0.5}, {1.0, 2.0 / 3.0}, {1.0, 0.5}};
    for (std::size_t k = 0; k < expected.size(); ++k) {
        CHECK(trace.points[k].x == expected[k].first);
        CHECK(trace.points[k].y == Approx(expected[k].second).epsilon(1e-15));
    }
}

TEST_CASE("roc_curve on the four-subject cohort") {
    const auto c = four();
    const auto trace = roc_curve(c, ipw_weights(c, 2.5));
    CHECK(trace.kind == CurveKind::roc);
    REQUIRE(trace.points.size() == 4);
    CHECK(trace.points[0].x == 0.0);
    CHECK(trace.points[0].y == 0.5);
    CHECK(trace.points[1].x == 0.5);
    CHECK(trace.points[1].y == 0.5);
    CHECK(trace.points[2].x == 0.5);
    CHECK(trace.points[2].y == 1.0);
    CHECK(trace.points[3].x == 1.0);
    CHECK(trace.points[3].y == 1.0);
}

TEST_CASE("curves of a perfect score and of a single threshold") {
    const auto perfect = make({1, 2, 6, 7}, {1, 1, 1, 1}, {10, 9, 3, 2});
    const auto trace = pr_curve(perfect, ipw_weights(perfect, 5.0));
    for (std::size_t k = 0; k < trace.points.size(); ++k) {
        if (trace.thresholds[k] >= 9) CHECK(trace.points[k].y == 1.0);
    }
    const auto flat = make({1, 2, 6}, {1, 1, 1}, {3, 3, 3});
    const auto single = pr_curve(flat, ipw_weights(flat, 5.0));
    REQUIRE(single.points.size() == 1);
    CHECK(single.points[0].x == 1.0);
    CHECK(single.points[0].y == Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("paired contrasts") {
    const auto c = make({1, 2, 3, 4}, {1, 1, 0, 1}, {4, 2, 3, 1}, {4, 2, 3, 1});
    CHECK(rap_hat(c, 2.5) == 1.0);
    CHECK(delta_auc_hat(c, 2.5) == 0.0);
    const auto e = estimate_paired(c, 2.5);
    CHECK(e.rap == 1.0);
    CHECK(e.delta_auc == 0.0);

    const auto swapped = make({1, 2, 3, 4}, {1, 1, 1, 1}, {4, 2, 3, 1}, {1, 3, 2, 4});
    const auto p = estimate_paired(swapped, 2.5);
    CHECK(p.rap == Approx(p.ap1 / p.ap2).epsilon(1e-15));
    CHECK(p.delta_auc == Approx(p.auc1 - p.auc2).epsilon(1e-15));

    CHECK(error_of([&] { (void)rap_hat(four(), 2.5); }) == ErrorKind::NotPaired);
    CHECK(error_of([&] { (void)delta_auc_hat(four(), 2.5); }) == ErrorKind::NotPaired);
}

TEST_CASE("property: ap_hat matches the brute-force definition on uncensored cohorts") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 500; ++trial) {
        const auto c = testing::random_uncensored_cohort(rng, 1 + rng() % 50, trial % 2 == 0);
        const double t0 = testing::median_time(c);
        bool has_case = false;
        for (double t : c.times()) has_case |= t < t0;
        if (!has_case) continue;
        const auto w = ipw_weights(c, t0);
        REQUIRE(std::abs(ap_hat(c, w) - testing::brute_force_ap(c, t0)) <= 1e-12);
        bool has_control = false;
        for (double t : c.times()) has_control |= t >= t0;
        if (has_control) {
            REQUIRE(std::abs(auc_hat(c, w) - testing::brute_force_auc(c, w)) <= 1e-12);
        }
    }
}

TEST_CASE("property: IPW ap_hat and auc_hat match direct formulas under censoring") {
    std::mt19937_64 rng(102);
    for (int trial = 0; trial < 300; ++trial) {
        const auto c = testing::random_censored_cohort(rng, 2 + rng() % 40);
        const double t0 = testing::median_time(c);
        try {
            validate_horizon(c, t0);
        } catch (const Error&) {
            continue;
        }
        const auto w = ipw_weights(c, t0);
        const double direct = testing::brute_force_weighted_ap(c, w);
        REQUIRE(std::abs(ap_hat(c, w) - std::min(direct, 1.0)) <= 1e-12);
        bool has_control = false;
        for (std::size_t i = 0; i < c.size(); ++i) has_control |= c.times()[i] >= t0;
        if (has_control) {
            REQUIRE(std::abs(auc_hat(c, w) - testing::brute_force_auc(c, w)) <= 1e-12);
        }
    }
}

TEST_CASE("property: estimates stay within [0, 1]") {
    std::mt19937_64 rng(103);
    for (int trial = 0; trial < 500; ++trial) {
        const auto c = testing::random_censored_cohort(rng, 2 + rng() % 60);
        const double t0 = testing::median_time(c);
        try {
            validate_horizon(c, t0);
        } catch (const Error&) {
            continue;
        }
        const auto w = ipw_weights(c, t0);
        const double pi = event_rate(c, w);
        const double ap = ap_hat(c, w);
        REQUIRE((pi >= 0.0 && pi <= 1.0));
        REQUIRE((ap >= 0.0 && ap <= 1.0));
        for (const auto& p : pr_curve(c, w).points) {
            REQUIRE((p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0));
        }
        try {
            const double auc = auc_hat(c, w);
            REQUIRE((auc >= 0.0 && auc <= 1.0));
        } catch (const Error& e) {
            REQUIRE(e.kind() == ErrorKind::NoControlsAtT0);
        }
    }
}

TEST_CASE("property: strictly increasing score transforms change nothing") {
    std::mt19937_64 rng(104);
    for (int trial = 0; trial < 300; ++trial) {
        const auto c = testing::random_censored_cohort(rng, 2 + rng() % 60);
        const double t0 = testing::median_time(c);
        try {
            validate_horizon(c, t0);
        } catch (const Error&) {
            continue;
        }
        const auto t = testing::transform_scores(c, [](double z) { return std::exp(z / 4.0) * 3.0 - 7.0; });
        const auto w = ipw_weights(c, t0);
        const auto wt = ipw_weights(t, t0);
        REQUIRE(ap_hat(c, w) == ap_hat(t, wt));
        const auto pr = pr_curve(c, w);
        const auto prt = pr_curve(t, wt);
        REQUIRE(pr.points.size() == prt.points.size());
        for (std::size_t k = 0; k < pr.points.size(); ++k) {
            REQUIRE(pr.points[k].x == prt.points[k].x);
            REQUIRE(pr.points[k].y == prt.points[k].y);
        }
        try {
            REQUIRE(auc_hat(c, w) == auc_hat(t, wt));
            const auto roc = roc_curve(c, w);
            const auto roct = roc_curve(t, wt);
            for (std::size_t k = 0; k < roc.points.size(); ++k) {
                REQUIRE(roc.points[k].x == roct.points[k].x);
                REQUIRE(roc.points[k].y == roct.points[k].y);
            }
        } catch (const Error& e) {
            REQUIRE(e.kind() == ErrorKind::NoControlsAtT0);
        }
    }
}

TEST_CASE("property: a perfect score gives AP = AUC = 1") {
    std::mt19937_64 rng(105);
    for (int trial = 0; trial < 300; ++trial) {
        const auto c = testing::random_perfect_cohort(rng, 2 + rng() % 60, 5.0);
        const auto w = ipw_weights(c, 5.0);
        REQUIRE(ap_hat(c, w) == 1.0);
        REQUIRE(auc_hat(c, w) == 1.0);
    }
}

TEST_CASE("non-informative score: AP tracks the event rate") {
    constexpr std::size_t n = 100'000;
    constexpr int replicates = 20;
    const double t0 = 8.0;
    std::vector<double> diffs;
    for (int r = 0; r < replicates; ++r) {
        const auto base = generate_cohort(n, 500 + r);
        std::mt19937_64 rng(900 + r);
        std::normal_distribution<double> noise;
        const auto c = testing::transform_scores(base, [&](double) { return noise(rng); });
        const auto w = ipw_weights(c, t0);
        diffs.push_back(ap_hat(c, w) - event_rate(c, w));
    }
    double mean = 0.0;
    for (double d : diffs) mean += d;
    mean /= replicates;
    double var = 0.0;
    for (double d : diffs) var += (d - mean) * (d - mean);
    const double sd = std::sqrt(var / (replicates - 1));
    CHECK(std::abs(diffs.front()) <= 3.0 * sd);
    CHECK(std::abs(mean) <= 3.0 * sd / std::sqrt(double(replicates)));
}

TEST_CASE("ROC dominance carries over to PR dominance on a designed cohort") {
    std::mt19937_64 rng(106);
    const auto base = testing::random_uncensored_cohort(rng, 400, true);
    const double t0 = testing::median_time(base);
    validate_horizon(base, t0);
    // Lifting case scores can only move cases up the ranking.
    std::vector<SubjectRecord> rows = base.records();
    for (auto& r : rows) {
        r.score2 = r.time < t0 ? r.score1 + 1.5 : r.score1;
    }
    const CohortSample c(rows);
    const auto w = ipw_weights(c, t0);
    const auto roc_a = roc_curve(c, w, Score::second);
    const auto roc_b = roc_curve(c, w, Score::first);
    const auto pr_a = pr_curve(c, w, Score::second);
    const auto pr_b = pr_curve(c, w, Score::first);
    // Best TPF reachable at FPF <= f, and best precision reachable at TPF >= r.
    auto roc_at = [](const CurveTrace& tr, double f) {
        double best = 0.0;
        for (const auto& p : tr.points) if (p.x <= f) best = std::max(best, p.y);
        return best;
    };
    auto pr_at = [](const CurveTrace& tr, double r) {
        double best = 0.0;
        for (const auto& p : tr.points) if (p.x >= r) best = std::max(best, p.y);
        return best;
    };
    for (double f = 0.0; f <= 1.0; f += 0.01) REQUIRE(roc_at(roc_a, f) >= roc_at(roc_b, f));
    for (double r = 0.0; r <= 1.0; r += 0.01) REQUIRE(pr_at(pr_a, r) >= pr_at(pr_b, r) - 1e-12);
}

TEST_CASE("simulated scores: AUC and AP rank the two scores differently at t0 = 8") {
    const auto c = generate_uncensored_cohort(400'000, 77);
    const auto w = unit_weights(c.size(), 8.0);
    CHECK(ap_hat(c, w, Score::first) > ap_hat(c, w, Score::second));
    CHECK(auc_hat(c, w, Score::second) > auc_hat(c, w, Score::first));
}
