#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "doetree/classic.hpp"
#include "doetree/datasets.hpp"
#include "doetree/errors.hpp"
#include "doetree/glm.hpp"
#include "doetree/rng.hpp"

using namespace doetree;

namespace {

Dataset two_level_dataset(int k, std::vector<double> y) {
    std::vector<Factor> fs;
    for (int j = 0; j < k; ++j)
        fs.push_back(Factor::two_level_factor("x" + std::to_string(j + 1), "-", "+"));
    return Dataset::make(std::move(fs), enumerate_design(k), std::move(y));
}

std::map<Term, double> model_map(const SelectedModel& m) {
    std::map<Term, double> out;
    for (const auto& [t, c] : m.fitted.coefficients) out[t] = c;
    return out;
}

// Exhaustive AIC over every hierarchical (downward-closed) term set: the
// brute-force oracle for the stepwise search on orthogonal designs.
std::vector<Term> brute_force_hierarchical_aic(const Dataset& data) {
    EffectTable table = estimate_effects(data);
    const int n = table.n;
    std::vector<Term> effects(table.terms.begin() + 1, table.terms.end());
    const std::size_t m = effects.size();
    double tss = 0.0;
    for (double v : data.y()) tss += (v - table.estimates[0]) * (v - table.estimates[0]);

    double best_aic = std::numeric_limits<double>::infinity();
    std::vector<Term> best;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
        bool hier = true;
        for (std::size_t i = 0; i < m && hier; ++i) {
            if (!(mask >> i & 1)) continue;
            for (std::size_t j = 0; j < m && hier; ++j)
                if (i != j && effects[i].contains(effects[j]) && !(mask >> j & 1)) hier = false;
        }
        if (!hier) continue;
        double rss = tss;
        int p = 1;
        for (std::size_t i = 0; i < m; ++i)
            if (mask >> i & 1) {
                rss -= n * table.estimates[i + 1] * table.estimates[i + 1];
                ++p;
            }
        rss = std::max(rss, 0.0);
        double a = rss <= 0.0 ? -std::numeric_limits<double>::infinity()
                              : n * std::log(rss / n) + 2.0 * (p + 1);
        if (a < best_aic) {
            best_aic = a;
            best.clear();
            for (std::size_t i = 0; i < m; ++i)
                if (mask >> i & 1) best.push_back(effects[i]);
        }
    }
    std::sort(best.begin(), best.end());
    return best;
}

}  // namespace

TEST_CASE("estimate_effects reproduces the published wafer fit") {
    EffectTable t = estimate_effects(wafer_reconstruction().data);
    REQUIRE(t.terms.size() == 16);
    CHECK(t.dof == 80);
    CHECK(t.n == 96);
    REQUIRE(t.common_se.has_value());
    CHECK(std::fabs(*t.common_se - 0.049744) < 1e-9);
    std::map<Term, double> expect = {
        {Term{}, 14.161250}, {Term{0}, -0.038729},   {Term{1}, 0.086271},
        {Term{2}, -0.038708}, {Term{3}, 0.245021},   {Term{0, 1}, 0.003708},
        {Term{0, 2}, -0.046229}, {Term{0, 3}, -0.025000}, {Term{1, 2}, 0.028771},
        {Term{1, 3}, -0.015042}, {Term{2, 3}, -0.172521}, {Term{0, 1, 2}, 0.048750},
        {Term{0, 1, 3}, 0.012521}, {Term{0, 2, 3}, -0.015000}, {Term{1, 2, 3}, 0.054958},
        {Term{0, 1, 2, 3}, 0.009979}};
    for (std::size_t i = 0; i < t.terms.size(); ++i)
        CHECK(std::fabs(t.estimates[i] - expect.at(t.terms[i])) < 1e-9);
}

TEST_CASE("estimate_effects edge cases") {
    // all-zero response
    EffectTable z = estimate_effects(two_level_dataset(3, std::vector<double>(8, 0.0)));
    for (double e : z.estimates) CHECK(e == 0.0);
    CHECK(!z.common_se.has_value());

    // unreplicated 2^3 with y = x1 exactly
    std::vector<double> y;
    for (const auto& pt : enumerate_design(3)) y.push_back(pt.codes[0] == 0 ? -1.0 : 1.0);
    EffectTable t = estimate_effects(two_level_dataset(3, y));
    for (std::size_t i = 0; i < t.terms.size(); ++i) {
        double want = (t.terms[i] == Term{0}) ? 1.0 : 0.0;
        CHECK(t.estimates[i] == doctest::Approx(want).epsilon(1e-12));
    }
    CHECK(!t.common_se.has_value());
    CHECK(t.dof == 0);

    // incomplete design rejected
    std::vector<Factor> fs = {Factor::two_level_factor("a", "-", "+")};
    Dataset bad = Dataset::make(fs, {{{0}}, {{0}}, {{1}}}, {1, 2, 3});
    CHECK_THROWS_AS(estimate_effects(bad), ValidationError);
}

TEST_CASE("select_ier keeps D and CD on the wafer table at alpha 0.05") {
    EffectTable t = estimate_effects(wafer_reconstruction().data);
    SelectedModel m = select_ier(t, 0.05);
    REQUIRE(m.terms.size() == 3);  // intercept + D + CD
    CHECK(m.keeps(Term{3}));
    CHECK(m.keeps(Term{2, 3}));
    auto cm = model_map(m);
    CHECK(std::fabs(cm.at(Term{}) - 14.16125) < 1e-5);
    CHECK(std::fabs(cm.at(Term{3}) - 0.24502) < 1e-5);
    CHECK(std::fabs(cm.at(Term{2, 3}) - (-0.17252)) < 1e-5);
}

TEST_CASE("select_ier limits and monotonicity") {
    // replicated 2^2 with symmetric within-cell noise: every effect estimate
    // is exactly zero while the error estimate stays positive
    std::vector<Factor> fs2 = {Factor::two_level_factor("a", "-", "+"),
                               Factor::two_level_factor("b", "-", "+")};
    std::vector<DesignPoint> rows2;
    std::vector<double> y2;
    for (const auto& p : enumerate_design(2)) {
        rows2.push_back(p);
        rows2.push_back(p);
        y2.push_back(1.0 + 0.1);
        y2.push_back(1.0 - 0.1);
    }
    EffectTable t = estimate_effects(Dataset::make(fs2, rows2, y2));
    SelectedModel m = select_ier(t, 0.05);
    CHECK(m.terms.size() == 1);  // intercept only

    // alpha = 1: critical value 0, every nonzero-t term kept
    EffectTable w = estimate_effects(wafer_reconstruction().data);
    SelectedModel all = select_ier(w, 1.0);
    CHECK(all.terms.size() == 16);

    // monotone in alpha
    Rng rng(71, 0);
    std::vector<double> y(96);
    auto pts = enumerate_design(4);
    std::vector<Factor> fs;
    for (int j = 0; j < 4; ++j)
        fs.push_back(Factor::two_level_factor("x" + std::to_string(j + 1), "-", "+"));
    std::vector<DesignPoint> rows;
    for (const auto& p : pts)
        for (int r = 0; r < 6; ++r) rows.push_back(p);
    for (auto& v : y) v = rng.normal();
    Dataset d = Dataset::make(fs, rows, y);
    EffectTable noisy = estimate_effects(d);
    std::vector<double> alphas = {0.01, 0.05, 0.1, 0.2, 0.5};
    for (std::size_t i = 0; i + 1 < alphas.size(); ++i) {
        SelectedModel a = select_ier(noisy, alphas[i]);
        SelectedModel b = select_ier(noisy, alphas[i + 1]);
        for (const auto& term : a.terms) CHECK(b.keeps(term));
    }

    // unreplicated tables are rejected
    EffectTable unrep = estimate_effects(two_level_dataset(3, {1, 2, 3, 4, 5, 6, 7, 8}));
    CHECK_THROWS_AS(select_ier(unrep, 0.05), ValidationError);
    CHECK_THROWS_AS(select_eer(unrep, 0.1), ValidationError);
}

TEST_CASE("select_eer matches IER's pick on the wafer data at alpha 0.10") {
    EffectTable t = estimate_effects(wafer_reconstruction().data);
    SelectedModel m = select_eer(t, 0.10);
    REQUIRE(m.terms.size() == 3);
    CHECK(m.keeps(Term{3}));
    CHECK(m.keeps(Term{2, 3}));
}

TEST_CASE("smm critical values: degenerate K and dominance") {
    McConfig mc;
    mc.draws = 100000;
    // K = 1: the maximum of one |t| is that |t|, so the critical value is the
    // two-sided t quantile
    double smm1 = smm_critical(1, 30, 0.05, mc);
    double tcrit = 2.042272456301238;  // t_{0.975, 30}
    CHECK(std::fabs(smm1 - tcrit) < 0.02);
    // EER critical dominates the IER one for the same alpha
    double smm15 = smm_critical(15, 80, 0.05, mc);
    CHECK(smm15 > 1.9900634212544457);
}

TEST_CASE("stepwise_aic reproduces the hierarchical wafer model") {
    Dataset wafer = wafer_reconstruction().data;
    SelectedModel m = stepwise_aic(wafer);
    // kept terms: B, C, D, CD
    REQUIRE(m.terms.size() == 5);
    CHECK(m.keeps(Term{1}));
    CHECK(m.keeps(Term{2}));
    CHECK(m.keeps(Term{3}));
    CHECK(m.keeps(Term{2, 3}));
    auto cm = model_map(m);
    CHECK(std::fabs(cm.at(Term{1}) - 0.08627) < 1e-5);
    CHECK(std::fabs(cm.at(Term{2}) - (-0.03871)) < 1e-5);
    CHECK(std::fabs(cm.at(Term{3}) - 0.24502) < 1e-5);
    CHECK(std::fabs(cm.at(Term{2, 3}) - (-0.17252)) < 1e-5);

    // brute-force hierarchical oracle agrees
    std::vector<Term> oracle = brute_force_hierarchical_aic(wafer);
    std::vector<Term> kept;
    for (const auto& t : m.terms)
        if (t.order() > 0) kept.push_back(t);
    CHECK(kept == oracle);
}

TEST_CASE("stepwise_aic is locally optimal on noise and respects heredity") {
    // pure noise with tiny effects: no single add/drop lowers AIC
    Rng rng(77, 0);
    std::vector<DesignPoint> rows;
    for (const auto& p : enumerate_design(3))
        for (int r = 0; r < 4; ++r) rows.push_back(p);
    std::vector<Factor> fs;
    for (int j = 0; j < 3; ++j)
        fs.push_back(Factor::two_level_factor("x" + std::to_string(j + 1), "-", "+"));
    std::vector<double> y(rows.size());
    for (auto& v : y) v = rng.normal() * 0.1;
    Dataset noise = Dataset::make(fs, rows, y);
    SelectedModel m = stepwise_aic(noise);
    std::vector<Term> kept;
    for (const auto& t : m.terms)
        if (t.order() > 0) kept.push_back(t);
    CHECK(kept == brute_force_hierarchical_aic(noise));

    // y = x1 x2 + tiny noise: heredity forces {x1, x2, x1:x2}
    std::vector<double> y2;
    for (const auto& p : rows) {
        double x1 = p.codes[0] == 0 ? -1 : 1, x2 = p.codes[1] == 0 ? -1 : 1;
        y2.push_back(x1 * x2 + 0.05 * rng.normal());
    }
    Dataset inter = Dataset::make(fs, rows, y2);
    SelectedModel m2 = stepwise_aic(inter);
    CHECK(m2.keeps(Term{0}));
    CHECK(m2.keeps(Term{1}));
    CHECK(m2.keeps(Term{0, 1}));
    // the brute-force optimum over all hierarchical models also keeps the
    // interaction chain (greedy and global may differ in noise terms)
    std::vector<Term> brute = brute_force_hierarchical_aic(inter);
    auto brute_keeps = [&](const Term& t) {
        return std::find(brute.begin(), brute.end(), t) != brute.end();
    };
    CHECK(brute_keeps(Term{0}));
    CHECK(brute_keeps(Term{1}));
    CHECK(brute_keeps(Term{0, 1}));

    // hierarchical output invariant
    for (const auto& t : m2.terms)
        for (const auto& s : m2.terms)
            if (t.contains(s)) CHECK(m2.keeps(s));

    // unreplicated data drive the search to the saturated model: rejected
    std::vector<double> y3;
    Rng rng3(78, 0);
    for (const auto& p : enumerate_design(3)) {
        double x1 = p.codes[0] == 0 ? -1 : 1;
        y3.push_back(5.0 * x1 + 0.01 * rng3.normal());
    }
    CHECK_THROWS_AS(stepwise_aic(two_level_dataset(3, y3)), ValidationError);
}

TEST_CASE("lenth_pse hand example and properties") {
    bool degenerate = false;
    std::vector<double> est = {1, -1, 2, -2, 20};
    CHECK(lenth_pse(est, &degenerate) == doctest::Approx(2.25).epsilon(1e-12));
    CHECK(!degenerate);

    // constant estimates: PSE = 1.5 |c|
    std::vector<double> same = {3, -3, 3, 3};
    CHECK(lenth_pse(same) == doctest::Approx(4.5).epsilon(1e-12));

    // scale equivariance
    Rng rng(81, 0);
    std::vector<double> v(15);
    for (auto& x : v) x = rng.normal();
    double base = lenth_pse(v);
    std::vector<double> scaled = v;
    for (auto& x : scaled) x *= -2.5;
    CHECK(lenth_pse(scaled) == doctest::Approx(2.5 * base).epsilon(1e-12));

    // degenerate and short inputs
    std::vector<double> zeros = {0, 0, 0};
    CHECK(lenth_pse(zeros, &degenerate) == 0.0);
    CHECK(degenerate);
    std::vector<double> tiny = {1.0, 2.0};
    CHECK_THROWS_AS(lenth_pse(tiny), ValidationError);
}

TEST_CASE("select_lenth reproduces the reactor selections") {
    EffectTable t = reactor_effects();
    McConfig mc;
    SelectedModel ier = select_lenth(t, ErrorRateMode::ier, 0.05, mc);
    std::vector<Term> want_ier = {Term{}, Term{1}, Term{3}, Term{4}, Term{1, 3}, Term{3, 4}};
    CHECK(ier.terms == want_ier);

    SelectedModel eer = select_lenth(t, ErrorRateMode::eer, 0.10, mc);
    std::vector<Term> want_eer = {Term{}, Term{1}, Term{3}, Term{1, 3}, Term{3, 4}};
    CHECK(eer.terms == want_eer);

    // fitted coefficients carry the published values
    auto cm = model_map(eer);
    CHECK(cm.at(Term{1}) == doctest::Approx(9.75));
    CHECK(cm.at(Term{3}) == doctest::Approx(5.375));
    CHECK(cm.at(Term{1, 3}) == doctest::Approx(6.625));
    CHECK(cm.at(Term{3, 4}) == doctest::Approx(-5.5));

    // replicated tables are rejected
    EffectTable rep = estimate_effects(wafer_reconstruction().data);
    CHECK_THROWS_AS(select_lenth(rep, ErrorRateMode::ier, 0.05), ValidationError);
}

TEST_CASE("lenth EER mode controls the family-wise selection rate under the null") {
    // iid normal effects: P(any term kept) should be about alpha
    McConfig mc;
    const int trials = 10000;
    const int k_effects = 15;
    double crit = lenth_critical(k_effects, ErrorRateMode::eer, 0.10, mc);
    Rng rng(97, 0);
    int any = 0;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> est(k_effects);
        for (auto& e : est) e = rng.normal();
        double pse = lenth_pse(est);
        for (double e : est)
            if (std::fabs(e) / pse > crit) {
                ++any;
                break;
            }
    }
    double rate = static_cast<double>(any) / trials;
    double se = std::sqrt(0.10 * 0.90 / trials);
    CHECK(rate <= 0.10 + 3.0 * se);
    CHECK(rate >= 0.10 - 3.0 * se);
}

TEST_CASE("half_normal ordering and quantiles") {
    // K = 1
    std::vector<double> y1;
    for (const auto& p : enumerate_design(1)) y1.push_back(p.codes[0] == 0 ? 0.0 : 2.0);
    EffectTable t1 = estimate_effects(two_level_dataset(1, y1));
    auto pts1 = half_normal(t1);
    REQUIRE(pts1.size() == 1);
    CHECK(pts1[0].quantile == doctest::Approx(0.6744897501960817).epsilon(1e-9));

    // sorted by absolute estimate
    std::vector<double> y2 = {0, 0, 0, 0, 0, 0, 0, 0};
    auto pts = enumerate_design(3);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double x1 = pts[i].codes[0] == 0 ? -1 : 1;
        double x2 = pts[i].codes[1] == 0 ? -1 : 1;
        double x3 = pts[i].codes[2] == 0 ? -1 : 1;
        y2[i] = 3.0 * x1 + 1.0 * x2 + 2.0 * x3;
    }
    EffectTable t2 = estimate_effects(two_level_dataset(3, y2));
    auto hn = half_normal(t2);
    for (std::size_t i = 0; i + 1 < hn.size(); ++i) {
        CHECK(hn[i].abs_estimate <= hn[i + 1].abs_estimate + 1e-12);
        CHECK(hn[i].quantile < hn[i + 1].quantile);
    }
    CHECK(hn.back().term == Term{0});
    CHECK(hn.back().abs_estimate == doctest::Approx(3.0));

    // wafer: the two largest points are D and CD
    EffectTable w = estimate_effects(wafer_reconstruction().data);
    auto hw = half_normal(w);
    CHECK(hw[hw.size() - 1].term == Term{3});
    CHECK(hw[hw.size() - 2].term == Term{2, 3});
}

TEST_CASE("classical selection false-positive calibration under the global null") {
    // replicated 2^4 Gaussian noise: EER family-wise rate <= alpha + 3 SE and
    // IER per-term rate close to alpha
    const int trials = 400;
    const double alpha = 0.10;
    Rng rng(101, 0);
    std::vector<Factor> fs;
    for (int j = 0; j < 4; ++j)
        fs.push_back(Factor::two_level_factor("x" + std::to_string(j + 1), "-", "+"));
    std::vector<DesignPoint> rows;
    for (const auto& p : enumerate_design(4))
        for (int r = 0; r < 3; ++r) rows.push_back(p);
    int eer_any = 0;
    long ier_terms = 0;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> y(rows.size());
        for (auto& v : y) v = rng.normal();
        Dataset d = Dataset::make(fs, rows, y);
        EffectTable table = estimate_effects(d);
        if (select_eer(table, alpha).terms.size() > 1) ++eer_any;
        ier_terms += static_cast<long>(select_ier(table, 0.05).terms.size()) - 1;
    }
    double eer_rate = static_cast<double>(eer_any) / trials;
    CHECK(eer_rate <= alpha + 3.0 * std::sqrt(alpha * (1 - alpha) / trials));
    double ier_rate = static_cast<double>(ier_terms) / (trials * 15.0);
    // per-term tests are dependent through the shared variance estimate; allow
    // a wider band than the binomial SE
    CHECK(std::fabs(ier_rate - 0.05) < 0.02);
}

TEST_CASE("selected-model polynomials agree with a direct refit") {
    Dataset wafer = wafer_reconstruction().data;
    EffectTable table = estimate_effects(wafer);
    SelectedModel m = select_ier(table, 0.05);
    // refit OLS on the kept terms only: orthogonality keeps coefficients equal
    Matrix x = effect_matrix(wafer, m.terms);
    FitResult fit = ols_fit(x, wafer.y());
    for (std::size_t j = 0; j < m.terms.size(); ++j)
        CHECK(fit.coefficients[j] ==
              doctest::Approx(m.fitted.coefficients.at(m.terms[j])).epsilon(1e-10));
}
