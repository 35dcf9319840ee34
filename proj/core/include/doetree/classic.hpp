// Classical model selection for two-level factorials: saturated effect
// estimation, IER/EER t-interval selection, hierarchical stepwise AIC,
// Lenth's method for unreplicated designs, and half-normal plot data.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "doetree/design.hpp"

namespace doetree {

// Saturated effect table of a complete two-level factorial. Estimates are on
// the regression-coefficient (half-effect) scale; in an orthogonal replicated
// design every effect shares one standard error.
struct EffectTable {
    std::vector<Term> terms;        // [0] is the intercept; 2^k entries
    std::vector<double> estimates;
    std::optional<double> common_se;  // absent when unreplicated
    int dof = 0;                      // error degrees of freedom (0 if unreplicated)
    int n = 0;
    int k = 0;

    double t_stat(std::size_t i) const;
};

struct SelectedModel {
    std::vector<Term> terms;  // kept terms including the intercept, sorted
    Polynomial fitted;        // saturated estimates restricted to the kept terms
    std::string method_tag;

    bool keeps(const Term& t) const;
};

// Monte Carlo settings for simulated critical values. Results are cached per
// (seed, draws, K, dof) and are identical for any worker count.
struct McConfig {
    std::uint64_t seed = 20130205;
    int draws = 200000;
    int threads = 0;  // 0 = auto (DOETREE_THREADS-capped)
};

enum class ErrorRateMode { ier, eer };

// Saturated OLS fit in +/-1 coding; requires a complete two-level factorial.
EffectTable estimate_effects(const Dataset& data);

// Keep every effect whose |t| exceeds the two-sided t critical value at
// individual level alpha. Requires a replicated table.
SelectedModel select_ier(const EffectTable& table, double alpha);

// Keep every effect whose |t| exceeds the studentized-maximum-modulus
// critical value for K = 2^k - 1 simultaneous effects (family-wise alpha).
SelectedModel select_eer(const EffectTable& table, double alpha, const McConfig& mc = {});

// Greedy forward/backward AIC over hierarchical models, starting from the
// main-effects model. Rejects selections that end in a saturated fit, which
// is what happens on unreplicated data where AIC always chooses the full
// model.
SelectedModel stepwise_aic(const Dataset& data);

// Lenth's pseudo standard error: s0 = 1.5 median|est|, PSE = 1.5 median of
// the |est| below 2.5 s0. Degenerate (PSE 0) when everything is zero.
double lenth_pse(std::span<const double> estimates, bool* degenerate = nullptr);

// Lenth's method for unreplicated tables: keep effects with |est|/PSE above
// the simulated critical value for K = 2^k - 1 effects.
SelectedModel select_lenth(const EffectTable& table, ErrorRateMode mode, double alpha,
                           const McConfig& mc = {});

struct HalfNormalPoint {
    double quantile = 0.0;
    double abs_estimate = 0.0;
    Term term;
};

// Absolute effect estimates sorted ascending, paired with half-normal
// quantiles Phi^{-1}(0.5 + 0.5 (i - 0.5) / K).
std::vector<HalfNormalPoint> half_normal(const EffectTable& table);

// Simulated critical values (also used directly by the tests).
double smm_critical(int k_effects, int dof, double alpha, const McConfig& mc = {});
double lenth_critical(int k_effects, ErrorRateMode mode, double alpha, const McConfig& mc = {});

}  // namespace doetree
