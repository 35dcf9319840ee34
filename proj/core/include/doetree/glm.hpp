// Least-squares and IRLS fitting for Gaussian, Poisson, and binomial models.
#pragma once

#include <span>
#include <string>
#include <vector>

#include "doetree/design.hpp"
#include "doetree/linalg.hpp"

namespace doetree {

enum class FamilyKind { gaussian, poisson, binomial };

// Canonical links only: identity, log, logit (determined by the family).
struct Family {
    FamilyKind kind = FamilyKind::gaussian;

    static Family gaussian() { return {FamilyKind::gaussian}; }
    static Family poisson() { return {FamilyKind::poisson}; }
    static Family binomial() { return {FamilyKind::binomial}; }

    std::string name() const;
    // Inverse link on a linear predictor (per-trial mean for binomial).
    double inverse_link(double eta) const;
};

struct FitResult {
    std::vector<double> coefficients;  // aliased columns get 0
    std::vector<double> std_errors;    // NaN for aliased columns
    std::vector<double> statistics;    // t (Gaussian) or z (GLM); NaN for aliased
    double rss_or_deviance = 0.0;
    double dispersion = 1.0;           // Gaussian: s^2 = RSS/(n-p); otherwise 1
    int dof_residual = 0;
    int n = 0;
    int p = 0;                         // estimated parameters (rank)
    std::vector<int> aliased;          // dropped column indices
    std::vector<double> fitted;        // response-scale fitted values
    int iterations = 0;
    bool separation = false;
    std::vector<double> deviance_trace;  // per-IRLS-iteration deviance

    bool is_aliased(std::size_t col) const;
};

// Ordinary least squares with aliasing detection (pivot tolerance 1e-10
// relative to the largest column norm).
FitResult ols_fit(const Matrix& x, std::span<const double> y);

// Maximum likelihood by iteratively reweighted least squares. Binomial data
// are grouped: y successes out of weights_n trials per row. Starts from the
// null-model fit; converges when the relative deviance change drops below
// 1e-9; throws NumericError after 50 iterations or when any |coefficient|
// crosses the separation bound of 30.
FitResult irls_fit(const Matrix& x, std::span<const double> y,
                   std::span<const double> weights_n, Family family);

// AIC = n log(RSS/n) + 2 nu with nu = p + 1; the +1 counts the variance
// parameter. Only differences matter for selection, but the convention is
// fixed so reported values are comparable across calls. A perfect fit
// (RSS = 0) maps to -infinity and therefore always wins.
double aic(const FitResult& fit);

struct DevianceRow {
    Term term;
    int df = 0;
    double deviance = 0.0;
    double mean_deviance = 0.0;
    double f_ratio = 0.0;
    double p_value = 1.0;
    bool has_p = false;
};

struct DevianceTable {
    std::vector<DevianceRow> rows;
    double residual_deviance = 0.0;
    int residual_df = 0;
    double residual_mean_deviance = 0.0;
};

// Sequential analysis of deviance for a Poisson loglinear model containing
// all terms up to max_order. F ratios test each term's mean deviance against
// the residual mean deviance of the largest model; with zero residual
// degrees of freedom the p-values are omitted.
DevianceTable anova_poisson(const Dataset& data, int max_order);

}  // namespace doetree
