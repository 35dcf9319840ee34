// Distribution functions used across the analysis modules.
//
// Self-contained implementations: regularized incomplete beta/gamma via
// Lentz continued fractions, inverse normal via Wichura's rational
// approximation. Target accuracy 1e-10 or better over the ranges used here.
#pragma once

namespace doetree::special {

// Regularized incomplete beta I_x(a, b).
double inc_beta(double a, double b, double x);
// Regularized lower/upper incomplete gamma P(a, x), Q(a, x).
double inc_gamma_p(double a, double x);
double inc_gamma_q(double a, double x);

double normal_cdf(double x);
double normal_quantile(double p);

double student_t_cdf(double x, double dof);
double student_t_quantile(double p, double dof);

// Survival function P(X >= x) for chi-squared with df degrees of freedom.
double chi_squared_sf(double x, double df);
double chi_squared_quantile(double p, double df);
double chi_squared_median(double df);

// Survival function of the F distribution with (d1, d2) degrees of freedom.
double f_sf(double x, double d1, double d2);

}  // namespace doetree::special
