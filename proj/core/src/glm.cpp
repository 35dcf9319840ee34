#include "doetree/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "doetree/errors.hpp"
#include "doetree/special.hpp"

namespace doetree {

namespace {

constexpr int kMaxIrlsIterations = 50;
constexpr double kIrlsTol = 1e-9;
constexpr double kSeparationBound = 30.0;
constexpr double kMuFloor = 1e-10;
// Binomial probabilities are clamped wide enough that a diverging logit can
// cross the separation bound before the deviance flattens out.
constexpr double kProbFloor = 1e-15;

double xlogy(double x, double y) { return x > 0.0 ? x * std::log(y) : 0.0; }

double deviance_of(FamilyKind kind, std::span<const double> y, std::span<const double> n,
                   const std::vector<double>& mu) {
    double dev = 0.0;
    switch (kind) {
        case FamilyKind::gaussian:
            for (std::size_t i = 0; i < y.size(); ++i) {
                double r = y[i] - mu[i];
                dev += r * r;
            }
            break;
        case FamilyKind::poisson:
            for (std::size_t i = 0; i < y.size(); ++i)
                dev += 2.0 * (xlogy(y[i], y[i] / mu[i]) - (y[i] - mu[i]));
            break;
        case FamilyKind::binomial:
            for (std::size_t i = 0; i < y.size(); ++i) {
                double miss = n[i] - y[i];
                dev += 2.0 * (xlogy(y[i], y[i] / mu[i]) + xlogy(miss, miss / (n[i] - mu[i])));
            }
            break;
    }
    return dev;
}

}  // namespace

std::string Family::name() const {
    switch (kind) {
        case FamilyKind::gaussian: return "gaussian";
        case FamilyKind::poisson: return "poisson";
        case FamilyKind::binomial: return "binomial";
    }
    return "?";
}

double Family::inverse_link(double eta) const {
    switch (kind) {
        case FamilyKind::gaussian: return eta;
        case FamilyKind::poisson: return std::exp(eta);
        case FamilyKind::binomial: return 1.0 / (1.0 + std::exp(-eta));
    }
    return eta;
}

bool FitResult::is_aliased(std::size_t col) const {
    return std::binary_search(aliased.begin(), aliased.end(), static_cast<int>(col));
}

FitResult ols_fit(const Matrix& x, std::span<const double> y) {
    if (x.rows == 0) throw ValidationError("ols_fit: zero rows");
    LeastSquares ls = solve_least_squares(x, y);

    FitResult fit;
    fit.coefficients = ls.coefficients;
    fit.aliased = ls.aliased;
    fit.n = static_cast<int>(x.rows);
    fit.p = ls.rank;
    fit.dof_residual = fit.n - fit.p;
    fit.rss_or_deviance = ls.rss;
    fit.dispersion = fit.dof_residual > 0 ? ls.rss / fit.dof_residual : 0.0;
    fit.std_errors.assign(x.cols, std::numeric_limits<double>::quiet_NaN());
    fit.statistics.assign(x.cols, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t j = 0; j < x.cols; ++j) {
        if (fit.is_aliased(j)) continue;
        double se = std::sqrt(fit.dispersion * ls.xtx_inv_diag[j]);
        fit.std_errors[j] = se;
        fit.statistics[j] = se > 0.0 ? fit.coefficients[j] / se
                                     : std::numeric_limits<double>::quiet_NaN();
    }
    fit.fitted.resize(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) fit.fitted[i] = y[i] - ls.residuals[i];
    return fit;
}

FitResult irls_fit(const Matrix& x, std::span<const double> y,
                   std::span<const double> weights_n, Family family) {
    const std::size_t nrows = x.rows;
    if (nrows == 0) throw ValidationError("irls_fit: zero rows");
    if (y.size() != nrows) throw ValidationError("irls_fit: response length mismatch");

    if (family.kind == FamilyKind::gaussian) {
        FitResult fit = ols_fit(x, y);
        fit.iterations = 1;
        return fit;
    }
    if (family.kind == FamilyKind::poisson) {
        for (double v : y)
            if (v < 0.0 || v != std::floor(v))
                throw ValidationError("irls_fit: Poisson responses must be nonnegative integers");
    }
    if (family.kind == FamilyKind::binomial) {
        if (weights_n.size() != nrows)
            throw ValidationError("irls_fit: binomial fits need one denominator per row");
        for (std::size_t i = 0; i < nrows; ++i)
            if (weights_n[i] <= 0.0 || y[i] < 0.0 || y[i] > weights_n[i])
                throw ValidationError("irls_fit: binomial rows need 0 <= y <= n, n > 0");
    }

    // Null-model start: the intercept-only MLE mean for the family.
    std::vector<double> mu(nrows);
    if (family.kind == FamilyKind::poisson) {
        double mean = 0.0;
        for (double v : y) mean += v;
        mean = std::max(mean / static_cast<double>(nrows), 0.1);
        std::fill(mu.begin(), mu.end(), mean);
    } else {
        double sy = 0.0, sn = 0.0;
        for (std::size_t i = 0; i < nrows; ++i) {
            sy += y[i];
            sn += weights_n[i];
        }
        double p0 = std::min(std::max(sy / sn, 0.01), 0.99);
        for (std::size_t i = 0; i < nrows; ++i) mu[i] = weights_n[i] * p0;
    }

    std::vector<double> eta(nrows), w(nrows), z(nrows);
    double deviance = deviance_of(family.kind, y, weights_n, mu);
    std::vector<double> trace = {deviance};

    auto eta_of_mu = [&](std::size_t i) {
        if (family.kind == FamilyKind::poisson) return std::log(std::max(mu[i], kMuFloor));
        double p = std::min(std::max(mu[i] / weights_n[i], kProbFloor), 1.0 - kProbFloor);
        return std::log(p / (1.0 - p));
    };
    auto working_response = [&] {
        for (std::size_t i = 0; i < nrows; ++i) {
            eta[i] = eta_of_mu(i);
            if (family.kind == FamilyKind::poisson) {
                double wi = std::max(mu[i], kMuFloor);
                w[i] = wi;
                z[i] = eta[i] + (y[i] - mu[i]) / wi;
            } else {
                double p = std::min(std::max(mu[i] / weights_n[i], kProbFloor), 1.0 - kProbFloor);
                double wi = std::max(weights_n[i] * p * (1.0 - p), 1e-280);
                w[i] = wi;
                z[i] = eta[i] + (y[i] - weights_n[i] * p) / wi;
            }
        }
    };

    // Aliasing is frozen on the first working solve; the dropped set must not
    // flip between reweighted iterations or the reported coefficients would
    // disagree with the converged fit.
    working_response();
    std::vector<int> aliased = solve_least_squares(x, z, w).aliased;
    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < x.cols; ++j)
        if (!std::binary_search(aliased.begin(), aliased.end(), static_cast<int>(j)))
            kept.push_back(j);
    Matrix xk(nrows, kept.size());
    for (std::size_t i = 0; i < nrows; ++i)
        for (std::size_t j = 0; j < kept.size(); ++j) xk(i, j) = x(i, kept[j]);

    std::vector<double> beta(kept.size(), 0.0);
    int iter = 0;
    bool converged = false;
    for (iter = 1; iter <= kMaxIrlsIterations; ++iter) {
        working_response();
        LeastSquares ls = solve_least_squares(xk, z, w);

        // Step-halving keeps the deviance non-increasing.
        const std::vector<double>& candidate = ls.coefficients;
        std::vector<double> mu_new(nrows);
        double dev_new = 0.0;
        double step = 1.0;
        for (int halving = 0; halving <= 30; ++halving) {
            for (std::size_t i = 0; i < nrows; ++i) {
                double e = 0.0;
                for (std::size_t j = 0; j < kept.size(); ++j)
                    e += xk(i, j) * (beta[j] + step * (candidate[j] - beta[j]));
                double m = family.inverse_link(e);
                if (family.kind == FamilyKind::binomial) m *= weights_n[i];
                if (family.kind == FamilyKind::poisson)
                    m = std::max(m, kMuFloor);
                else
                    m = std::min(std::max(m, weights_n[i] * kProbFloor),
                                 weights_n[i] * (1.0 - kProbFloor));
                mu_new[i] = m;
            }
            dev_new = deviance_of(family.kind, y, weights_n, mu_new);
            if (dev_new <= deviance * (1.0 + 1e-12) + 1e-12 || halving == 30) break;
            step *= 0.5;
        }
        for (std::size_t j = 0; j < kept.size(); ++j)
            beta[j] = beta[j] + step * (candidate[j] - beta[j]);
        mu = mu_new;

        for (double b : beta)
            if (std::fabs(b) > kSeparationBound)
                throw NumericError("irls_fit: |coefficient| exceeded " +
                                   std::to_string(kSeparationBound) +
                                   "; data are separated or the model is unstable");

        double rel = std::fabs(deviance - dev_new) / (std::fabs(dev_new) + 0.1);
        deviance = dev_new;
        trace.push_back(deviance);
        if (rel < kIrlsTol) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw NumericError("irls_fit: no convergence after " +
                           std::to_string(kMaxIrlsIterations) + " iterations");

    // Fisher information at convergence: X'WX from the final weights.
    working_response();
    LeastSquares info = solve_least_squares(xk, std::vector<double>(eta.begin(), eta.end()), w);

    FitResult fit;
    fit.coefficients.assign(x.cols, 0.0);
    fit.aliased = aliased;
    fit.n = static_cast<int>(nrows);
    fit.p = static_cast<int>(kept.size());
    fit.dof_residual = fit.n - fit.p;
    fit.rss_or_deviance = deviance;
    fit.dispersion = 1.0;
    fit.iterations = iter;
    fit.deviance_trace = trace;
    fit.std_errors.assign(x.cols, std::numeric_limits<double>::quiet_NaN());
    fit.statistics.assign(x.cols, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t j = 0; j < kept.size(); ++j) {
        fit.coefficients[kept[j]] = beta[j];
        double se = std::sqrt(info.xtx_inv_diag[j]);
        fit.std_errors[kept[j]] = se;
        fit.statistics[kept[j]] =
            se > 0.0 ? beta[j] / se : std::numeric_limits<double>::quiet_NaN();
    }
    fit.fitted = mu;
    return fit;
}

double aic(const FitResult& fit) {
    if (fit.rss_or_deviance <= 0.0) return -std::numeric_limits<double>::infinity();
    double nu = fit.p + 1;
    return fit.n * std::log(fit.rss_or_deviance / fit.n) + 2.0 * nu;
}

DevianceTable anova_poisson(const Dataset& data, int max_order) {
    if (data.response_kind() != ResponseKind::count)
        throw ValidationError("anova_poisson: count response required");
    const int k = static_cast<int>(data.n_factors());
    if (max_order < 1 || max_order > k)
        throw ConfigError("anova_poisson: max_order must be in [1, k]");

    // Terms up to max_order in (order, lexicographic) sequence.
    std::vector<Term> seq;
    for (std::uint32_t m = 1; m < (1u << k); ++m) {
        Term t = Term::from_mask(m);
        if (t.order() <= max_order) seq.push_back(t);
    }
    std::sort(seq.begin(), seq.end());

    // Sequential deviances of nested fits, starting from intercept only.
    std::vector<Term> terms = {Term{}};
    auto fit_terms = [&](const std::vector<Term>& ts) {
        DummyMatrix dm = dummy_matrix(data, ts);
        return irls_fit(dm.x, data.y(), {}, Family::poisson());
    };
    FitResult prev = fit_terms(terms);

    DevianceTable table;
    std::vector<int> dfs;
    for (const auto& t : seq) {
        terms.push_back(t);
        FitResult next = fit_terms(terms);
        DevianceRow row;
        row.term = t;
        row.df = next.p - prev.p;
        row.deviance = prev.rss_or_deviance - next.rss_or_deviance;
        row.mean_deviance = row.df > 0 ? row.deviance / row.df : 0.0;
        table.rows.push_back(row);
        dfs.push_back(row.df);
        prev = next;
    }
    table.residual_deviance = prev.rss_or_deviance;
    table.residual_df = prev.dof_residual;
    table.residual_mean_deviance =
        table.residual_df > 0 ? table.residual_deviance / table.residual_df : 0.0;

    if (table.residual_df > 0) {
        for (auto& row : table.rows) {
            if (row.df <= 0) continue;
            row.f_ratio = row.mean_deviance / table.residual_mean_deviance;
            row.p_value = special::f_sf(row.f_ratio, row.df, table.residual_df);
            row.has_p = true;
        }
    }
    return table;
}

}  // namespace doetree
