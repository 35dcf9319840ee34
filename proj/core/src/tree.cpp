#include "doetree/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>

#include "doetree/errors.hpp"
#include "doetree/special.hpp"

namespace doetree {

namespace {

constexpr double kSweepTol = 1e-9;
constexpr double kSimpleTGate = 2.0;
constexpr double kMuFloor = 1e-10;

double xlogy(double x, double y) { return x > 0.0 ? x * std::log(y) : 0.0; }

double row_deviance(Family family, double y, double n, double mu) {
    switch (family.kind) {
        case FamilyKind::gaussian: {
            double r = y - mu;
            return r * r;
        }
        case FamilyKind::poisson:
            mu = std::max(mu, kMuFloor);
            return 2.0 * (xlogy(y, y / mu) - (y - mu));
        case FamilyKind::binomial: {
            mu = std::min(std::max(mu, kMuFloor), n - kMuFloor);
            double miss = n - y;
            return 2.0 * (xlogy(y, y / mu) + xlogy(miss, miss / (n - mu)));
        }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Node context: gathered rows, candidate regressor columns, Gram matrices
// ---------------------------------------------------------------------------

struct ColSpec {
    int factor = -1;
    int level = -1;  // -1: numeric code column; >= 0: set-to-zero indicator
    std::string label;
};

// Candidate regressor columns for a node-model kind: numeric code columns for
// two-level and ordinal factors; for multiple/stepwise models nominal factors
// additionally contribute set-to-zero indicator blocks.
std::vector<ColSpec> candidate_columns(const Dataset& data, NodeModelKind kind) {
    std::vector<ColSpec> specs;
    if (kind == NodeModelKind::constant) return specs;
    const auto& factors = data.factors();
    for (int f = 0; f < static_cast<int>(factors.size()); ++f) {
        const Factor& fac = factors[static_cast<std::size_t>(f)];
        if (fac.numeric_codable()) {
            specs.push_back({f, -1, fac.name});
        } else if (kind == NodeModelKind::multiple || kind == NodeModelKind::stepwise) {
            // alphabetically first level is the reference
            std::vector<int> order(static_cast<std::size_t>(fac.level_count()));
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                return fac.levels[static_cast<std::size_t>(a)] <
                       fac.levels[static_cast<std::size_t>(b)];
            });
            for (std::size_t i = 1; i < order.size(); ++i)
                specs.push_back({f, order[i],
                                 fac.name + fac.levels[static_cast<std::size_t>(order[i])]});
        }
    }
    return specs;
}

struct NodeCtx {
    const Dataset* data = nullptr;
    Family family;
    NodeModelKind kind = NodeModelKind::constant;
    std::vector<int> rows;
    int m = 0;
    std::vector<double> y;
    std::vector<double> n;  // binomial denominators (empty otherwise)

    std::vector<ColSpec> specs;
    std::vector<std::vector<double>> colv;
    std::vector<bool> col_usable;           // non-constant within the node
    std::vector<std::vector<int>> factor_cols;

    // Gram of [1 | usable columns as listed] and cross products with y.
    int p = 0;
    std::vector<double> gram;  // (p+1)^2
    std::vector<double> xy;    // p+1
    double yy = 0.0;

    double col(std::size_t j, std::size_t i) const { return colv[j][i]; }
};

NodeCtx make_node_ctx(const Dataset& data, std::span<const int> rows, NodeModelKind kind,
                      Family family) {
    NodeCtx ctx;
    ctx.data = &data;
    ctx.family = family;
    ctx.kind = kind;
    ctx.rows.assign(rows.begin(), rows.end());
    ctx.m = static_cast<int>(rows.size());
    ctx.y.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        ctx.y[i] = data.y()[static_cast<std::size_t>(rows[i])];
    if (family.kind == FamilyKind::binomial) {
        ctx.n.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            ctx.n[i] = data.trials()[static_cast<std::size_t>(rows[i])];
    }

    ctx.specs = candidate_columns(data, kind);
    ctx.factor_cols.assign(data.n_factors(), {});
    ctx.colv.resize(ctx.specs.size());
    ctx.col_usable.assign(ctx.specs.size(), false);
    for (std::size_t j = 0; j < ctx.specs.size(); ++j) {
        const ColSpec& spec = ctx.specs[j];
        auto& v = ctx.colv[j];
        v.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            int row = rows[i];
            if (spec.level < 0)
                v[i] = data.code(static_cast<std::size_t>(row), static_cast<std::size_t>(spec.factor));
            else
                v[i] = data.level_of(static_cast<std::size_t>(row),
                                     static_cast<std::size_t>(spec.factor)) == spec.level
                           ? 1.0
                           : 0.0;
        }
        bool constant = true;
        for (std::size_t i = 1; i < v.size() && constant; ++i)
            if (v[i] != v[0]) constant = false;
        ctx.col_usable[j] = !constant;
        if (!constant) ctx.factor_cols[static_cast<std::size_t>(spec.factor)].push_back(
            static_cast<int>(j));
    }

    if (family.kind == FamilyKind::gaussian && !ctx.specs.empty()) {
        // Gram over the intercept and all usable columns; unusable columns are
        // excluded up front, they can never enter a model in this node.
        std::vector<int> keep;
        for (std::size_t j = 0; j < ctx.specs.size(); ++j)
            if (ctx.col_usable[j]) keep.push_back(static_cast<int>(j));
        // compact: retain the kept columns only, remapping factor_cols
        std::vector<ColSpec> specs2;
        std::vector<std::vector<double>> colv2;
        ctx.factor_cols.assign(data.n_factors(), {});
        for (int j : keep) {
            ctx.factor_cols[static_cast<std::size_t>(ctx.specs[static_cast<std::size_t>(j)].factor)]
                .push_back(static_cast<int>(specs2.size()));
            specs2.push_back(ctx.specs[static_cast<std::size_t>(j)]);
            colv2.push_back(std::move(ctx.colv[static_cast<std::size_t>(j)]));
        }
        ctx.specs = std::move(specs2);
        ctx.colv = std::move(colv2);
        ctx.col_usable.assign(ctx.specs.size(), true);

        const int p = static_cast<int>(ctx.specs.size());
        ctx.p = p;
        ctx.gram.assign(static_cast<std::size_t>((p + 1) * (p + 1)), 0.0);
        ctx.xy.assign(static_cast<std::size_t>(p + 1), 0.0);
        auto g = [&](int a, int b) -> double& {
            return ctx.gram[static_cast<std::size_t>(a * (p + 1) + b)];
        };
        g(0, 0) = static_cast<double>(ctx.m);
        for (int a = 0; a < p; ++a) {
            double s = 0.0;
            for (int i = 0; i < ctx.m; ++i) s += ctx.colv[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)];
            g(0, a + 1) = s;
            g(a + 1, 0) = s;
            for (int b = a; b < p; ++b) {
                double q = 0.0;
                const auto& va = ctx.colv[static_cast<std::size_t>(a)];
                const auto& vb = ctx.colv[static_cast<std::size_t>(b)];
                for (int i = 0; i < ctx.m; ++i)
                    q += va[static_cast<std::size_t>(i)] * vb[static_cast<std::size_t>(i)];
                g(a + 1, b + 1) = q;
                g(b + 1, a + 1) = q;
            }
        }
        ctx.yy = 0.0;
        for (int i = 0; i < ctx.m; ++i) {
            double yi = ctx.y[static_cast<std::size_t>(i)];
            ctx.yy += yi * yi;
            ctx.xy[0] += yi;
            for (int a = 0; a < p; ++a)
                ctx.xy[static_cast<std::size_t>(a + 1)] +=
                    ctx.colv[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] * yi;
        }
    }
    return ctx;
}

void ctx_set_response(NodeCtx& ctx, std::span<const double> y2,
                      std::span<const double> n2 = {}) {
    ctx.y.assign(y2.begin(), y2.end());
    if (!n2.empty()) ctx.n.assign(n2.begin(), n2.end());
    if (ctx.family.kind == FamilyKind::gaussian && ctx.p > 0) {
        ctx.yy = 0.0;
        std::fill(ctx.xy.begin(), ctx.xy.end(), 0.0);
        for (int i = 0; i < ctx.m; ++i) {
            double yi = ctx.y[static_cast<std::size_t>(i)];
            ctx.yy += yi * yi;
            ctx.xy[0] += yi;
            for (int a = 0; a < ctx.p; ++a)
                ctx.xy[static_cast<std::size_t>(a + 1)] +=
                    ctx.colv[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] * yi;
        }
    }
}

// ---------------------------------------------------------------------------
// Normal-equation sweep solver (Gaussian fast path)
// ---------------------------------------------------------------------------

struct SweepSolution {
    std::vector<double> beta;      // size s+1, intercept first; 0 when aliased
    std::vector<bool> aliased;     // size s+1
    std::vector<double> inv_diag;  // size s+1; NaN when aliased
    double rss = 0.0;
    int rank = 0;
};

// cols: indices (0-based) into the ctx column list; intercept always included.
SweepSolution sweep_solve(const NodeCtx& ctx, std::span<const int> cols) {
    const int s = static_cast<int>(cols.size());
    const int dim = s + 2;  // intercept + cols + response slot
    std::vector<double> a(static_cast<std::size_t>(dim * dim), 0.0);
    auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i * dim + j)]; };
    auto gram = [&](int i, int j) {
        return ctx.gram[static_cast<std::size_t>(i * (ctx.p + 1) + j)];
    };
    std::vector<int> map(static_cast<std::size_t>(s + 1));
    map[0] = 0;
    for (int j = 0; j < s; ++j) map[static_cast<std::size_t>(j + 1)] = cols[static_cast<std::size_t>(j)] + 1;
    for (int i = 0; i <= s; ++i) {
        for (int j = 0; j <= s; ++j) at(i, j) = gram(map[static_cast<std::size_t>(i)], map[static_cast<std::size_t>(j)]);
        at(i, s + 1) = ctx.xy[static_cast<std::size_t>(map[static_cast<std::size_t>(i)])];
        at(s + 1, i) = at(i, s + 1);
    }
    at(s + 1, s + 1) = ctx.yy;

    SweepSolution sol;
    sol.beta.assign(static_cast<std::size_t>(s + 1), 0.0);
    sol.aliased.assign(static_cast<std::size_t>(s + 1), false);
    sol.inv_diag.assign(static_cast<std::size_t>(s + 1),
                        std::numeric_limits<double>::quiet_NaN());
    std::vector<double> orig_diag(static_cast<std::size_t>(s + 1));
    for (int k = 0; k <= s; ++k) orig_diag[static_cast<std::size_t>(k)] = at(k, k);

    for (int k = 0; k <= s; ++k) {
        double d = at(k, k);
        if (!(d > kSweepTol * std::max(orig_diag[static_cast<std::size_t>(k)], 1e-300))) {
            sol.aliased[static_cast<std::size_t>(k)] = true;
            continue;
        }
        ++sol.rank;
        for (int i = 0; i < dim; ++i) {
            if (i == k) continue;
            double f = at(i, k) / d;
            for (int j = 0; j < dim; ++j) {
                if (j == k) continue;
                at(i, j) -= f * at(k, j);
            }
        }
        for (int j = 0; j < dim; ++j) {
            if (j == k) continue;
            at(k, j) /= d;
            at(j, k) = at(k, j);
        }
        at(k, k) = -1.0 / d;
    }

    for (int k = 0; k <= s; ++k) {
        if (sol.aliased[static_cast<std::size_t>(k)]) continue;
        sol.beta[static_cast<std::size_t>(k)] = at(k, s + 1);
        sol.inv_diag[static_cast<std::size_t>(k)] = -at(k, k);
    }
    sol.rss = std::max(at(s + 1, s + 1), 0.0);
    return sol;
}

// ---------------------------------------------------------------------------
// Node-model fitting
// ---------------------------------------------------------------------------

struct InternalFit {
    LeafModel model;
    std::vector<double> residuals;  // response scale, aligned with ctx rows
};

double node_mean(const NodeCtx& ctx) {
    double sy = std::accumulate(ctx.y.begin(), ctx.y.end(), 0.0);
    if (ctx.family.kind == FamilyKind::binomial) {
        double sn = std::accumulate(ctx.n.begin(), ctx.n.end(), 0.0);
        return sy / sn;
    }
    return sy / ctx.m;
}

InternalFit fit_constant(const NodeCtx& ctx) {
    InternalFit out;
    double mean = node_mean(ctx);
    out.model.mean = mean;
    out.model.n_rows = ctx.m;
    double theta = mean;
    if (ctx.family.kind == FamilyKind::poisson) theta = std::log(std::max(mean, kMuFloor));
    if (ctx.family.kind == FamilyKind::binomial) {
        double p = std::min(std::max(mean, kMuFloor), 1.0 - kMuFloor);
        theta = std::log(p / (1.0 - p));
    }
    out.model.coefficients = {theta};
    out.model.std_errors = {std::numeric_limits<double>::quiet_NaN()};
    out.model.aliased = {false};
    out.residuals.resize(static_cast<std::size_t>(ctx.m));
    double dev = 0.0;
    for (int i = 0; i < ctx.m; ++i) {
        double ni = ctx.family.kind == FamilyKind::binomial ? ctx.n[static_cast<std::size_t>(i)] : 1.0;
        double mu = ctx.family.kind == FamilyKind::binomial ? ni * mean : mean;
        out.residuals[static_cast<std::size_t>(i)] = ctx.y[static_cast<std::size_t>(i)] - mu;
        dev += row_deviance(ctx.family, ctx.y[static_cast<std::size_t>(i)], ni, mu);
    }
    out.model.deviance = dev;
    return out;
}

// Gaussian fits via the sweep solver.
InternalFit fit_gaussian_subset(const NodeCtx& ctx, std::span<const int> cols) {
    SweepSolution sol = sweep_solve(ctx, cols);
    InternalFit out;
    out.model.n_rows = ctx.m;
    out.model.mean = ctx.xy[0] / ctx.m;
    out.model.coefficients.resize(cols.size() + 1);
    out.model.std_errors.assign(cols.size() + 1, std::numeric_limits<double>::quiet_NaN());
    out.model.aliased.resize(cols.size() + 1);
    double sigma2 = ctx.m > sol.rank ? sol.rss / (ctx.m - sol.rank) : 0.0;
    for (std::size_t j = 0; j < cols.size() + 1; ++j) {
        out.model.coefficients[j] = sol.beta[j];
        out.model.aliased[j] = sol.aliased[j];
        if (!sol.aliased[j]) out.model.std_errors[j] = std::sqrt(sigma2 * sol.inv_diag[j]);
    }
    for (int c : cols) out.model.columns.push_back(
        {ctx.specs[static_cast<std::size_t>(c)].factor, ctx.specs[static_cast<std::size_t>(c)].level,
         ctx.specs[static_cast<std::size_t>(c)].label});
    out.model.deviance = sol.rss;
    out.residuals.resize(static_cast<std::size_t>(ctx.m));
    for (int i = 0; i < ctx.m; ++i) {
        double fit = sol.beta[0];
        for (std::size_t j = 0; j < cols.size(); ++j)
            fit += sol.beta[j + 1] *
                   ctx.colv[static_cast<std::size_t>(cols[j])][static_cast<std::size_t>(i)];
        out.residuals[static_cast<std::size_t>(i)] = ctx.y[static_cast<std::size_t>(i)] - fit;
    }
    return out;
}

// GLM fits via IRLS on an explicit design matrix.
InternalFit fit_glm_subset(const NodeCtx& ctx, std::span<const int> cols) {
    Matrix x(static_cast<std::size_t>(ctx.m), cols.size() + 1);
    for (int i = 0; i < ctx.m; ++i) {
        x(static_cast<std::size_t>(i), 0) = 1.0;
        for (std::size_t j = 0; j < cols.size(); ++j)
            x(static_cast<std::size_t>(i), j + 1) =
                ctx.colv[static_cast<std::size_t>(cols[j])][static_cast<std::size_t>(i)];
    }
    FitResult fit = irls_fit(x, ctx.y, ctx.n, ctx.family);
    InternalFit out;
    out.model.n_rows = ctx.m;
    out.model.mean = node_mean(ctx);
    out.model.coefficients = fit.coefficients;
    out.model.std_errors = fit.std_errors;
    out.model.aliased.resize(cols.size() + 1);
    for (std::size_t j = 0; j < cols.size() + 1; ++j) out.model.aliased[j] = fit.is_aliased(j);
    for (int c : cols) out.model.columns.push_back(
        {ctx.specs[static_cast<std::size_t>(c)].factor, ctx.specs[static_cast<std::size_t>(c)].level,
         ctx.specs[static_cast<std::size_t>(c)].label});
    out.model.deviance = fit.rss_or_deviance;
    out.residuals.resize(static_cast<std::size_t>(ctx.m));
    for (int i = 0; i < ctx.m; ++i)
        out.residuals[static_cast<std::size_t>(i)] =
            ctx.y[static_cast<std::size_t>(i)] - fit.fitted[static_cast<std::size_t>(i)];
    return out;
}

InternalFit fit_subset(const NodeCtx& ctx, std::span<const int> cols) {
    if (ctx.family.kind == FamilyKind::gaussian) return fit_gaussian_subset(ctx, cols);
    return fit_glm_subset(ctx, cols);
}

// Best single numeric predictor; falls back to a constant when none reaches
// |t| > 2.
InternalFit fit_best_simple(const NodeCtx& ctx) {
    int best_col = -1;
    double best_dev = std::numeric_limits<double>::infinity();
    InternalFit best_fit;
    for (std::size_t j = 0; j < ctx.specs.size(); ++j) {
        if (!ctx.col_usable[j] || ctx.specs[j].level >= 0) continue;
        int c = static_cast<int>(j);
        InternalFit f;
        try {
            f = fit_subset(ctx, std::span<const int>(&c, 1));
        } catch (const NumericError&) {
            continue;  // divergent candidate; skip
        }
        if (best_col < 0 || f.model.deviance < best_dev - 1e-12 * (1.0 + best_dev)) {
            best_dev = f.model.deviance;
            best_col = c;
            best_fit = std::move(f);
        }
    }
    if (best_col < 0) return fit_constant(ctx);
    // keep the slope only when its |t| (or |z|) exceeds 2
    bool keep = false;
    if (!best_fit.model.aliased[1]) {
        double se = best_fit.model.std_errors[1];
        if (ctx.family.kind == FamilyKind::gaussian && ctx.m <= 2) {
            keep = false;  // no residual df for the gate
        } else if (se > 0.0 && std::isfinite(se)) {
            keep = std::fabs(best_fit.model.coefficients[1] / se) > kSimpleTGate;
        }
    }
    if (!keep) return fit_constant(ctx);
    return best_fit;
}

double node_model_aic(const NodeCtx& ctx, double deviance, int rank) {
    if (ctx.family.kind == FamilyKind::gaussian) {
        if (deviance <= 0.0) return -std::numeric_limits<double>::infinity();
        return ctx.m * std::log(deviance / ctx.m) + 2.0 * (rank + 1);
    }
    return deviance + 2.0 * rank;
}

// Forward/backward AIC over whole variables (a nominal factor's indicator
// block enters or leaves together). Main effects only.
InternalFit fit_stepwise(const NodeCtx& ctx) {
    std::vector<int> vars;
    for (std::size_t f = 0; f < ctx.factor_cols.size(); ++f)
        if (!ctx.factor_cols[f].empty()) vars.push_back(static_cast<int>(f));

    auto cols_of = [&](const std::vector<bool>& in) {
        std::vector<int> cols;
        for (std::size_t vi = 0; vi < vars.size(); ++vi)
            if (in[vi])
                for (int c : ctx.factor_cols[static_cast<std::size_t>(vars[vi])])
                    cols.push_back(c);
        std::sort(cols.begin(), cols.end());
        return cols;
    };
    auto eval = [&](const std::vector<bool>& in, InternalFit* out) {
        std::vector<int> cols = cols_of(in);
        InternalFit f;
        if (cols.empty())
            f = fit_constant(ctx);
        else {
            try {
                f = fit_subset(ctx, cols);
            } catch (const NumericError&) {
                return std::numeric_limits<double>::infinity();
            }
        }
        int rank = 0;
        for (std::size_t j = 0; j < f.model.aliased.size(); ++j)
            if (!f.model.aliased[j]) ++rank;
        double a = node_model_aic(ctx, f.model.deviance, rank);
        if (out) *out = std::move(f);
        return a;
    };

    std::vector<bool> in(vars.size(), false);
    InternalFit current_fit;
    double current = eval(in, &current_fit);
    for (;;) {
        double best = current;
        std::size_t best_idx = vars.size();
        for (std::size_t vi = 0; vi < vars.size(); ++vi) {
            in[vi] = !in[vi];
            double a = eval(in, nullptr);
            in[vi] = !in[vi];
            if (a < best - 1e-10) {
                best = a;
                best_idx = vi;
            }
        }
        if (best_idx == vars.size()) break;
        in[best_idx] = !in[best_idx];
        current = eval(in, &current_fit);
    }
    return current_fit;
}

InternalFit fit_in_ctx(const NodeCtx& ctx) {
    switch (ctx.kind) {
        case NodeModelKind::constant:
            return fit_constant(ctx);
        case NodeModelKind::best_simple:
            return fit_best_simple(ctx);
        case NodeModelKind::multiple: {
            std::vector<int> cols;
            for (std::size_t j = 0; j < ctx.specs.size(); ++j)
                if (ctx.col_usable[j]) cols.push_back(static_cast<int>(j));
            if (cols.empty()) return fit_constant(ctx);
            try {
                return fit_subset(ctx, cols);
            } catch (const NumericError&) {
                return fit_constant(ctx);  // divergent leaf model
            }
        }
        case NodeModelKind::stepwise:
            return fit_stepwise(ctx);
    }
    return fit_constant(ctx);
}

// ---------------------------------------------------------------------------
// Chi-squared tables
// ---------------------------------------------------------------------------

// Group assignment of rows by one variable: nominal levels, or up to four
// quartile groups for ordinal variables with many distinct values; tied
// quartile boundaries merge.
std::vector<int> group_rows(const Dataset& data, std::span<const int> rows, int variable,
                            int* n_groups) {
    const Factor& fac = data.factors()[static_cast<std::size_t>(variable)];
    std::vector<int> group(rows.size(), -1);
    if (!fac.numeric_codable() || fac.level_count() <= 4) {
        // group by level, compressing empty levels
        std::vector<int> remap(static_cast<std::size_t>(fac.level_count()), -1);
        int g = 0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            int lv = data.level_of(static_cast<std::size_t>(rows[i]),
                                   static_cast<std::size_t>(variable));
            if (remap[static_cast<std::size_t>(lv)] < 0) remap[static_cast<std::size_t>(lv)] = g++;
            group[i] = remap[static_cast<std::size_t>(lv)];
        }
        *n_groups = g;
        return group;
    }
    // ordinal with many levels: quartile boundaries of the node sample
    std::vector<double> codes(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        codes[i] = data.code(static_cast<std::size_t>(rows[i]), static_cast<std::size_t>(variable));
    std::vector<double> sorted = codes;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> bounds;
    for (double q : {0.25, 0.5, 0.75}) {
        std::size_t idx = static_cast<std::size_t>(
            std::ceil(q * static_cast<double>(sorted.size())));
        idx = std::min(std::max<std::size_t>(idx, 1), sorted.size());
        double b = sorted[idx - 1];
        if (bounds.empty() || b > bounds.back()) bounds.push_back(b);
    }
    if (!bounds.empty() && bounds.back() >= sorted.back()) bounds.pop_back();
    int g = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        int gi = 0;
        for (double b : bounds)
            if (codes[i] > b) ++gi;
        group[i] = gi;
    }
    // compress empty groups
    int total = static_cast<int>(bounds.size()) + 1;
    std::vector<int> counts(static_cast<std::size_t>(total), 0);
    for (int gi : group) ++counts[static_cast<std::size_t>(gi)];
    std::vector<int> remap2(static_cast<std::size_t>(total), -1);
    for (int i = 0; i < total; ++i)
        if (counts[static_cast<std::size_t>(i)] > 0) remap2[static_cast<std::size_t>(i)] = g++;
    for (auto& gi : group) gi = remap2[static_cast<std::size_t>(gi)];
    *n_groups = g;
    return group;
}

ChiSquareTest chi_square_from_table(const std::vector<double>& pos,
                                    const std::vector<double>& neg) {
    ChiSquareTest out;
    double tot_pos = 0.0, tot_neg = 0.0, total = 0.0;
    int nonempty = 0;
    for (std::size_t gj = 0; gj < pos.size(); ++gj) {
        double colsum = pos[gj] + neg[gj];
        tot_pos += pos[gj];
        tot_neg += neg[gj];
        total += colsum;
        if (colsum > 0.0) ++nonempty;
    }
    out.df = std::max(nonempty - 1, 1);
    if (nonempty < 2 || tot_pos == 0.0 || tot_neg == 0.0) {
        out.p_value = 1.0;  // degenerate margin
        return out;
    }
    double chi = 0.0;
    for (std::size_t gj = 0; gj < pos.size(); ++gj) {
        double colsum = pos[gj] + neg[gj];
        if (colsum == 0.0) continue;
        double e_pos = colsum * tot_pos / total;
        double e_neg = colsum * tot_neg / total;
        chi += (pos[gj] - e_pos) * (pos[gj] - e_pos) / e_pos;
        chi += (neg[gj] - e_neg) * (neg[gj] - e_neg) / e_neg;
    }
    out.statistic = chi;
    out.df = nonempty - 1;
    out.p_value = special::chi_squared_sf(chi, out.df);
    return out;
}

// Two-way halving of a variable for the interaction test.
std::vector<int> halve_rows(const Dataset& data, std::span<const int> rows, int variable) {
    const Factor& fac = data.factors()[static_cast<std::size_t>(variable)];
    std::vector<int> half(rows.size(), 0);
    if (fac.numeric_codable()) {
        std::vector<double> codes(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            codes[i] = data.code(static_cast<std::size_t>(rows[i]),
                                 static_cast<std::size_t>(variable));
        std::vector<double> sorted = codes;
        std::sort(sorted.begin(), sorted.end());
        double med = (sorted.size() % 2 == 1)
                         ? sorted[sorted.size() / 2]
                         : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
        for (std::size_t i = 0; i < rows.size(); ++i) half[i] = codes[i] <= med ? 0 : 1;
        return half;
    }
    if (fac.level_count() == 2) {
        for (std::size_t i = 0; i < rows.size(); ++i)
            half[i] = data.level_of(static_cast<std::size_t>(rows[i]),
                                    static_cast<std::size_t>(variable));
        return half;
    }
    // multi-level nominal: most frequent level versus the rest
    std::vector<int> counts(static_cast<std::size_t>(fac.level_count()), 0);
    for (int r : rows)
        ++counts[static_cast<std::size_t>(data.level_of(static_cast<std::size_t>(r),
                                                        static_cast<std::size_t>(variable)))];
    int top = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    for (std::size_t i = 0; i < rows.size(); ++i)
        half[i] = data.level_of(static_cast<std::size_t>(rows[i]),
                                static_cast<std::size_t>(variable)) == top
                      ? 0
                      : 1;
    return half;
}

bool variable_constant(const Dataset& data, std::span<const int> rows, int variable) {
    if (rows.empty()) return true;
    int first = data.level_of(static_cast<std::size_t>(rows[0]), static_cast<std::size_t>(variable));
    for (int r : rows)
        if (data.level_of(static_cast<std::size_t>(r), static_cast<std::size_t>(variable)) != first)
            return false;
    return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public small types
// ---------------------------------------------------------------------------

std::string to_string(NodeModelKind kind) {
    switch (kind) {
        case NodeModelKind::constant: return "constant";
        case NodeModelKind::best_simple: return "simple";
        case NodeModelKind::multiple: return "multiple";
        case NodeModelKind::stepwise: return "stepwise";
    }
    return "?";
}

double LeafModel::linear_predictor(const std::vector<Factor>& factors,
                                   const DesignPoint& point) const {
    double eta = coefficients.empty() ? 0.0 : coefficients[0];
    for (std::size_t j = 0; j < columns.size(); ++j) {
        const RegressorColumn& col = columns[j];
        double v;
        if (col.level < 0)
            v = factors[static_cast<std::size_t>(col.factor)].code(
                point.codes[static_cast<std::size_t>(col.factor)]);
        else
            v = point.codes[static_cast<std::size_t>(col.factor)] == col.level ? 1.0 : 0.0;
        eta += coefficients[j + 1] * v;
    }
    return eta;
}

std::vector<int> LeafModel::regressor_factors() const {
    std::vector<int> out;
    for (const auto& c : columns) out.push_back(c.factor);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool Split::goes_left(const std::vector<Factor>& factors, const DesignPoint& point,
                      bool* unseen) const {
    int lv = point.codes[static_cast<std::size_t>(variable)];
    if (kind == Kind::threshold) {
        double code = factors[static_cast<std::size_t>(variable)].code(lv);
        return code <= threshold;
    }
    if (!std::binary_search(seen_levels.begin(), seen_levels.end(), lv)) {
        if (unseen) *unseen = true;
        return majority_left;
    }
    return std::binary_search(left_levels.begin(), left_levels.end(), lv);
}

std::string Split::describe(const std::vector<Factor>& factors) const {
    const Factor& fac = factors[static_cast<std::size_t>(variable)];
    if (kind == Kind::threshold) {
        if (fac.level_count() == 2) return fac.name + " = " + fac.levels[0];
        std::string out = fac.name + " <= ";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", threshold);
        return out + buf;
    }
    std::string out = fac.name + " in {";
    for (std::size_t i = 0; i < left_levels.size(); ++i) {
        if (i) out += ",";
        out += fac.levels[static_cast<std::size_t>(left_levels[i])];
    }
    return out + "}";
}

int TreeNode::leaf_count() const {
    if (is_leaf()) return 1;
    return left->leaf_count() + right->leaf_count();
}

std::unique_ptr<TreeNode> TreeNode::clone() const {
    auto node = std::make_unique<TreeNode>();
    node->split = split;
    node->model = model;
    node->id = id;
    if (left) node->left = left->clone();
    if (right) node->right = right->clone();
    return node;
}

Tree Tree::clone() const {
    Tree t;
    t.factors = factors;
    t.family = family;
    t.kind = kind;
    t.root = root ? root->clone() : nullptr;
    return t;
}

// ---------------------------------------------------------------------------
// Public split-selection pieces
// ---------------------------------------------------------------------------

LeafModel fit_node(const Dataset& data, std::span<const int> rows, NodeModelKind kind,
                   Family family) {
    if (rows.empty()) throw ValidationError("fit_node: empty node");
    NodeCtx ctx = make_node_ctx(data, rows, kind, family);
    return fit_in_ctx(ctx).model;
}

std::vector<double> node_residuals(const Dataset& data, std::span<const int> rows,
                                   const LeafModel& model, Family family) {
    std::vector<double> res(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        int r = rows[i];
        double eta = model.linear_predictor(data.factors(),
                                            data.points()[static_cast<std::size_t>(r)]);
        double mu = family.inverse_link(eta);
        if (family.kind == FamilyKind::binomial) mu *= data.trials()[static_cast<std::size_t>(r)];
        res[i] = data.y()[static_cast<std::size_t>(r)] - mu;
    }
    return res;
}

ChiSquareTest curvature_test(const Dataset& data, std::span<const int> rows,
                             std::span<const double> residuals, int variable) {
    if (rows.size() != residuals.size())
        throw ValidationError("curvature_test: residuals must align with rows");
    int n_groups = 0;
    std::vector<int> group = group_rows(data, rows, variable, &n_groups);
    if (n_groups < 2) return {0.0, 1, 1.0};
    std::vector<double> pos(static_cast<std::size_t>(n_groups), 0.0);
    std::vector<double> neg(static_cast<std::size_t>(n_groups), 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (residuals[i] >= 0.0)
            pos[static_cast<std::size_t>(group[i])] += 1.0;
        else
            neg[static_cast<std::size_t>(group[i])] += 1.0;
    }
    return chi_square_from_table(pos, neg);
}

ChiSquareTest interaction_test(const Dataset& data, std::span<const int> rows,
                               std::span<const double> residuals, int var_a, int var_b) {
    if (rows.size() != residuals.size())
        throw ValidationError("interaction_test: residuals must align with rows");
    if (variable_constant(data, rows, var_a) || variable_constant(data, rows, var_b))
        throw ValidationError("interaction_test: both variables must vary within the node");
    std::vector<int> ha = halve_rows(data, rows, var_a);
    std::vector<int> hb = halve_rows(data, rows, var_b);
    std::vector<double> pos(4, 0.0), neg(4, 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        int cell = 2 * ha[i] + hb[i];
        if (residuals[i] >= 0.0)
            pos[static_cast<std::size_t>(cell)] += 1.0;
        else
            neg[static_cast<std::size_t>(cell)] += 1.0;
    }
    return chi_square_from_table(pos, neg);
}

double calibrate_pvalue(const Dataset& data, std::span<const int> rows, NodeModelKind kind,
                        Family family, const LeafModel& model, int variable,
                        const ChiSquareTest& raw, int bootstrap_samples, Rng rng) {
    if (bootstrap_samples < 20)
        throw ConfigError("calibrate_pvalue: at least 20 bootstrap resamples required");
    std::vector<int> regs = model.regressor_factors();
    if (!std::binary_search(regs.begin(), regs.end(), variable)) return raw.p_value;
    if (raw.statistic <= 0.0) return raw.p_value;

    NodeCtx ctx = make_node_ctx(data, rows, kind, family);
    // Refit the model's fitted regressor structure (not a re-selected one) on
    // each permuted response, so the resamples reproduce the deflation that
    // the projection onto these columns causes.
    std::vector<int> cols;
    for (const auto& column : model.columns)
        for (std::size_t j = 0; j < ctx.specs.size(); ++j)
            if (ctx.specs[j].factor == column.factor && ctx.specs[j].level == column.level)
                cols.push_back(static_cast<int>(j));
    if (cols.empty()) return raw.p_value;

    const std::size_t m = rows.size();
    std::vector<std::size_t> perm(m);
    std::vector<double> y_perm(m), n_perm;
    if (family.kind == FamilyKind::binomial) n_perm.resize(m);
    std::vector<double> orig_y = ctx.y;
    std::vector<double> orig_n = ctx.n;

    std::vector<double> stats;
    stats.reserve(static_cast<std::size_t>(bootstrap_samples));
    for (int b = 0; b < bootstrap_samples; ++b) {
        for (std::size_t i = 0; i < m; ++i) perm[i] = i;
        rng.shuffle(perm.data(), m);
        for (std::size_t i = 0; i < m; ++i) {
            y_perm[i] = orig_y[perm[i]];
            if (!n_perm.empty()) n_perm[i] = orig_n[perm[i]];
        }
        ctx_set_response(ctx, y_perm, n_perm);
        InternalFit refit;
        try {
            refit = fit_subset(ctx, cols);
        } catch (const NumericError&) {
            continue;  // divergent resample
        }
        ChiSquareTest t = curvature_test(data, rows, refit.residuals, variable);
        stats.push_back(t.statistic);
    }
    if (stats.size() < static_cast<std::size_t>(bootstrap_samples) / 2) return raw.p_value;
    std::sort(stats.begin(), stats.end());
    double med = (stats.size() % 2 == 1)
                     ? stats[stats.size() / 2]
                     : 0.5 * (stats[stats.size() / 2 - 1] + stats[stats.size() / 2]);
    if (med <= 1e-12) return raw.p_value;  // no usable inflation estimate
    double factor = special::chi_squared_median(raw.df) / med;
    return special::chi_squared_sf(raw.statistic * factor, raw.df);
}

int choose_split_variable(const Dataset& data, std::span<const int> rows,
                          const LeafModel& model, const TreeConfig& config, Rng rng) {
    const int nf = static_cast<int>(data.n_factors());
    std::vector<int> cands;
    for (int v = 0; v < nf; ++v)
        if (!variable_constant(data, rows, v)) cands.push_back(v);
    if (cands.empty()) return -1;
    if (cands.size() == 1) return cands[0];

    std::vector<double> residuals = node_residuals(data, rows, model, config.family);
    std::vector<int> regs = model.regressor_factors();

    std::vector<double> curv_p(cands.size());
    for (std::size_t i = 0; i < cands.size(); ++i) {
        ChiSquareTest t = curvature_test(data, rows, residuals, cands[i]);
        double p = t.p_value;
        if (std::binary_search(regs.begin(), regs.end(), cands[i]))
            p = calibrate_pvalue(data, rows, config.kind, config.family, model, cands[i], t,
                                 config.bootstrap_samples,
                                 rng.substream(0xCA1Bull + static_cast<std::uint64_t>(cands[i])));
        curv_p[i] = p;
    }
    double best_curv = *std::min_element(curv_p.begin(), curv_p.end());

    // Pairwise interaction screen, Bonferroni-adjusted over the pair count.
    const std::size_t n_pairs = cands.size() * (cands.size() - 1) / 2;
    double best_inter = std::numeric_limits<double>::infinity();
    std::vector<std::pair<int, int>> best_pairs;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        for (std::size_t j = i + 1; j < cands.size(); ++j) {
            ChiSquareTest t = interaction_test(data, rows, residuals, cands[i], cands[j]);
            double p = std::min(1.0, t.p_value * static_cast<double>(n_pairs));
            if (p < best_inter - 1e-15) {
                best_inter = p;
                best_pairs.assign(1, {cands[i], cands[j]});
            } else if (p <= best_inter + 1e-15) {
                best_pairs.emplace_back(cands[i], cands[j]);
            }
        }
    }

    Rng tie_rng = rng.substream(0x7135ull);
    if (!best_pairs.empty() && best_inter < best_curv) {
        auto pick = best_pairs[best_pairs.size() == 1
                                   ? 0
                                   : static_cast<std::size_t>(
                                         tie_rng.uniform_below(best_pairs.size()))];
        double pa = curv_p[static_cast<std::size_t>(
            std::find(cands.begin(), cands.end(), pick.first) - cands.begin())];
        double pb = curv_p[static_cast<std::size_t>(
            std::find(cands.begin(), cands.end(), pick.second) - cands.begin())];
        if (pa < pb) return pick.first;
        if (pb < pa) return pick.second;
        return tie_rng.uniform_below(2) == 0 ? pick.first : pick.second;
    }

    // Discrete statistics tie exactly on small two-level designs; tied minima
    // are resolved by a seeded draw to keep null variables exchangeable.
    std::vector<int> tied;
    for (std::size_t i = 0; i < cands.size(); ++i)
        if (curv_p[i] <= best_curv) tied.push_back(cands[i]);
    if (tied.size() == 1) return tied[0];
    return tied[static_cast<std::size_t>(tie_rng.uniform_below(tied.size()))];
}

int resolved_min_node_size(const Dataset& data, const TreeConfig& config) {
    if (config.min_node_size > 0) return config.min_node_size;
    int reg_cols = 0;
    switch (config.kind) {
        case NodeModelKind::constant: reg_cols = 0; break;
        case NodeModelKind::best_simple: reg_cols = 1; break;
        case NodeModelKind::multiple:
        case NodeModelKind::stepwise:
            reg_cols = static_cast<int>(candidate_columns(data, config.kind).size());
            break;
    }
    return std::max(5, 2 * (reg_cols + 1));
}

std::optional<Split> best_split_value(const Dataset& data, std::span<const int> rows,
                                      int variable, const TreeConfig& config) {
    const Factor& fac = data.factors()[static_cast<std::size_t>(variable)];
    const int min_size = resolved_min_node_size(data, config);

    std::vector<int> seen;
    for (int r : rows) seen.push_back(data.level_of(static_cast<std::size_t>(r),
                                                    static_cast<std::size_t>(variable)));
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    if (seen.size() < 2) return std::nullopt;

    struct Candidate {
        Split split;
        std::vector<int> left, right;
    };
    std::vector<Candidate> candidates;

    if (fac.numeric_codable()) {
        // thresholds between consecutive distinct observed codes
        std::vector<double> codes;
        for (int lv : seen) codes.push_back(fac.code(lv));
        std::sort(codes.begin(), codes.end());
        for (std::size_t i = 0; i + 1 < codes.size(); ++i) {
            Candidate c;
            c.split.variable = variable;
            c.split.kind = Split::Kind::threshold;
            c.split.threshold = 0.5 * (codes[i] + codes[i + 1]);
            c.split.seen_levels = seen;
            candidates.push_back(std::move(c));
        }
    } else {
        if (seen.size() > 12)
            throw ConfigError("best_split_value: nominal factors are limited to 12 observed levels");
        // proper subsets of the observed levels that contain the first one
        // (complements are equivalent): 2^(L-1) - 1 candidates
        const std::size_t l = seen.size();
        for (std::uint32_t rest = 0; rest + 1 < (1u << (l - 1)); ++rest) {
            std::uint32_t subset_mask = (rest << 1) | 1u;
            Candidate c;
            c.split.variable = variable;
            c.split.kind = Split::Kind::subset;
            c.split.seen_levels = seen;
            for (std::size_t i = 0; i < l; ++i)
                if (subset_mask & (1u << i)) c.split.left_levels.push_back(seen[i]);
            candidates.push_back(std::move(c));
        }
    }

    double best_obj = std::numeric_limits<double>::infinity();
    std::optional<Split> best;
    for (auto& cand : candidates) {
        cand.left.clear();
        cand.right.clear();
        for (int r : rows) {
            bool unseen = false;
            if (cand.split.goes_left(data.factors(), data.points()[static_cast<std::size_t>(r)],
                                     &unseen))
                cand.left.push_back(r);
            else
                cand.right.push_back(r);
        }
        if (static_cast<int>(cand.left.size()) < min_size ||
            static_cast<int>(cand.right.size()) < min_size)
            continue;
        double obj;
        try {
            obj = fit_node(data, cand.left, config.kind, config.family).deviance +
                  fit_node(data, cand.right, config.kind, config.family).deviance;
        } catch (const NumericError&) {
            continue;
        }
        if (!best || obj < best_obj - 1e-12 * (1.0 + std::fabs(best_obj))) {
            best_obj = obj;
            // record the majority default branch for unseen levels
            cand.split.majority_left = cand.left.size() >= cand.right.size();
            best = cand.split;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Growing
// ---------------------------------------------------------------------------

namespace {

struct GrowState {
    const Dataset* data;
    TreeConfig cfg;  // min_node_size resolved
    Rng base;
};

std::unique_ptr<TreeNode> grow_rec(GrowState& st, std::vector<int> rows, int depth, int id) {
    auto node = std::make_unique<TreeNode>();
    node->id = id;
    NodeCtx ctx = make_node_ctx(*st.data, rows, st.cfg.kind, st.cfg.family);
    InternalFit fit = fit_in_ctx(ctx);
    node->model = fit.model;

    if (depth >= st.cfg.max_depth) return node;
    if (static_cast<int>(rows.size()) < 2 * st.cfg.min_node_size) return node;
    double scale = 0.0;
    for (double v : ctx.y) scale += v * v;
    if (node->model.deviance <= 1e-12 * (1.0 + scale)) return node;  // pure node

    Rng node_rng = st.base.substream(static_cast<std::uint64_t>(id));
    int variable = choose_split_variable(*st.data, rows, node->model, st.cfg, node_rng);
    if (variable < 0) return node;
    std::optional<Split> split = best_split_value(*st.data, rows, variable, st.cfg);
    if (!split) return node;

    std::vector<int> left_rows, right_rows;
    for (int r : rows) {
        if (split->goes_left(st.data->factors(), st.data->points()[static_cast<std::size_t>(r)]))
            left_rows.push_back(r);
        else
            right_rows.push_back(r);
    }
    node->split = std::move(split);
    node->left = grow_rec(st, std::move(left_rows), depth + 1, 2 * id);
    node->right = grow_rec(st, std::move(right_rows), depth + 1, 2 * id + 1);
    return node;
}

}  // namespace

Tree grow_tree(const Dataset& data, std::span<const int> rows, const TreeConfig& config) {
    if (rows.empty()) throw ValidationError("grow_tree: empty dataset");
    if (config.max_depth < 0) throw ConfigError("grow_tree: max_depth must be >= 0");
    if ((config.family.kind == FamilyKind::binomial) !=
        (data.response_kind() == ResponseKind::proportion))
        throw ConfigError("grow_tree: binomial family requires proportion data and vice versa");
    GrowState st{&data, config, Rng(config.seed, 0x6720ull)};
    st.cfg.min_node_size = resolved_min_node_size(data, config);
    Tree tree;
    tree.factors = data.factors();
    tree.family = config.family;
    tree.kind = config.kind;
    tree.root = grow_rec(st, std::vector<int>(rows.begin(), rows.end()), 0, 1);
    return tree;
}

Tree grow_tree(const Dataset& data, const TreeConfig& config) {
    std::vector<int> rows(data.n_rows());
    std::iota(rows.begin(), rows.end(), 0);
    return grow_tree(data, rows, config);
}

// ---------------------------------------------------------------------------
// Pruning and cross-validation
// ---------------------------------------------------------------------------

namespace {

struct LinkStats {
    double subtree_dev = 0.0;
    int leaves = 0;
};

LinkStats weakest_link(TreeNode* node, double* gmin, std::vector<TreeNode*>* argmin) {
    if (node->is_leaf()) return {node->model.deviance, 1};
    LinkStats l = weakest_link(node->left.get(), gmin, argmin);
    LinkStats r = weakest_link(node->right.get(), gmin, argmin);
    LinkStats s{l.subtree_dev + r.subtree_dev, l.leaves + r.leaves};
    double g = (node->model.deviance - s.subtree_dev) / (s.leaves - 1);
    if (argmin->empty()) {
        *gmin = g;
        argmin->assign(1, node);
    } else {
        double tol = 1e-12 * (1.0 + std::fabs(*gmin));
        if (g < *gmin - tol) {
            *gmin = g;
            argmin->assign(1, node);
        } else if (g <= *gmin + tol) {
            argmin->push_back(node);
        }
    }
    return s;
}

}  // namespace

PruneSequence prune_sequence(const Tree& tree) {
    PruneSequence seq;
    Tree work = tree.clone();
    seq.alphas.push_back(0.0);
    seq.subtrees.push_back(tree.clone());
    double last_alpha = 0.0;
    while (!work.root->is_leaf()) {
        double gmin = std::numeric_limits<double>::infinity();
        std::vector<TreeNode*> argmin;
        weakest_link(work.root.get(), &gmin, &argmin);
        for (TreeNode* n : argmin) {
            n->split.reset();
            n->left.reset();
            n->right.reset();
        }
        last_alpha = std::max(last_alpha, std::max(gmin, 0.0));
        seq.alphas.push_back(last_alpha);
        seq.subtrees.push_back(work.clone());
    }
    return seq;
}

namespace {

const Tree& subtree_for_alpha(const PruneSequence& seq, double alpha) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < seq.alphas.size(); ++i)
        if (seq.alphas[i] <= alpha) idx = i;
    return seq.subtrees[idx];
}

double heldout_deviance(const Tree& tree, const Dataset& data, std::span<const int> rows) {
    double dev = 0.0;
    for (int r : rows) {
        double mu = predict(tree, data.points()[static_cast<std::size_t>(r)]);
        double yi = data.y()[static_cast<std::size_t>(r)];
        double ni = 1.0;
        if (tree.family.kind == FamilyKind::binomial) {
            ni = data.trials()[static_cast<std::size_t>(r)];
            mu *= ni;  // predicted probability -> expected count
        }
        dev += row_deviance(tree.family, yi, ni, mu);
    }
    return dev;
}

}  // namespace

Tree cv_select(const Dataset& data, const TreeConfig& config, int folds, std::uint64_t seed) {
    if (folds < 2) throw ConfigError("cv_select: at least two folds required");
    const int n = static_cast<int>(data.n_rows());
    if (n < folds) throw ValidationError("cv_select: fewer rows than folds");

    TreeConfig main_cfg = config;
    main_cfg.seed = mix64(seed, 0);
    Tree main = grow_tree(data, main_cfg);
    PruneSequence seq = prune_sequence(main);
    const std::size_t m_sub = seq.subtrees.size();
    if (m_sub == 1) return main;

    // Candidate complexities: geometric midpoints of consecutive alphas, plus
    // infinity so the root-only tree is always reachable.
    std::vector<double> grid(m_sub);
    for (std::size_t i = 0; i + 1 < m_sub; ++i)
        grid[i] = std::sqrt(seq.alphas[i] * seq.alphas[i + 1]);
    grid[m_sub - 1] = std::numeric_limits<double>::infinity();

    // Seeded fold assignment.
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(seed, 0xF01Dull);
    shuffle_rng.shuffle(order.data(), order.size());
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) fold_of[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i % folds;

    std::vector<double> cv(m_sub, 0.0);
    for (int v = 0; v < folds; ++v) {
        std::vector<int> train, held;
        for (int i = 0; i < n; ++i)
            (fold_of[static_cast<std::size_t>(i)] == v ? held : train).push_back(i);
        if (train.empty() || held.empty()) continue;
        TreeConfig fold_cfg = config;
        fold_cfg.seed = mix64(seed, static_cast<std::uint64_t>(v) + 1);
        Tree fold_tree = grow_tree(data, train, fold_cfg);
        PruneSequence fold_seq = prune_sequence(fold_tree);
        for (std::size_t gi = 0; gi < m_sub; ++gi)
            cv[gi] += heldout_deviance(subtree_for_alpha(fold_seq, grid[gi]), data, held);
    }

    // Smallest CV deviance; exact ties resolve to the smaller subtree.
    std::size_t best = 0;
    for (std::size_t gi = 1; gi < m_sub; ++gi)
        if (cv[gi] <= cv[best]) best = gi;
    return seq.subtrees[best].clone();
}

// ---------------------------------------------------------------------------
// Prediction and polynomial expansion
// ---------------------------------------------------------------------------

Prediction predict_detail(const Tree& tree, const DesignPoint& point) {
    if (point.codes.size() != tree.factors.size())
        throw ValidationError("predict: point arity does not match the tree's factors");
    Prediction out;
    const TreeNode* node = tree.root.get();
    while (!node->is_leaf()) {
        bool unseen = false;
        bool left = node->split->goes_left(tree.factors, point, &unseen);
        out.unseen_level = out.unseen_level || unseen;
        node = left ? node->left.get() : node->right.get();
    }
    double eta = node->model.linear_predictor(tree.factors, point);
    out.value = tree.family.inverse_link(eta);
    return out;
}

double predict(const Tree& tree, const DesignPoint& point) {
    return predict_detail(tree, point).value;
}

namespace {

using MaskPoly = std::unordered_map<std::uint32_t, double>;

MaskPoly mask_multiply(const MaskPoly& a, const MaskPoly& b) {
    MaskPoly out;
    for (const auto& [ma, ca] : a)
        for (const auto& [mb, cb] : b) out[ma ^ mb] += ca * cb;
    return out;
}

// Indicator polynomial of "factor takes level set S" for a two-level factor.
MaskPoly level_indicator(int factor, bool low_in, bool high_in) {
    MaskPoly p;
    if (low_in && high_in) {
        p[0] = 1.0;
        return p;
    }
    double sign = high_in ? 1.0 : -1.0;
    p[0] = 0.5;
    p[1u << factor] = 0.5 * sign;
    return p;
}

void expand_node(const Tree& tree, const TreeNode* node, const MaskPoly& path, MaskPoly* total) {
    if (node->is_leaf()) {
        MaskPoly leaf;
        leaf[0] = node->model.coefficients.empty() ? 0.0 : node->model.coefficients[0];
        for (std::size_t j = 0; j < node->model.columns.size(); ++j) {
            const RegressorColumn& col = node->model.columns[j];
            double coef = node->model.coefficients[j + 1];
            if (col.level < 0) {
                leaf[1u << col.factor] += coef;
            } else {
                // set-to-zero indicator of one level of a two-level factor
                MaskPoly ind = level_indicator(col.factor, col.level == 0, col.level == 1);
                for (const auto& [m, c] : ind) leaf[m] += coef * c;
            }
        }
        MaskPoly contrib = mask_multiply(path, leaf);
        for (const auto& [m, c] : contrib) (*total)[m] += c;
        return;
    }
    const Split& sp = *node->split;
    const Factor& fac = tree.factors[static_cast<std::size_t>(sp.variable)];
    bool low_left, high_left;
    if (sp.kind == Split::Kind::threshold) {
        low_left = fac.code(0) <= sp.threshold;
        high_left = fac.code(1) <= sp.threshold;
    } else {
        low_left = std::binary_search(sp.left_levels.begin(), sp.left_levels.end(), 0);
        high_left = std::binary_search(sp.left_levels.begin(), sp.left_levels.end(), 1);
    }
    MaskPoly left_ind = level_indicator(sp.variable, low_left, high_left);
    MaskPoly right_ind = level_indicator(sp.variable, !low_left, !high_left);
    expand_node(tree, node->left.get(), mask_multiply(path, left_ind), total);
    expand_node(tree, node->right.get(), mask_multiply(path, right_ind), total);
}

}  // namespace

Polynomial to_polynomial(const Tree& tree) {
    if (tree.family.kind != FamilyKind::gaussian)
        throw ValidationError("to_polynomial: Gaussian trees only");
    for (const auto& f : tree.factors) {
        if (f.level_count() != 2)
            throw ValidationError("to_polynomial: factor '" + f.name + "' is not two-level");
        if (f.kind == FactorKind::ordinal && (f.code(0) != -1.0 || f.code(1) != 1.0))
            throw ValidationError("to_polynomial: ordinal factor '" + f.name +
                                  "' is not coded -1/+1");
    }
    MaskPoly total;
    MaskPoly one;
    one[0] = 1.0;
    expand_node(tree, tree.root.get(), one, &total);
    Polynomial poly;
    for (const auto& [mask, coef] : total)
        if (coef != 0.0) poly.coefficients[Term::from_mask(mask)] = coef;
    if (poly.coefficients.empty()) poly.coefficients[Term{}] = 0.0;
    return poly;
}

// ---------------------------------------------------------------------------
// Direct construction helpers
// ---------------------------------------------------------------------------

std::unique_ptr<TreeNode> make_leaf(double intercept,
                                    std::vector<std::pair<int, double>> slopes) {
    auto node = std::make_unique<TreeNode>();
    node->model.coefficients.push_back(intercept);
    node->model.std_errors.push_back(std::numeric_limits<double>::quiet_NaN());
    node->model.aliased.push_back(false);
    node->model.mean = intercept;
    for (auto [factor, coef] : slopes) {
        node->model.columns.push_back({factor, -1, "x" + std::to_string(factor + 1)});
        node->model.coefficients.push_back(coef);
        node->model.std_errors.push_back(std::numeric_limits<double>::quiet_NaN());
        node->model.aliased.push_back(false);
    }
    return node;
}

std::unique_ptr<TreeNode> make_split(int variable, std::unique_ptr<TreeNode> low,
                                     std::unique_ptr<TreeNode> high) {
    auto node = std::make_unique<TreeNode>();
    Split sp;
    sp.variable = variable;
    sp.kind = Split::Kind::threshold;
    sp.threshold = 0.0;
    sp.seen_levels = {0, 1};
    node->split = std::move(sp);
    node->left = std::move(low);
    node->right = std::move(high);
    return node;
}

Tree make_tree(std::vector<Factor> factors, std::unique_ptr<TreeNode> root, Family family,
               NodeModelKind kind) {
    Tree t;
    t.factors = std::move(factors);
    t.family = family;
    t.kind = kind;
    t.root = std::move(root);
    int next_id = 1;
    // assign preorder ids
    std::vector<TreeNode*> stack = {t.root.get()};
    while (!stack.empty()) {
        TreeNode* n = stack.back();
        stack.pop_back();
        n->id = next_id++;
        if (!n->is_leaf()) {
            stack.push_back(n->right.get());
            stack.push_back(n->left.get());
        }
    }
    return t;
}

}  // namespace doetree
