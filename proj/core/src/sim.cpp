#include "doetree/sim.hpp"

#include <algorithm>
#include <cmath>

#include "doetree/errors.hpp"
#include "doetree/threads.hpp"
#include "doetree/tree.hpp"

namespace doetree {

namespace {

constexpr double kSigma = 0.5;  // error SD; variance 0.25
constexpr double kIerAlpha = 0.05;
constexpr double kEerAlpha = 0.10;
constexpr int kCvFolds = 10;

NodeModelKind guide_kind(SimMethod m) {
    switch (m) {
        case SimMethod::guide_constant: return NodeModelKind::constant;
        case SimMethod::guide_simple: return NodeModelKind::best_simple;
        default: return NodeModelKind::stepwise;
    }
}

std::vector<Factor> sim_factors(int k) {
    std::vector<Factor> fs;
    for (int j = 0; j < k; ++j)
        fs.push_back(Factor::two_level_factor("x" + std::to_string(j + 1), "-", "+"));
    return fs;
}

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    std::size_t half = v.size() / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

}  // namespace

std::string to_string(SimModelKind kind) {
    switch (kind) {
        case SimModelKind::null_model: return "null";
        case SimModelKind::unif: return "unif";
        case SimModelKind::exp_model: return "exp";
        case SimModelKind::hier: return "hier";
    }
    return "?";
}

std::string to_string(SimMethod method) {
    switch (method) {
        case SimMethod::ier: return "ier";
        case SimMethod::eer: return "eer";
        case SimMethod::aic: return "aic";
        case SimMethod::guide_constant: return "guide-constant";
        case SimMethod::guide_simple: return "guide-simple";
        case SimMethod::guide_stepwise: return "guide-stepwise";
        case SimMethod::lenth_ier: return "lenth-ier";
        case SimMethod::lenth_eer: return "lenth-eer";
        case SimMethod::oracle_saturated: return "oracle-saturated";
        case SimMethod::oracle_intercept: return "oracle-intercept";
    }
    return "?";
}

SimModelKind parse_sim_model(const std::string& name) {
    for (SimModelKind k : {SimModelKind::null_model, SimModelKind::unif, SimModelKind::exp_model,
                           SimModelKind::hier})
        if (to_string(k) == name) return k;
    throw ConfigError("unknown simulation model '" + name + "'");
}

SimMethod parse_sim_method(const std::string& name) {
    for (SimMethod m :
         {SimMethod::ier, SimMethod::eer, SimMethod::aic, SimMethod::guide_constant,
          SimMethod::guide_simple, SimMethod::guide_stepwise, SimMethod::lenth_ier,
          SimMethod::lenth_eer, SimMethod::oracle_saturated, SimMethod::oracle_intercept})
        if (to_string(m) == name) return m;
    throw ConfigError("unknown method '" + name + "'");
}

std::vector<SimMethod> replicated_methods() {
    return {SimMethod::ier,            SimMethod::eer,          SimMethod::aic,
            SimMethod::guide_constant, SimMethod::guide_simple, SimMethod::guide_stepwise};
}

std::vector<SimMethod> unreplicated_methods() {
    return {SimMethod::lenth_ier, SimMethod::lenth_eer, SimMethod::guide_constant,
            SimMethod::guide_simple, SimMethod::guide_stepwise};
}

double TrueModel::sample(std::size_t index, Rng& rng) const {
    double eps = sigma * rng.normal();
    if (kind == SimModelKind::exp_model) return std::exp(eta[index] + eps);
    return mu[index] + eps;
}

TrueModel draw_true_model(SimModelKind kind, int k, Rng& rng) {
    TrueModel model;
    model.kind = kind;
    model.sigma = kSigma;
    const auto points = enumerate_design(k);
    const auto terms = all_terms(k);
    model.mu.assign(points.size(), 0.0);

    auto term_value = [&](const Term& t, std::size_t i) {
        double prod = 1.0;
        for (int f : t.members)
            prod *= points[i].codes[static_cast<std::size_t>(f)] == 0 ? -1.0 : 1.0;
        return prod;
    };

    switch (kind) {
        case SimModelKind::null_model:
            break;
        case SimModelKind::unif: {
            // one coefficient per non-intercept term, U(-1/4, 1/4)
            model.coefficients.assign(terms.size() - 1, 0.0);
            for (auto& b : model.coefficients) b = 0.5 * (rng.uniform() - 0.5);
            for (std::size_t i = 0; i < points.size(); ++i)
                for (std::size_t t = 1; t < terms.size(); ++t)
                    model.mu[i] += model.coefficients[t - 1] * term_value(terms[t], i);
            break;
        }
        case SimModelKind::exp_model: {
            // main effects only, U(-1, 1); the scored mean is the mean of the
            // lognormal response, exp(eta + sigma^2/2)
            model.coefficients.assign(static_cast<std::size_t>(k), 0.0);
            for (auto& b : model.coefficients) b = 2.0 * rng.uniform() - 1.0;
            model.eta.assign(points.size(), 0.0);
            for (std::size_t i = 0; i < points.size(); ++i) {
                for (int j = 0; j < k; ++j)
                    model.eta[i] += model.coefficients[static_cast<std::size_t>(j)] *
                                    (points[i].codes[static_cast<std::size_t>(j)] == 0 ? -1.0 : 1.0);
                model.mu[i] = std::exp(model.eta[i] + 0.5 * kSigma * kSigma);
            }
            break;
        }
        case SimModelKind::hier: {
            // main effects U(-1, 1); interaction coefficients are products
            std::vector<double> beta(static_cast<std::size_t>(k));
            for (auto& b : beta) b = 2.0 * rng.uniform() - 1.0;
            model.coefficients.assign(terms.size() - 1, 0.0);
            for (std::size_t t = 1; t < terms.size(); ++t) {
                double coef = 1.0;
                for (int f : terms[t].members) coef *= beta[static_cast<std::size_t>(f)];
                model.coefficients[t - 1] = coef;
            }
            for (std::size_t i = 0; i < points.size(); ++i)
                for (std::size_t t = 1; t < terms.size(); ++t)
                    model.mu[i] += model.coefficients[t - 1] * term_value(terms[t], i);
            break;
        }
    }
    return model;
}

namespace {

// Estimated cell means of one method on one simulated dataset.
std::vector<double> method_mu_hat(SimMethod method, const Dataset& data,
                                  const std::vector<DesignPoint>& points, const McConfig& mc,
                                  Rng& rng_method) {
    std::vector<double> mu_hat(points.size(), 0.0);
    switch (method) {
        case SimMethod::ier:
        case SimMethod::eer:
        case SimMethod::lenth_ier:
        case SimMethod::lenth_eer: {
            EffectTable table = estimate_effects(data);
            SelectedModel sel;
            if (method == SimMethod::ier)
                sel = select_ier(table, kIerAlpha);
            else if (method == SimMethod::eer)
                sel = select_eer(table, kEerAlpha, mc);
            else if (method == SimMethod::lenth_ier)
                sel = select_lenth(table, ErrorRateMode::ier, kIerAlpha, mc);
            else
                sel = select_lenth(table, ErrorRateMode::eer, kEerAlpha, mc);
            for (std::size_t i = 0; i < points.size(); ++i)
                mu_hat[i] = sel.fitted.eval(data, points[i]);
            break;
        }
        case SimMethod::aic: {
            SelectedModel sel = stepwise_aic(data);
            for (std::size_t i = 0; i < points.size(); ++i)
                mu_hat[i] = sel.fitted.eval(data, points[i]);
            break;
        }
        case SimMethod::guide_constant:
        case SimMethod::guide_simple:
        case SimMethod::guide_stepwise: {
            TreeConfig cfg;
            cfg.kind = guide_kind(method);
            cfg.family = Family::gaussian();
            cfg.seed = rng_method.next_u64();
            Tree tree = cv_select(data, cfg, kCvFolds, rng_method.next_u64());
            for (std::size_t i = 0; i < points.size(); ++i) mu_hat[i] = predict(tree, points[i]);
            break;
        }
        case SimMethod::oracle_saturated: {
            EffectTable table = estimate_effects(data);
            Polynomial full;
            for (std::size_t t = 0; t < table.terms.size(); ++t)
                full.coefficients[table.terms[t]] = table.estimates[t];
            for (std::size_t i = 0; i < points.size(); ++i)
                mu_hat[i] = full.eval(data, points[i]);
            break;
        }
        case SimMethod::oracle_intercept: {
            double mean = 0.0;
            for (double v : data.y()) mean += v;
            mean /= static_cast<double>(data.n_rows());
            std::fill(mu_hat.begin(), mu_hat.end(), mean);
            break;
        }
    }
    return mu_hat;
}

}  // namespace

PmseRow run_pmse(SimMethod method, SimModelKind model, const SimDesign& design, long trials,
                 std::uint64_t seed, const McConfig& mc, int threads) {
    if (design.k < 1 || design.k > 10) throw ConfigError("run_pmse: k must be in [1, 10]");
    if (design.replicates < 1) throw ConfigError("run_pmse: replicates must be >= 1");
    if (trials < 1) throw ConfigError("run_pmse: at least one trial required");
    const bool replicated = design.replicates >= 2;
    if ((method == SimMethod::ier || method == SimMethod::eer || method == SimMethod::aic) &&
        !replicated)
        throw ConfigError("run_pmse: " + to_string(method) + " needs a replicated design");
    if ((method == SimMethod::lenth_ier || method == SimMethod::lenth_eer) && replicated)
        throw ConfigError("run_pmse: " + to_string(method) + " is for unreplicated designs");

    const auto points = enumerate_design(design.k);
    const auto factors = sim_factors(design.k);
    const std::size_t cells = points.size();

    // Row layout: replicates nested within design points.
    std::vector<DesignPoint> rows;
    rows.reserve(cells * static_cast<std::size_t>(design.replicates));
    for (const auto& pt : points)
        for (int r = 0; r < design.replicates; ++r) rows.push_back(pt);

    // Warm the critical-value caches outside the parallel region.
    if (method == SimMethod::eer)
        smm_critical(static_cast<int>(cells) - 1,
                     static_cast<int>(cells) * design.replicates - static_cast<int>(cells),
                     kEerAlpha, mc);
    if (method == SimMethod::lenth_ier)
        lenth_critical(static_cast<int>(cells) - 1, ErrorRateMode::ier, kIerAlpha, mc);
    if (method == SimMethod::lenth_eer)
        lenth_critical(static_cast<int>(cells) - 1, ErrorRateMode::eer, kEerAlpha, mc);

    Rng base(seed, 0x51Dull);
    std::vector<double> sse(static_cast<std::size_t>(trials), 0.0);
    parallel_for(static_cast<std::size_t>(trials), effective_threads(threads),
                 [&](std::size_t trial) {
                     Rng rng_data = base.substream(2 * trial);
                     Rng rng_method = base.substream(2 * trial + 1);
                     TrueModel truth = draw_true_model(model, design.k, rng_data);
                     std::vector<double> y(rows.size());
                     for (std::size_t i = 0; i < rows.size(); ++i)
                         y[i] = truth.sample(i / static_cast<std::size_t>(design.replicates),
                                             rng_data);
                     Dataset data = Dataset::make(factors, rows, std::move(y));
                     std::vector<double> mu_hat =
                         method_mu_hat(method, data, points, mc, rng_method);
                     double s = 0.0;
                     for (std::size_t i = 0; i < cells; ++i) {
                         double d = mu_hat[i] - truth.mu[i];
                         s += d * d;
                     }
                     sse[trial] = s;
                 });

    PmseRow row;
    row.method = method;
    row.model = model;
    row.trials = trials;
    row.pmse = pairwise_sum(sse) / static_cast<double>(trials);
    std::vector<double> sq(sse.size());
    for (std::size_t i = 0; i < sse.size(); ++i) {
        double d = sse[i] - row.pmse;
        sq[i] = d * d;
    }
    double var = trials > 1 ? pairwise_sum(sq) / static_cast<double>(trials - 1) : 0.0;
    row.mc_se = std::sqrt(var / static_cast<double>(trials));
    return row;
}

void relative_pmse(std::span<PmseRow> rows) {
    if (rows.size() < 2) throw ValidationError("relative_pmse: at least two methods required");
    for (SimModelKind kind : {SimModelKind::null_model, SimModelKind::unif,
                              SimModelKind::exp_model, SimModelKind::hier}) {
        double sum = 0.0;
        long count = 0;
        for (const auto& r : rows)
            if (r.model == kind) {
                sum += r.pmse;
                ++count;
            }
        if (count == 0) continue;
        double mean = sum / static_cast<double>(count);
        if (!(mean > 0.0)) throw NumericError("relative_pmse: zero mean PMSE");
        for (auto& r : rows)
            if (r.model == kind) r.relative = r.pmse / mean;
    }
}

PmseReport run_protocol(const SimDesign& design, std::span<const SimModelKind> models,
                        long trials, std::uint64_t seed, const McConfig& mc, int threads) {
    PmseReport report;
    report.design = design;
    report.trials = trials;
    report.seed = seed;
    std::vector<SimMethod> methods =
        design.replicates >= 2 ? replicated_methods() : unreplicated_methods();
    for (SimModelKind model : models)
        for (SimMethod method : methods)
            report.rows.push_back(run_pmse(method, model, design, trials, seed, mc, threads));
    relative_pmse(report.rows);
    return report;
}

}  // namespace doetree
