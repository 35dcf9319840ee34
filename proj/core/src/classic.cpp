#include "doetree/classic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "doetree/errors.hpp"
#include "doetree/glm.hpp"
#include "doetree/rng.hpp"
#include "doetree/special.hpp"
#include "doetree/threads.hpp"

namespace doetree {

namespace {

double median_of_sorted(const std::vector<double>& v) {
    const std::size_t m = v.size();
    return (m % 2 == 1) ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

double pse_of(std::vector<double>& abs_sorted) {
    std::sort(abs_sorted.begin(), abs_sorted.end());
    double s0 = 1.5 * median_of_sorted(abs_sorted);
    if (s0 <= 0.0) return 0.0;
    std::vector<double> trimmed;
    trimmed.reserve(abs_sorted.size());
    for (double v : abs_sorted)
        if (v < 2.5 * s0) trimmed.push_back(v);
    if (trimmed.empty()) return 0.0;
    return 1.5 * median_of_sorted(trimmed);
}

// ---------------------------------------------------------------------------
// Simulated critical-value caches
// ---------------------------------------------------------------------------

struct SmmKey {
    std::uint64_t seed;
    int draws;
    int k;
    int dof;
    auto operator<=>(const SmmKey&) const = default;
};

struct LenthKey {
    std::uint64_t seed;
    int draws;
    int k;
    auto operator<=>(const LenthKey&) const = default;
};

struct LenthSample {
    std::vector<double> max_ratio;       // per draw
    std::vector<double> marginal_ratio;  // pooled over coordinates
};

std::mutex g_cache_mutex;
std::map<SmmKey, std::shared_ptr<std::vector<double>>> g_smm_cache;
std::map<LenthKey, std::shared_ptr<LenthSample>> g_lenth_cache;

std::shared_ptr<std::vector<double>> smm_sample(int k_effects, int dof, const McConfig& mc) {
    SmmKey key{mc.seed, mc.draws, k_effects, dof};
    {
        std::lock_guard<std::mutex> lock(g_cache_mutex);
        auto it = g_smm_cache.find(key);
        if (it != g_smm_cache.end()) return it->second;
    }
    auto sample = std::make_shared<std::vector<double>>(static_cast<std::size_t>(mc.draws));
    Rng base(mc.seed, /*stream=*/0x534D4Dull);
    parallel_for(static_cast<std::size_t>(mc.draws), effective_threads(mc.threads),
                 [&](std::size_t i) {
                     Rng rng = base.substream(i);
                     double mx = 0.0;
                     for (int j = 0; j < k_effects; ++j)
                         mx = std::max(mx, std::fabs(rng.normal()));
                     double s = std::sqrt(rng.chi_squared(dof) / dof);
                     (*sample)[i] = mx / s;
                 });
    std::sort(sample->begin(), sample->end());
    std::lock_guard<std::mutex> lock(g_cache_mutex);
    return g_smm_cache.emplace(key, sample).first->second;
}

std::shared_ptr<LenthSample> lenth_sample(int k_effects, const McConfig& mc) {
    LenthKey key{mc.seed, mc.draws, k_effects};
    {
        std::lock_guard<std::mutex> lock(g_cache_mutex);
        auto it = g_lenth_cache.find(key);
        if (it != g_lenth_cache.end()) return it->second;
    }
    auto sample = std::make_shared<LenthSample>();
    const std::size_t draws = static_cast<std::size_t>(mc.draws);
    const std::size_t kk = static_cast<std::size_t>(k_effects);
    sample->max_ratio.assign(draws, 0.0);
    sample->marginal_ratio.assign(draws * kk, 0.0);
    Rng base(mc.seed, /*stream=*/0x4C454Eull);
    parallel_for(draws, effective_threads(mc.threads), [&](std::size_t i) {
        Rng rng = base.substream(i);
        std::vector<double> abs(kk);
        for (std::size_t j = 0; j < kk; ++j) abs[j] = std::fabs(rng.normal());
        std::vector<double> sorted = abs;
        double pse = pse_of(sorted);
        double mx = 0.0;
        for (std::size_t j = 0; j < kk; ++j) {
            double r = pse > 0.0 ? abs[j] / pse : 0.0;
            sample->marginal_ratio[i * kk + j] = r;
            mx = std::max(mx, r);
        }
        sample->max_ratio[i] = mx;
    });
    std::sort(sample->max_ratio.begin(), sample->max_ratio.end());
    std::sort(sample->marginal_ratio.begin(), sample->marginal_ratio.end());
    std::lock_guard<std::mutex> lock(g_cache_mutex);
    return g_lenth_cache.emplace(key, sample).first->second;
}

double quantile_of_sorted(const std::vector<double>& sorted, double alpha) {
    double q = 1.0 - alpha;
    std::size_t idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
    idx = std::min(std::max<std::size_t>(idx, 1), sorted.size());
    return sorted[idx - 1];
}

Polynomial restricted_polynomial(const EffectTable& table, const std::vector<bool>& keep) {
    Polynomial poly;
    for (std::size_t i = 0; i < table.terms.size(); ++i)
        if (keep[i]) poly.coefficients[table.terms[i]] = table.estimates[i];
    return poly;
}

SelectedModel build_model(const EffectTable& table, const std::vector<bool>& keep,
                          std::string tag) {
    SelectedModel model;
    for (std::size_t i = 0; i < table.terms.size(); ++i)
        if (keep[i]) model.terms.push_back(table.terms[i]);
    std::sort(model.terms.begin(), model.terms.end());
    model.fitted = restricted_polynomial(table, keep);
    model.method_tag = std::move(tag);
    return model;
}

}  // namespace

double EffectTable::t_stat(std::size_t i) const {
    if (!common_se) throw ValidationError("effect table is unreplicated: no standard error");
    return estimates[i] / *common_se;
}

bool SelectedModel::keeps(const Term& t) const {
    return std::binary_search(terms.begin(), terms.end(), t);
}

EffectTable estimate_effects(const Dataset& data) {
    auto reps = data.complete_two_level_replicates();
    if (!reps)
        throw ValidationError("estimate_effects: complete two-level factorial required");
    const int k = static_cast<int>(data.n_factors());
    EffectTable table;
    table.terms = all_terms(k);
    table.k = k;
    table.n = static_cast<int>(data.n_rows());

    Matrix x = effect_matrix(data, table.terms);
    FitResult fit = ols_fit(x, data.y());
    table.estimates = fit.coefficients;
    table.dof = fit.dof_residual;
    if (*reps >= 2) {
        double s = std::sqrt(fit.rss_or_deviance / table.dof);
        table.common_se = s / std::sqrt(static_cast<double>(table.n));
    }
    return table;
}

SelectedModel select_ier(const EffectTable& table, double alpha) {
    if (!table.common_se) throw ValidationError("select_ier: replicated table required");
    if (table.dof < 1) throw ValidationError("select_ier: at least one error df required");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("select_ier: alpha must lie in (0, 1]");
    double crit = alpha >= 1.0 ? 0.0 : special::student_t_quantile(1.0 - alpha / 2.0, table.dof);
    std::vector<bool> keep(table.terms.size(), false);
    keep[0] = true;
    for (std::size_t i = 1; i < table.terms.size(); ++i)
        if (std::fabs(table.t_stat(i)) > crit) keep[i] = true;
    return build_model(table, keep, "IER");
}

SelectedModel select_eer(const EffectTable& table, double alpha, const McConfig& mc) {
    if (!table.common_se) throw ValidationError("select_eer: replicated table required");
    if (table.dof < 1) throw ValidationError("select_eer: at least one error df required");
    const int k_effects = static_cast<int>(table.terms.size()) - 1;
    double crit = smm_critical(k_effects, table.dof, alpha, mc);
    std::vector<bool> keep(table.terms.size(), false);
    keep[0] = true;
    for (std::size_t i = 1; i < table.terms.size(); ++i)
        if (std::fabs(table.t_stat(i)) > crit) keep[i] = true;
    return build_model(table, keep, "EER");
}

SelectedModel stepwise_aic(const Dataset& data) {
    EffectTable table = estimate_effects(data);
    const int n = table.n;
    const std::size_t nterms = table.terms.size();

    // Orthogonality of the +/-1 design: RSS(model) = TSS - n sum est^2 over
    // the model's terms, so every candidate step is a constant-time update.
    double tss = 0.0;
    {
        double mean = table.estimates[0];
        for (double v : data.y()) tss += (v - mean) * (v - mean);
    }
    auto rss_of = [&](const std::vector<bool>& in) {
        double explained = 0.0;
        for (std::size_t i = 1; i < nterms; ++i)
            if (in[i]) explained += n * table.estimates[i] * table.estimates[i];
        return std::max(tss - explained, 0.0);
    };
    auto aic_of = [&](const std::vector<bool>& in) {
        double rss = rss_of(in);
        int p = 1;
        for (std::size_t i = 1; i < nterms; ++i)
            if (in[i]) ++p;
        if (rss <= 0.0) return -std::numeric_limits<double>::infinity();
        return n * std::log(rss / n) + 2.0 * (p + 1);
    };

    std::vector<bool> in(nterms, false);
    in[0] = true;
    for (std::size_t i = 1; i < nterms; ++i)
        if (table.terms[i].order() == 1) in[i] = true;
    {
        int p0 = 1 + table.k;
        if (n - p0 <= 0)
            throw ValidationError(
                "stepwise_aic: the main-effects start is already saturated; AIC selection "
                "is not usable on this design");
    }

    double current = aic_of(in);
    for (;;) {
        struct Candidate {
            double aic;
            int order;
            Term term;
            std::size_t index;
            bool add;
        };
        std::vector<Candidate> cands;
        for (std::size_t i = 1; i < nterms; ++i) {
            const Term& t = table.terms[i];
            if (!in[i]) {
                // addable only if every lower-order sub-term is present
                bool ok = true;
                for (std::size_t j = 1; j < nterms && ok; ++j)
                    if (t.contains(table.terms[j]) && !(table.terms[j] == t) && !in[j]) ok = false;
                if (!ok) continue;
                in[i] = true;
                cands.push_back({aic_of(in), t.order(), t, i, true});
                in[i] = false;
            } else {
                // removable only if no kept term strictly contains it
                bool ok = true;
                for (std::size_t j = 1; j < nterms && ok; ++j)
                    if (in[j] && !(table.terms[j] == t) && table.terms[j].contains(t)) ok = false;
                if (!ok) continue;
                in[i] = false;
                cands.push_back({aic_of(in), t.order(), t, i, false});
                in[i] = true;
            }
        }
        auto best = std::min_element(cands.begin(), cands.end(),
                                     [](const Candidate& a, const Candidate& b) {
                                         if (a.aic != b.aic) return a.aic < b.aic;
                                         if (a.order != b.order) return a.order < b.order;
                                         return a.term < b.term;
                                     });
        if (best == cands.end() || !(best->aic < current - 1e-12)) break;
        in[best->index] = best->add;
        current = best->aic;
    }

    if (rss_of(in) <= 1e-12 * std::max(tss, 1.0)) {
        throw ValidationError(
            "stepwise_aic: selection reached the saturated model (unreplicated design); "
            "AIC always selects the full model here and is not informative");
    }
    return build_model(table, in, "AIC");
}

double lenth_pse(std::span<const double> estimates, bool* degenerate) {
    if (estimates.size() < 3)
        throw ValidationError("lenth_pse: at least three effect estimates required");
    std::vector<double> abs(estimates.size());
    for (std::size_t i = 0; i < estimates.size(); ++i) abs[i] = std::fabs(estimates[i]);
    double pse = pse_of(abs);
    if (degenerate) *degenerate = (pse <= 0.0);
    return pse;
}

SelectedModel select_lenth(const EffectTable& table, ErrorRateMode mode, double alpha,
                           const McConfig& mc) {
    if (table.common_se)
        throw ValidationError("select_lenth: intended for unreplicated tables");
    std::vector<double> est(table.estimates.begin() + 1, table.estimates.end());
    bool degenerate = false;
    double pse = lenth_pse(est, &degenerate);
    if (degenerate) throw NumericError("select_lenth: degenerate PSE (all effects zero)");

    const int k_effects = static_cast<int>(est.size());
    double crit = lenth_critical(k_effects, mode, alpha, mc);
    std::vector<bool> keep(table.terms.size(), false);
    keep[0] = true;
    for (std::size_t i = 1; i < table.terms.size(); ++i)
        if (std::fabs(table.estimates[i]) / pse > crit) keep[i] = true;
    return build_model(table, keep, mode == ErrorRateMode::ier ? "LENTH_IER" : "LENTH_EER");
}

std::vector<HalfNormalPoint> half_normal(const EffectTable& table) {
    const std::size_t k_effects = table.terms.size() - 1;
    std::vector<HalfNormalPoint> pts(k_effects);
    for (std::size_t i = 1; i < table.terms.size(); ++i) {
        pts[i - 1].abs_estimate = std::fabs(table.estimates[i]);
        pts[i - 1].term = table.terms[i];
    }
    std::sort(pts.begin(), pts.end(), [](const HalfNormalPoint& a, const HalfNormalPoint& b) {
        if (a.abs_estimate != b.abs_estimate) return a.abs_estimate < b.abs_estimate;
        return a.term < b.term;
    });
    for (std::size_t i = 0; i < k_effects; ++i) {
        double u = 0.5 + 0.5 * (static_cast<double>(i + 1) - 0.5) / static_cast<double>(k_effects);
        pts[i].quantile = special::normal_quantile(u);
    }
    return pts;
}

double smm_critical(int k_effects, int dof, double alpha, const McConfig& mc) {
    if (k_effects < 1 || dof < 1) throw ConfigError("smm_critical: K and dof must be >= 1");
    if (!(alpha > 0.0) || !(alpha < 1.0)) throw ConfigError("smm_critical: alpha in (0, 1)");
    auto sample = smm_sample(k_effects, dof, mc);
    return quantile_of_sorted(*sample, alpha);
}

double lenth_critical(int k_effects, ErrorRateMode mode, double alpha, const McConfig& mc) {
    if (k_effects < 3) throw ConfigError("lenth_critical: at least 3 effects required");
    if (!(alpha > 0.0) || !(alpha < 1.0)) throw ConfigError("lenth_critical: alpha in (0, 1)");
    auto sample = lenth_sample(k_effects, mc);
    return mode == ErrorRateMode::eer ? quantile_of_sorted(sample->max_ratio, alpha)
                                      : quantile_of_sorted(sample->marginal_ratio, alpha);
}

}  // namespace doetree
