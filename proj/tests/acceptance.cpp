// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. argv[1] (optional) is the path to the doetree CLI binary, used by
// the determinism checks.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "doetree/classic.hpp"
#include "doetree/datasets.hpp"
#include "doetree/glm.hpp"
#include "doetree/rng.hpp"
#include "doetree/sim.hpp"
#include "doetree/tree.hpp"

using namespace doetree;

namespace {

int g_failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void report(int number, const std::string& name, bool pass, double seconds, double limit,
            const std::string& note = "") {
    bool in_time = seconds < limit;
    if (!pass || !in_time) ++g_failures;
    std::printf("%s criterion %d (%s): %.1fs%s%s\n", (pass && in_time) ? "PASS" : "FAIL", number,
                name.c_str(), seconds, in_time ? "" : " [over time budget]",
                note.empty() ? "" : ("  -- " + note).c_str());
    std::fflush(stdout);
}

std::vector<Factor> xfactors(int k) {
    std::vector<Factor> fs;
    for (int j = 0; j < k; ++j)
        fs.push_back(Factor::two_level_factor("x" + std::to_string(j + 1), "-", "+"));
    return fs;
}

double poly_coef(const Polynomial& poly, Term t) {
    auto it = poly.coefficients.find(t);
    return it == poly.coefficients.end() ? 0.0 : it->second;
}

// ---------------------------------------------------------------------------

void criterion_1_seed_glm() {
    Timer timer;
    auto seed = seed_germination();
    std::vector<Term> terms = {Term{}, Term{0}, Term{1}, Term{2}, Term{1, 2}};
    DummyMatrix dm = dummy_matrix(seed.data, terms);
    FitResult fit = irls_fit(dm.x, seed.data.y(), seed.data.trials(), Family::binomial());

    struct Expect {
        const char* label;
        double coef, se;
    };
    const Expect expected[] = {
        {"(Intercept)", 2.5224, 0.2670},      {"germ21", -0.2765, 0.1492},
        {"store42", -2.9841, 0.2940},         {"store62", -6.9886, 0.7549},
        {"moistlow", 0.8026, 0.4412},         {"moistmed", 0.3757, 0.3913},
        {"store42:moistlow", 2.6496, 0.5595}, {"store62:moistlow", 4.3581, 0.8495},
        {"store42:moistmed", 1.3276, 0.4493}, {"store62:moistmed", 0.5561, 0.9292},
    };
    bool pass = true;
    double worst = 0.0;
    for (const auto& e : expected) {
        auto it = std::find(dm.labels.begin(), dm.labels.end(), e.label);
        if (it == dm.labels.end()) {
            pass = false;
            continue;
        }
        std::size_t j = static_cast<std::size_t>(it - dm.labels.begin());
        double dc = std::fabs(fit.coefficients[j] - e.coef);
        double ds = std::fabs(fit.std_errors[j] - e.se);
        worst = std::max({worst, dc, ds});
        if (dc >= 5e-4 || ds >= 5e-4) pass = false;
    }
    char note[64];
    std::snprintf(note, sizeof note, "max |error| %.2e (tol 5e-4)", worst);
    report(1, "seed-germination logistic fit", pass, timer.seconds(), 1.0, note);
}

void criterion_2_wafer_classical() {
    Timer timer;
    Dataset wafer = wafer_reconstruction().data;
    EffectTable table = estimate_effects(wafer);
    bool pass = true;
    std::string note;

    // (a) saturated coefficients and common SE
    const std::map<Term, double> expect = {
        {Term{}, 14.161250},       {Term{0}, -0.038729},      {Term{1}, 0.086271},
        {Term{2}, -0.038708},      {Term{3}, 0.245021},       {Term{0, 1}, 0.003708},
        {Term{0, 2}, -0.046229},   {Term{0, 3}, -0.025000},   {Term{1, 2}, 0.028771},
        {Term{1, 3}, -0.015042},   {Term{2, 3}, -0.172521},   {Term{0, 1, 2}, 0.048750},
        {Term{0, 1, 3}, 0.012521}, {Term{0, 2, 3}, -0.015000}, {Term{1, 2, 3}, 0.054958},
        {Term{0, 1, 2, 3}, 0.009979}};
    for (std::size_t i = 0; i < table.terms.size(); ++i)
        if (std::fabs(table.estimates[i] - expect.at(table.terms[i])) >= 1e-6) pass = false;
    if (!table.common_se || std::fabs(*table.common_se - 0.049744) >= 1e-6) pass = false;
    if (!pass) note += "[a: effect table] ";

    // (b) IER at 0.05 keeps exactly {D, CD} with the published coefficients
    SelectedModel ier = select_ier(table, 0.05);
    bool b_ok = ier.terms == std::vector<Term>{Term{}, Term{3}, Term{2, 3}} &&
                std::fabs(poly_coef(ier.fitted, Term{}) - 14.16125) < 1e-5 &&
                std::fabs(poly_coef(ier.fitted, Term{3}) - 0.24502) < 1e-5 &&
                std::fabs(poly_coef(ier.fitted, Term{2, 3}) + 0.17252) < 1e-5;
    if (!b_ok) {
        pass = false;
        note += "[b: IER] ";
    }

    // (c) EER at 0.10 picks the same set
    SelectedModel eer = select_eer(table, 0.10);
    if (!(eer.terms == ier.terms)) {
        pass = false;
        note += "[c: EER] ";
    }

    // (d) stepwise AIC: the hierarchical model, confirmed by a brute-force
    // scan over all downward-closed term sets
    SelectedModel aic_model = stepwise_aic(wafer);
    std::vector<Term> want = {Term{}, Term{1}, Term{2}, Term{3}, Term{2, 3}};
    bool d_ok = aic_model.terms == want &&
                std::fabs(poly_coef(aic_model.fitted, Term{1}) - 0.08627) < 1e-5 &&
                std::fabs(poly_coef(aic_model.fitted, Term{2}) + 0.03871) < 1e-5 &&
                std::fabs(poly_coef(aic_model.fitted, Term{3}) - 0.24502) < 1e-5 &&
                std::fabs(poly_coef(aic_model.fitted, Term{2, 3}) + 0.17252) < 1e-5;
    // brute force over hierarchical models via the orthogonal RSS identity
    {
        std::vector<Term> effects(table.terms.begin() + 1, table.terms.end());
        double tss = 0.0;
        for (double v : wafer.y()) tss += (v - table.estimates[0]) * (v - table.estimates[0]);
        double best_aic = std::numeric_limits<double>::infinity();
        std::uint32_t best_mask = 0;
        for (std::uint32_t mask = 0; mask < (1u << 15); ++mask) {
            bool hier = true;
            for (std::size_t i = 0; i < 15 && hier; ++i) {
                if (!(mask >> i & 1)) continue;
                for (std::size_t j = 0; j < 15 && hier; ++j)
                    if (i != j && effects[i].contains(effects[j]) && !(mask >> j & 1))
                        hier = false;
            }
            if (!hier) continue;
            double rss = tss;
            int p = 1;
            for (std::size_t i = 0; i < 15; ++i)
                if (mask >> i & 1) {
                    rss -= 96.0 * table.estimates[i + 1] * table.estimates[i + 1];
                    ++p;
                }
            double a = 96.0 * std::log(std::max(rss, 1e-300) / 96.0) + 2.0 * (p + 1);
            if (a < best_aic) {
                best_aic = a;
                best_mask = mask;
            }
        }
        std::vector<Term> brute = {Term{}};
        for (std::size_t i = 0; i < 15; ++i)
            if (best_mask >> i & 1) brute.push_back(effects[i]);
        std::sort(brute.begin(), brute.end());
        if (!(brute == aic_model.terms)) d_ok = false;
    }
    if (!d_ok) {
        pass = false;
        note += "[d: AIC] ";
    }
    report(2, "wafer classical selection", pass, timer.seconds(), 5.0, note);
}

void criterion_3_polynomial_identities() {
    Timer timer;
    bool pass = true;
    std::string note;

    // Exact leaf means implied by the published saturated fit (these round to
    // the printed leaf constants).
    Dataset wafer = wafer_reconstruction().data;
    auto region_mean = [&](std::map<int, int> levels) {
        double sum = 0.0;
        int count = 0;
        for (std::size_t i = 0; i < wafer.n_rows(); ++i) {
            bool in = true;
            for (auto [f, lv] : levels)
                if (wafer.level_of(i, static_cast<std::size_t>(f)) != lv) in = false;
            if (in) {
                sum += wafer.y()[i];
                ++count;
            }
        }
        return sum / count;
    };
    double m1 = region_mean({{3, 0}, {2, 0}});          // D-, C-
    double m2 = region_mean({{3, 0}, {2, 1}});          // D-, C+
    double m3 = region_mean({{3, 1}, {1, 0}, {2, 0}});  // D+, B-, C-
    double m4 = region_mean({{3, 1}, {1, 0}, {2, 1}});  // D+, B-, C+
    double m5 = region_mean({{3, 1}, {1, 1}});          // D+, B+
    // tie to the printed constants at their own precision
    if (std::fabs(m1 - 13.78242) > 5e-6 || std::fabs(m2 - 14.05) > 5e-5 ||
        std::fabs(m3 - 14.63) > 5e-6 || std::fabs(m4 - 14.0401) > 5e-5 ||
        std::fabs(m5 - 14.4775) > 5e-6) {
        pass = false;
        note += "[leaf means] ";
    }

    auto d_lo = make_split(2, make_leaf(m1), make_leaf(m2));
    auto b_lo = make_split(2, make_leaf(m3), make_leaf(m4));
    auto d_hi = make_split(1, std::move(b_lo), make_leaf(m5));
    Tree fig2 = make_tree(xfactors(4), make_split(3, std::move(d_lo), std::move(d_hi)));
    Polynomial p2 = to_polynomial(fig2);
    const std::map<Term, double> expect2 = {
        {Term{}, 14.16125}, {Term{3}, 0.24502},    {Term{2, 3}, -0.14064},
        {Term{2}, -0.00683}, {Term{1}, 0.03561},   {Term{1, 3}, 0.03561},
        {Term{1, 2}, 0.07374}, {Term{1, 2, 3}, 0.07374}};
    for (const auto& [t, v] : expect2)
        if (std::fabs(poly_coef(p2, t) - v) >= 1e-5) {
            pass = false;
            note += "[piecewise-constant expansion] ";
            break;
        }

    // stepwise tree over five factors: split on x4 with linear leaves
    Tree fig8 = make_tree(xfactors(5),
                          make_split(3, make_leaf(60.125, {{1, 3.125}, {4, 2.375}}),
                                     make_leaf(70.875, {{1, 16.375}, {4, -8.625}})));
    Polynomial p8 = to_polynomial(fig8);
    const std::map<Term, double> expect8 = {
        {Term{}, 65.5},    {Term{1}, 9.75},     {Term{3}, 5.375},
        {Term{4}, -3.125}, {Term{1, 3}, 6.625}, {Term{3, 4}, -5.5}};
    for (const auto& [t, v] : expect8)
        if (std::fabs(poly_coef(p8, t) - v) >= 1e-5) {
            pass = false;
            note += "[stepwise expansion] ";
            break;
        }

    // 500 random two-level trees: predict == polynomial evaluation everywhere
    Rng rng(470, 0);
    std::function<std::unique_ptr<TreeNode>(int, int)> random_tree = [&](int k, int depth) {
        bool leaf = depth >= 3 || rng.uniform() < 0.35;
        if (leaf) {
            std::vector<std::pair<int, double>> slopes;
            for (int f = 0; f < k; ++f)
                if (rng.uniform() < 0.4) slopes.emplace_back(f, rng.normal());
            return make_leaf(rng.normal() * 3.0, slopes);
        }
        int var = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(k)));
        return make_split(var, random_tree(k, depth + 1), random_tree(k, depth + 1));
    };
    for (int rep = 0; rep < 500 && pass; ++rep) {
        int k = 2 + static_cast<int>(rng.uniform_below(4));
        Tree t = make_tree(xfactors(k), random_tree(k, 0));
        Polynomial poly = to_polynomial(t);
        Dataset probe = Dataset::make(xfactors(k), enumerate_design(k),
                                      std::vector<double>(std::size_t{1} << k, 0.0));
        for (const auto& pt : enumerate_design(k)) {
            double lhs = predict(t, pt);
            double rhs = poly.eval(probe, pt);
            if (std::fabs(lhs - rhs) >= 1e-10 * (1.0 + std::fabs(lhs))) {
                pass = false;
                note += "[random-tree identity] ";
                break;
            }
        }
    }
    report(3, "polynomial expansion identities", pass, timer.seconds(), 10.0, note);
}

void criterion_4_lenth() {
    Timer timer;
    bool pass = true;
    std::string note;
    EffectTable table = reactor_effects();

    McConfig mc_a;  // default seed
    SelectedModel ier = select_lenth(table, ErrorRateMode::ier, 0.05, mc_a);
    std::vector<Term> want_ier = {Term{}, Term{1}, Term{3}, Term{4}, Term{1, 3}, Term{3, 4}};
    if (!(ier.terms == want_ier)) {
        pass = false;
        note += "[IER set] ";
    }
    SelectedModel eer = select_lenth(table, ErrorRateMode::eer, 0.10, mc_a);
    std::vector<Term> want_eer = {Term{}, Term{1}, Term{3}, Term{1, 3}, Term{3, 4}};
    if (!(eer.terms == want_eer)) {
        pass = false;
        note += "[EER set] ";
    }

    // critical values stable to 2% across two disjoint seeds
    McConfig mc_b;
    mc_b.seed = 987654321;
    double worst_rel = 0.0;
    for (auto mode : {ErrorRateMode::ier, ErrorRateMode::eer}) {
        double alpha = mode == ErrorRateMode::ier ? 0.05 : 0.10;
        double ca = lenth_critical(31, mode, alpha, mc_a);
        double cb = lenth_critical(31, mode, alpha, mc_b);
        worst_rel = std::max(worst_rel, std::fabs(ca - cb) / ca);
    }
    if (worst_rel >= 0.02) {
        pass = false;
        note += "[stability] ";
    }
    char extra[96];
    std::snprintf(extra, sizeof extra, "%smax seed-to-seed drift %.2f%%", note.c_str(),
                  100.0 * worst_rel);
    report(4, "Lenth reproduction", pass, timer.seconds(), 30.0, extra);
}

void criterion_5_unbiasedness() {
    Timer timer;
    const int trials = 2000;
    TreeConfig cfg;
    cfg.kind = NodeModelKind::constant;
    Rng base(5150, 0);
    int counts[4] = {0, 0, 0, 0};
    std::vector<double> pvals;
    pvals.reserve(trials);
    for (int t = 0; t < trials; ++t) {
        Rng trial = base.substream(static_cast<std::uint64_t>(t));
        std::vector<double> y(16);
        for (auto& v : y) v = trial.normal();
        Dataset d = Dataset::make(xfactors(4), enumerate_design(4), y);
        std::vector<int> rows(16);
        std::iota(rows.begin(), rows.end(), 0);
        LeafModel model = fit_node(d, rows, NodeModelKind::constant, Family::gaussian());
        int v = choose_split_variable(d, rows, model, cfg, trial.substream(17));
        if (v >= 0) ++counts[v];
        auto res = node_residuals(d, rows, model, Family::gaussian());
        pvals.push_back(curvature_test(d, rows, res, 0).p_value);
    }
    const double band = 3.0 * std::sqrt(0.25 * 0.75 / trials);  // ~0.029
    bool freq_ok = true;
    for (int c : counts)
        if (std::fabs(c / static_cast<double>(trials) - 0.25) > band) freq_ok = false;

    // Kolmogorov-Smirnov distance of the curvature p-values from U(0,1)
    std::sort(pvals.begin(), pvals.end());
    double dks = 0.0;
    for (std::size_t i = 0; i < pvals.size(); ++i) {
        double lo = static_cast<double>(i) / pvals.size();
        double hi = static_cast<double>(i + 1) / pvals.size();
        dks = std::max({dks, std::fabs(pvals[i] - lo), std::fabs(pvals[i] - hi)});
    }
    double ks_crit = 1.62762 / std::sqrt(static_cast<double>(trials));
    bool ks_ok = dks < ks_crit;

    char note[160];
    std::snprintf(note, sizeof note,
                  "freq %.3f/%.3f/%.3f/%.3f (band +-%.3f); KS D=%.3f crit=%.3f%s",
                  counts[0] / 2000.0, counts[1] / 2000.0, counts[2] / 2000.0, counts[3] / 2000.0,
                  band, dks, ks_crit,
                  ks_ok ? "" : " [p-values are discrete at n=16; see notes]");
    report(5, "split-selection unbiasedness", freq_ok && ks_ok, timer.seconds(), 120.0, note);
}

void criterion_6_pmse_protocol() {
    Timer timer;
    const long trials = 1000;
    const std::uint64_t seed = 202608;
    bool pass = true;
    std::string note;
    const std::vector<SimModelKind> models = {SimModelKind::null_model, SimModelKind::unif,
                                              SimModelKind::exp_model, SimModelKind::hier};

    auto print_panel = [](const char* name, const std::vector<PmseRow>& rows) {
        std::printf("  %s:", name);
        for (const auto& r : rows)
            std::printf(" %s=%.3f", to_string(r.method).c_str(), r.relative);
        std::printf("\n");
    };

    // replicated panel
    SimDesign rep{4, 6};
    std::map<SimModelKind, std::vector<PmseRow>> rep_rows;
    for (SimModelKind model : models) {
        std::vector<PmseRow> rows;
        for (SimMethod m : replicated_methods())
            rows.push_back(run_pmse(m, model, rep, trials, seed));
        relative_pmse(rows);
        print_panel(("replicated " + to_string(model)).c_str(), rows);
        rep_rows[model] = rows;
    }
    {
        const auto& null_rows = rep_rows[SimModelKind::null_model];
        auto rel = [&](SimMethod m) {
            for (const auto& r : null_rows)
                if (r.method == m) return r.relative;
            return -1.0;
        };
        double eer = rel(SimMethod::eer);
        bool eer_smallest = true;
        for (const auto& r : null_rows)
            if (r.method != SimMethod::eer && r.relative <= eer) eer_smallest = false;
        std::vector<double> rels;
        for (const auto& r : null_rows) rels.push_back(r.relative);
        std::sort(rels.begin(), rels.end());
        bool ier_aic_top = rel(SimMethod::ier) >= rels[rels.size() - 2] - 1e-12 &&
                           rel(SimMethod::aic) >= rels[rels.size() - 2] - 1e-12;
        if (!eer_smallest) {
            pass = false;
            note += "[a: EER not smallest under Null] ";
        }
        if (!ier_aic_top) {
            pass = false;
            note += "[a: IER/AIC not the largest two] ";
        }
    }
    for (SimModelKind model : {SimModelKind::unif, SimModelKind::exp_model, SimModelKind::hier}) {
        const auto& rows = rep_rows[model];
        double eer = 0.0;
        for (const auto& r : rows)
            if (r.method == SimMethod::eer) eer = r.relative;
        for (const auto& r : rows)
            if ((r.method == SimMethod::guide_constant || r.method == SimMethod::guide_simple ||
                 r.method == SimMethod::guide_stepwise) &&
                !(r.relative < eer)) {
                pass = false;
                note += "[b: GUIDE >= EER under " + to_string(model) + "] ";
            }
    }
    // analytic anchors
    {
        PmseRow sat = run_pmse(SimMethod::oracle_saturated, SimModelKind::null_model, rep, trials,
                               seed);
        PmseRow icpt = run_pmse(SimMethod::oracle_intercept, SimModelKind::null_model, rep,
                                trials, seed);
        if (std::fabs(sat.pmse - 2.0 / 3.0) > 3.0 * sat.mc_se) {
            pass = false;
            note += "[c: saturated anchor] ";
        }
        if (std::fabs(icpt.pmse - 1.0 / 24.0) > 3.0 * icpt.mc_se) {
            pass = false;
            note += "[c: intercept anchor] ";
        }
    }

    // unreplicated panel
    SimDesign unrep{4, 1};
    for (SimModelKind model : models) {
        std::vector<PmseRow> rows;
        for (SimMethod m : unreplicated_methods())
            rows.push_back(run_pmse(m, model, unrep, trials, seed));
        relative_pmse(rows);
        print_panel(("unreplicated " + to_string(model)).c_str(), rows);
        double lenth_eer = 0.0;
        for (const auto& r : rows)
            if (r.method == SimMethod::lenth_eer) lenth_eer = r.relative;
        if (model == SimModelKind::null_model) {
            for (const auto& r : rows)
                if (r.method != SimMethod::lenth_eer && r.relative <= lenth_eer) {
                    pass = false;
                    note += "[unrep: Lenth-EER not smallest under Null] ";
                    break;
                }
        } else {
            for (const auto& r : rows)
                if (r.method != SimMethod::lenth_eer && r.relative >= lenth_eer) {
                    pass = false;
                    note += "[unrep: Lenth-EER not largest under " + to_string(model) + "] ";
                    break;
                }
        }
    }
    report(6, "PMSE protocol at desk scale", pass, timer.seconds(), 900.0, note);
}

void criterion_7_determinism(const char* cli) {
    Timer timer;
    if (cli == nullptr) {
        report(7, "determinism", false, timer.seconds(), 120.0, "CLI path not supplied");
        return;
    }
    auto run = [&](const std::string& env, const std::string& args, const std::string& out) {
        std::string cmd = env + " " + std::string(cli) + " " + args + " --out " + out;
        return std::system(cmd.c_str()) == 0;
    };
    auto slurp = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    bool pass = true;
    std::string tmp = "/tmp/doetree_accept_";
    // simulate: same seed twice, then 1 vs 8 workers
    pass &= run("DOETREE_THREADS=1", "simulate --design unreplicated --trials 60 --seed 31 "
                                     "--models null,hier --format csv", tmp + "s1.csv");
    pass &= run("DOETREE_THREADS=1", "simulate --design unreplicated --trials 60 --seed 31 "
                                     "--models null,hier --format csv", tmp + "s2.csv");
    pass &= run("DOETREE_THREADS=8", "simulate --design unreplicated --trials 60 --seed 31 "
                                     "--models null,hier --format csv", tmp + "s8.csv");
    std::string s1 = slurp(tmp + "s1.csv");
    if (s1.empty() || s1 != slurp(tmp + "s2.csv") || s1 != slurp(tmp + "s8.csv")) pass = false;

    // tree growth with a fixed seed
    pass &= run("", "tree --dataset wafer --model simple --seed 11 --format json",
                tmp + "t1.json");
    pass &= run("", "tree --dataset wafer --model simple --seed 11 --format json",
                tmp + "t2.json");
    std::string t1 = slurp(tmp + "t1.json");
    if (t1.empty() || t1 != slurp(tmp + "t2.json")) pass = false;

    // analyze with simulated critical values
    pass &= run("DOETREE_THREADS=1", "analyze --dataset reactor --method lenth-eer --seed 5",
                tmp + "a1.txt");
    pass &= run("DOETREE_THREADS=8", "analyze --dataset reactor --method lenth-eer --seed 5",
                tmp + "a2.txt");
    std::string a1 = slurp(tmp + "a1.txt");
    if (a1.empty() || a1 != slurp(tmp + "a2.txt")) pass = false;

    report(7, "determinism", pass, timer.seconds(), 120.0);
}

void criterion_8_glm_tree_smoke() {
    Timer timer;
    auto seed = seed_germination();
    TreeConfig cfg;
    cfg.kind = NodeModelKind::best_simple;
    cfg.family = Family::binomial();
    cfg.seed = 5;
    Tree t = grow_tree(seed.data, cfg);
    bool pass = !t.root->is_leaf() && t.root->split->variable == 2;  // moisture first
    report(8, "binomial tree smoke (soft target)", pass, timer.seconds(), 60.0,
           "growth splits moisture first; exact published tree replication is out of scope");
}

}  // namespace

int main(int argc, char** argv) {
    const char* cli = argc > 1 ? argv[1] : nullptr;
    std::printf("acceptance suite\n");
    criterion_1_seed_glm();
    criterion_2_wafer_classical();
    criterion_3_polynomial_identities();
    criterion_4_lenth();
    criterion_5_unbiasedness();
    criterion_6_pmse_protocol();
    criterion_7_determinism(cli);
    criterion_8_glm_tree_smoke();
    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
