// doetree command-line interface: classical factorial analysis, GUIDE-style
// regression trees, and the PMSE simulation protocol.
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "doetree/classic.hpp"
#include "doetree/datasets.hpp"
#include "doetree/errors.hpp"
#include "doetree/io.hpp"
#include "doetree/sim.hpp"
#include "doetree/threads.hpp"
#include "doetree/tree.hpp"

namespace {

using namespace doetree;

struct InputOptions {
    std::string input_path;
    std::string dataset_id;
    std::string response_column = "y";
    std::string n_column;
    std::string response_kind = "gaussian";
    std::vector<std::string> ordinal_specs;  // name=s1,s2,...
    std::vector<std::string> level_specs;    // name=l1,l2,...
    std::uint64_t dataset_seed = 0;
};

void add_input_options(CLI::App* cmd, InputOptions* opts) {
    auto* input = cmd->add_option("--input", opts->input_path, "CSV input file");
    auto* ds = cmd->add_option("--dataset", opts->dataset_id,
                               "built-in dataset id (see `doetree datasets --list`)");
    input->excludes(ds);
    cmd->add_option("--response", opts->response_column, "response column name")
        ->capture_default_str();
    cmd->add_option("--n-column", opts->n_column, "binomial denominator column");
    cmd->add_option("--response-kind", opts->response_kind,
                    "response kind: gaussian|count|proportion")
        ->capture_default_str();
    cmd->add_option("--ordinal", opts->ordinal_specs,
                    "declare an ordinal factor: name=score1,score2,...");
    cmd->add_option("--levels", opts->level_specs, "explicit level order: name=l1,l2,...");
    cmd->add_option("--dataset-seed", opts->dataset_seed,
                    "seed for seeded built-in datasets");
}

std::pair<std::string, std::vector<std::string>> parse_kv_list(const std::string& spec) {
    auto eq = spec.find('=');
    if (eq == std::string::npos)
        throw ConfigError("expected name=v1,v2,... in '" + spec + "'");
    std::vector<std::string> values;
    std::stringstream ss(spec.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(item);
    return {spec.substr(0, eq), values};
}

Dataset load_input(const InputOptions& opts) {
    if (!opts.dataset_id.empty()) return get_dataset(opts.dataset_id, opts.dataset_seed).data;
    if (opts.input_path.empty()) throw ConfigError("one of --input or --dataset is required");
    CsvSchema schema;
    schema.response_column = opts.response_column;
    if (!opts.n_column.empty()) schema.n_column = opts.n_column;
    if (opts.response_kind == "gaussian")
        schema.response_kind = ResponseKind::gaussian;
    else if (opts.response_kind == "count")
        schema.response_kind = ResponseKind::count;
    else if (opts.response_kind == "proportion")
        schema.response_kind = ResponseKind::proportion;
    else
        throw ConfigError("unknown response kind '" + opts.response_kind + "'");
    for (const auto& spec : opts.ordinal_specs) {
        auto [name, values] = parse_kv_list(spec);
        std::vector<double> scores;
        for (const auto& v : values) scores.push_back(std::stod(v));
        schema.ordinal_scores[name] = scores;
    }
    for (const auto& spec : opts.level_specs) {
        auto [name, values] = parse_kv_list(spec);
        schema.level_order[name] = values;
    }
    return parse_csv_file(opts.input_path, schema);
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << content;
}

int run_analyze(const InputOptions& input, const std::string& method, double alpha,
                std::optional<std::uint64_t> seed, const std::string& format,
                const std::string& half_normal_path, const std::string& out_path) {
    Dataset data = load_input(input);
    bool needs_mc = method == "eer" || method == "lenth-ier" || method == "lenth-eer";
    if (needs_mc && !seed)
        throw ConfigError("--seed is required for '" + method + "' (simulated critical values)");
    McConfig mc;
    if (seed) mc.seed = *seed;

    SelectedModel model;
    EffectTable table = estimate_effects(data);
    if (method == "ier")
        model = select_ier(table, alpha);
    else if (method == "eer")
        model = select_eer(table, alpha, mc);
    else if (method == "aic")
        model = stepwise_aic(data);
    else if (method == "lenth-ier")
        model = select_lenth(table, ErrorRateMode::ier, alpha, mc);
    else if (method == "lenth-eer")
        model = select_lenth(table, ErrorRateMode::eer, alpha, mc);
    else
        throw ConfigError("unknown method '" + method + "'");

    std::string out;
    if (format == "json") {
        out = selected_model_json(model, table, data.factors());
    } else {
        out = render_effect_table(table, data.factors()) + "\n" +
              render_selected_model(model, data.factors());
    }
    write_output(out_path, out);
    if (!half_normal_path.empty())
        write_output(half_normal_path, emit_half_normal(table, data.factors()));
    return 0;
}

int run_tree(const InputOptions& input, const std::string& model, const std::string& family,
             int folds, std::uint64_t seed, int min_node, int max_depth, int bootstrap,
             bool no_cv, const std::string& format, const std::string& fitted_path,
             const std::string& out_path) {
    Dataset data = load_input(input);
    TreeConfig cfg;
    if (model == "constant")
        cfg.kind = NodeModelKind::constant;
    else if (model == "simple")
        cfg.kind = NodeModelKind::best_simple;
    else if (model == "multiple")
        cfg.kind = NodeModelKind::multiple;
    else if (model == "stepwise")
        cfg.kind = NodeModelKind::stepwise;
    else
        throw ConfigError("unknown node model '" + model + "'");
    if (family == "gaussian")
        cfg.family = Family::gaussian();
    else if (family == "poisson")
        cfg.family = Family::poisson();
    else if (family == "binomial")
        cfg.family = Family::binomial();
    else
        throw ConfigError("unknown family '" + family + "'");
    cfg.min_node_size = min_node;
    cfg.max_depth = max_depth;
    cfg.bootstrap_samples = bootstrap;
    cfg.seed = seed;
    cfg.cv_folds = folds;

    Tree tree = no_cv ? grow_tree(data, cfg) : cv_select(data, cfg, folds, seed);
    std::string out = format == "json" ? render_tree_json(tree) : render_tree_text(tree);
    write_output(out_path, out);
    if (!fitted_path.empty()) write_output(fitted_path, emit_fitted_vs_x(tree));
    return 0;
}

int run_simulate(const std::string& design, int k, int replicates, long trials,
                 std::uint64_t seed, const std::vector<std::string>& model_names,
                 const std::string& format, const std::string& out_path) {
    SimDesign d;
    d.k = k;
    if (design == "replicated")
        d.replicates = replicates;
    else if (design == "unreplicated")
        d.replicates = 1;
    else
        throw ConfigError("unknown design '" + design + "'");

    std::vector<SimModelKind> models;
    if (model_names.empty()) {
        models = {SimModelKind::null_model, SimModelKind::unif, SimModelKind::exp_model,
                  SimModelKind::hier};
    } else {
        for (const auto& m : model_names) models.push_back(parse_sim_model(m));
    }
    PmseReport report = run_protocol(d, models, trials, seed, McConfig{}, 0);
    std::string out;
    if (format == "json")
        out = render_pmse_json(report);
    else if (format == "csv")
        out = emit_relative_pmse(report);
    else
        out = render_pmse_text(report);
    write_output(out_path, out);
    return 0;
}

int run_anova(const InputOptions& input, int max_order, const std::string& out_path) {
    Dataset data = load_input(input);
    DevianceTable table = anova_poisson(data, max_order);
    write_output(out_path, render_deviance_table(table, data.factors()));
    return 0;
}

int run_datasets(bool list, const std::string& export_id, std::uint64_t seed,
                 const std::string& out_path) {
    if (list || export_id.empty()) {
        std::string out;
        for (const auto& id : dataset_ids()) {
            NamedDataset ds = get_dataset(id, seed);
            out += id + ": " + std::to_string(ds.data.n_rows()) + " rows, " +
                   std::to_string(ds.data.n_factors()) + " factors\n    " + ds.provenance + "\n";
        }
        write_output(out_path, out);
        return 0;
    }
    NamedDataset ds = get_dataset(export_id, seed);
    std::ostringstream out;
    write_csv(out, ds.data);
    write_output(out_path, out.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"factorial-experiment analysis: classical selection and regression trees"};
    app.require_subcommand(1);

    // analyze
    auto* analyze = app.add_subcommand("analyze", "classical effect selection on a 2^k factorial");
    InputOptions a_in;
    add_input_options(analyze, &a_in);
    std::string a_method;
    double a_alpha = -1.0;
    std::optional<std::uint64_t> a_seed;
    std::string a_format = "text", a_half_normal, a_out;
    analyze->add_option("--method", a_method, "ier|eer|aic|lenth-ier|lenth-eer")->required();
    analyze->add_option("--alpha", a_alpha, "significance level (default 0.05; 0.10 for eer)");
    std::uint64_t a_seed_value = 0;
    auto* a_seed_opt = analyze->add_option("--seed", a_seed_value,
                                           "seed for simulated critical values");
    analyze->add_option("--format", a_format, "text|json")->capture_default_str();
    analyze->add_option("--half-normal", a_half_normal, "write half-normal plot CSV here");
    analyze->add_option("--out", a_out, "output file (default stdout)");

    // tree
    auto* tree = app.add_subcommand("tree", "grow and select a piecewise-linear tree");
    InputOptions t_in;
    add_input_options(tree, &t_in);
    std::string t_model = "constant", t_family = "gaussian", t_format = "text", t_fitted, t_out;
    int t_folds = 10, t_min = 0, t_depth = 6, t_boot = 50;
    std::uint64_t t_seed = 0;
    bool t_nocv = false;
    tree->add_option("--model", t_model, "constant|simple|multiple|stepwise")
        ->capture_default_str();
    tree->add_option("--family", t_family, "gaussian|poisson|binomial")->capture_default_str();
    tree->add_option("--folds", t_folds, "cross-validation folds")->capture_default_str();
    tree->add_option("--seed", t_seed, "seed (required; no wall-clock seeding)")->required();
    tree->add_option("--min-node-size", t_min, "minimum rows per leaf (0 = auto)");
    tree->add_option("--max-depth", t_depth, "maximum depth")->capture_default_str();
    tree->add_option("--bootstrap", t_boot, "calibration resamples")->capture_default_str();
    tree->add_flag("--no-cv", t_nocv, "skip pruning/CV; print the fully grown tree");
    tree->add_option("--format", t_format, "text|json")->capture_default_str();
    tree->add_option("--fitted-vs-x", t_fitted, "write per-leaf fitted-line CSV here");
    tree->add_option("--out", t_out, "output file (default stdout)");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "prediction-MSE comparison protocol");
    std::string s_design = "replicated", s_format = "text", s_out;
    int s_k = 4, s_reps = 6;
    long s_trials = 1000;
    std::uint64_t s_seed = 0;
    std::vector<std::string> s_models;
    simulate->add_option("--design", s_design, "replicated|unreplicated")->capture_default_str();
    simulate->add_option("--k", s_k, "factor count")->capture_default_str();
    simulate->add_option("--replicates", s_reps, "replicates (replicated design)")
        ->capture_default_str();
    simulate->add_option("--trials", s_trials, "simulation trials")->capture_default_str();
    simulate->add_option("--seed", s_seed, "seed (required; no wall-clock seeding)")->required();
    simulate->add_option("--models", s_models, "subset of null,unif,exp,hier")
        ->delimiter(',');
    simulate->add_option("--format", s_format, "text|json|csv")->capture_default_str();
    simulate->add_option("--out", s_out, "output file (default stdout)");

    // anova
    auto* anova = app.add_subcommand("anova", "sequential analysis of deviance (Poisson)");
    InputOptions n_in;
    add_input_options(anova, &n_in);
    int n_order = 2;
    std::string n_out;
    anova->add_option("--max-order", n_order, "highest interaction order")->capture_default_str();
    anova->add_option("--out", n_out, "output file (default stdout)");

    // datasets
    auto* datasets_cmd = app.add_subcommand("datasets", "list or export built-in datasets");
    bool d_list = false;
    std::string d_export, d_out;
    std::uint64_t d_seed = 0;
    datasets_cmd->add_flag("--list", d_list, "list dataset ids");
    datasets_cmd->add_option("--export", d_export, "dataset id to export as CSV");
    datasets_cmd->add_option("--seed", d_seed, "seed for seeded datasets");
    datasets_cmd->add_option("--out", d_out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 4;
    }

    try {
        if (analyze->parsed()) {
            if (a_seed_opt->count() > 0) a_seed = a_seed_value;
            if (a_alpha < 0.0)
                a_alpha = (a_method == "eer" || a_method == "lenth-eer") ? 0.10 : 0.05;
            return run_analyze(a_in, a_method, a_alpha, a_seed, a_format, a_half_normal, a_out);
        }
        if (tree->parsed())
            return run_tree(t_in, t_model, t_family, t_folds, t_seed, t_min, t_depth, t_boot,
                            t_nocv, t_format, t_fitted, t_out);
        if (simulate->parsed())
            return run_simulate(s_design, s_k, s_reps, s_trials, s_seed, s_models, s_format,
                                s_out);
        if (anova->parsed()) {
            if (n_in.response_kind == "gaussian") n_in.response_kind = "count";
            return run_anova(n_in, n_order, n_out);
        }
        if (datasets_cmd->parsed()) return run_datasets(d_list, d_export, d_seed, d_out);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
