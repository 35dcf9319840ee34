#include "doetree/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "doetree/errors.hpp"
#include "doetree/special.hpp"

namespace doetree {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (...) {
        throw ValidationError("could not parse " + what + " value '" + s + "'");
    }
}

}  // namespace

std::string format_number(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

Dataset parse_csv(std::istream& in, const CsvSchema& schema) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("csv: empty input");
    if (!line.empty() && line.front() == '\xEF' && line.size() >= 3) line = line.substr(3);  // BOM
    std::vector<std::string> header = split_csv_line(line);

    auto col_index = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ValidationError("csv: missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    std::size_t y_col = col_index(schema.response_column);
    std::optional<std::size_t> n_col;
    if (schema.n_column) n_col = col_index(*schema.n_column);
    if (schema.response_kind == ResponseKind::proportion && !n_col)
        throw ValidationError("csv: proportion responses need a denominator column");

    std::vector<std::string> factor_names = schema.factor_columns;
    if (factor_names.empty()) {
        for (const auto& h : header)
            if (h != schema.response_column && (!schema.n_column || h != *schema.n_column))
                factor_names.push_back(h);
    }
    if (factor_names.empty()) throw ValidationError("csv: no factor columns");
    std::vector<std::size_t> factor_idx;
    for (const auto& name : factor_names) factor_idx.push_back(col_index(name));

    // Collect rows as strings first; levels appear in first-appearance order
    // unless an explicit order is given.
    std::vector<std::vector<std::string>> level_labels(factor_names.size());
    for (std::size_t f = 0; f < factor_names.size(); ++f) {
        auto it = schema.level_order.find(factor_names[f]);
        if (it != schema.level_order.end()) level_labels[f] = it->second;
    }
    std::vector<DesignPoint> points;
    std::vector<double> y, n;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw ValidationError("csv: line " + std::to_string(lineno) + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(header.size()));
        DesignPoint pt;
        for (std::size_t f = 0; f < factor_names.size(); ++f) {
            const std::string& label = cells[factor_idx[f]];
            if (label.empty())
                throw ValidationError("csv: missing factor value on line " +
                                      std::to_string(lineno));
            auto& labels = level_labels[f];
            auto it = std::find(labels.begin(), labels.end(), label);
            if (it == labels.end()) {
                if (schema.level_order.count(factor_names[f]))
                    throw ValidationError("csv: unexpected level '" + label + "' for factor '" +
                                          factor_names[f] + "'");
                labels.push_back(label);
                it = labels.end() - 1;
            }
            pt.codes.push_back(static_cast<int>(it - labels.begin()));
        }
        const std::string& ys = cells[y_col];
        if (ys.empty()) throw ValidationError("csv: missing response on line " +
                                              std::to_string(lineno));
        y.push_back(parse_double(ys, "response"));
        if (n_col) n.push_back(parse_double(cells[*n_col], "denominator"));
        points.push_back(std::move(pt));
    }
    if (points.empty()) throw ValidationError("csv: no data rows");

    std::vector<Factor> factors;
    for (std::size_t f = 0; f < factor_names.size(); ++f) {
        const auto& labels = level_labels[f];
        auto score_it = schema.ordinal_scores.find(factor_names[f]);
        if (score_it != schema.ordinal_scores.end()) {
            if (score_it->second.size() != labels.size())
                throw ValidationError("csv: factor '" + factor_names[f] + "' has " +
                                      std::to_string(labels.size()) + " levels but " +
                                      std::to_string(score_it->second.size()) + " scores");
            factors.push_back(Factor::ordinal(factor_names[f], labels, score_it->second));
        } else if (labels.size() == 2) {
            factors.push_back(Factor::two_level_factor(factor_names[f], labels[0], labels[1]));
        } else {
            factors.push_back(Factor::nominal(factor_names[f], labels));
        }
    }
    if (schema.response_kind != ResponseKind::proportion) n.clear();
    return Dataset::make(std::move(factors), std::move(points), std::move(y), std::move(n),
                         schema.response_kind);
}

Dataset parse_csv_file(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return parse_csv(in, schema);
}

void write_csv(std::ostream& out, const Dataset& data) {
    for (const auto& f : data.factors()) out << f.name << ",";
    out << "y";
    if (data.response_kind() == ResponseKind::proportion) out << ",n";
    out << "\n";
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
        for (std::size_t f = 0; f < data.n_factors(); ++f)
            out << data.factors()[f].levels[static_cast<std::size_t>(data.level_of(i, f))] << ",";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", data.y()[i]);
        out << buf;
        if (data.response_kind() == ResponseKind::proportion)
            out << "," << static_cast<long>(data.trials()[i]);
        out << "\n";
    }
}

// ---------------------------------------------------------------------------
// Tree rendering
// ---------------------------------------------------------------------------

namespace {

std::string leaf_equation(const Tree& tree, const LeafModel& model) {
    std::string lhs;
    switch (tree.family.kind) {
        case FamilyKind::gaussian: lhs = "yhat = "; break;
        case FamilyKind::poisson: lhs = "log(mu) = "; break;
        case FamilyKind::binomial: lhs = "logit(p) = "; break;
    }
    std::string rhs = format_number(model.coefficients.empty() ? 0.0 : model.coefficients[0]);
    for (std::size_t j = 0; j < model.columns.size(); ++j) {
        double c = model.coefficients[j + 1];
        if (model.aliased[j + 1]) {
            rhs += " + [" + model.columns[j].label + " aliased]";
            continue;
        }
        rhs += (c < 0 ? " - " : " + ") + format_number(std::fabs(c)) + "*" +
               model.columns[j].label;
    }
    return lhs + rhs;
}

void render_node_text(const Tree& tree, const TreeNode* node, int depth, std::string* out) {
    std::string indent(static_cast<std::size_t>(2 * depth), ' ');
    if (node->is_leaf()) {
        *out += indent + "leaf " + std::to_string(node->id) + ": n=" +
                std::to_string(node->model.n_rows) + "  mean=" + format_number(node->model.mean) +
                "  " + leaf_equation(tree, node->model) + "\n";
        return;
    }
    *out += indent + "node " + std::to_string(node->id) + ": " +
            node->split->describe(tree.factors) + "  (n=" + std::to_string(node->model.n_rows) +
            ", mean=" + format_number(node->model.mean) + ")\n";
    render_node_text(tree, node->left.get(), depth + 1, out);
    render_node_text(tree, node->right.get(), depth + 1, out);
}

json node_to_json(const Tree& tree, const TreeNode* node) {
    json j;
    if (node->is_leaf()) {
        json leaf;
        leaf["n"] = node->model.n_rows;
        leaf["mean"] = node->model.mean;
        json terms = json::array(), cols = json::array(), coefs = json::array(),
             se = json::array(), aliased = json::array();
        coefs.push_back(node->model.coefficients.empty() ? 0.0 : node->model.coefficients[0]);
        se.push_back(nullptr);
        aliased.push_back(false);
        for (std::size_t c = 0; c < node->model.columns.size(); ++c) {
            const RegressorColumn& col = node->model.columns[c];
            terms.push_back(col.label);
            cols.push_back({{"factor", col.factor}, {"level", col.level}});
            coefs.push_back(node->model.coefficients[c + 1]);
            double s = node->model.std_errors[c + 1];
            if (std::isfinite(s))
                se.push_back(s);
            else
                se.push_back(nullptr);
            aliased.push_back(static_cast<bool>(node->model.aliased[c + 1]));
        }
        leaf["terms"] = terms;
        leaf["cols"] = cols;
        leaf["coefs"] = coefs;
        leaf["se"] = se;
        leaf["aliased"] = aliased;
        leaf["deviance"] = node->model.deviance;
        j["leaf"] = leaf;
        j["id"] = node->id;
        return j;
    }
    json sp;
    sp["var"] = node->split->variable;
    if (node->split->kind == Split::Kind::threshold) {
        sp["op"] = "<=";
        sp["value"] = node->split->threshold;
    } else {
        sp["op"] = "in";
        sp["subset"] = node->split->left_levels;
    }
    sp["seen"] = node->split->seen_levels;
    sp["majority"] = node->split->majority_left ? "left" : "right";
    j["split"] = sp;
    j["id"] = node->id;
    j["n"] = node->model.n_rows;
    j["mean"] = node->model.mean;
    j["deviance"] = node->model.deviance;
    j["left"] = node_to_json(tree, node->left.get());
    j["right"] = node_to_json(tree, node->right.get());
    return j;
}

std::unique_ptr<TreeNode> node_from_json(const json& j) {
    auto node = std::make_unique<TreeNode>();
    node->id = j.value("id", 1);
    if (j.contains("leaf")) {
        const json& leaf = j.at("leaf");
        node->model.n_rows = leaf.at("n").get<int>();
        node->model.mean = leaf.at("mean").get<double>();
        node->model.deviance = leaf.value("deviance", 0.0);
        const json& coefs = leaf.at("coefs");
        const json& se = leaf.at("se");
        const json& aliased = leaf.at("aliased");
        const json& cols = leaf.at("cols");
        const json& terms = leaf.at("terms");
        for (std::size_t i = 0; i < coefs.size(); ++i) {
            node->model.coefficients.push_back(coefs[i].get<double>());
            node->model.std_errors.push_back(
                se[i].is_null() ? std::numeric_limits<double>::quiet_NaN()
                                : se[i].get<double>());
            node->model.aliased.push_back(aliased[i].get<bool>());
        }
        for (std::size_t i = 0; i < cols.size(); ++i) {
            RegressorColumn col;
            col.factor = cols[i].at("factor").get<int>();
            col.level = cols[i].at("level").get<int>();
            col.label = terms[i].get<std::string>();
            node->model.columns.push_back(col);
        }
        return node;
    }
    const json& sp = j.at("split");
    Split split;
    split.variable = sp.at("var").get<int>();
    if (sp.at("op").get<std::string>() == "<=") {
        split.kind = Split::Kind::threshold;
        split.threshold = sp.at("value").get<double>();
    } else {
        split.kind = Split::Kind::subset;
        split.left_levels = sp.at("subset").get<std::vector<int>>();
    }
    split.seen_levels = sp.at("seen").get<std::vector<int>>();
    split.majority_left = sp.at("majority").get<std::string>() == "left";
    node->split = std::move(split);
    node->model.n_rows = j.value("n", 0);
    node->model.mean = j.value("mean", 0.0);
    node->model.deviance = j.value("deviance", 0.0);
    node->model.coefficients = {node->model.mean};
    node->model.std_errors = {std::numeric_limits<double>::quiet_NaN()};
    node->model.aliased = {false};
    node->left = node_from_json(j.at("left"));
    node->right = node_from_json(j.at("right"));
    return node;
}

}  // namespace

std::string render_tree_text(const Tree& tree) {
    std::string out = "tree: model=" + to_string(tree.kind) + " family=" + tree.family.name() +
                      " leaves=" + std::to_string(tree.root->leaf_count()) + "\n";
    render_node_text(tree, tree.root.get(), 0, &out);
    return out;
}

std::string render_tree_json(const Tree& tree) {
    json j;
    j["model"] = to_string(tree.kind);
    j["family"] = tree.family.name();
    json factors = json::array();
    for (const auto& f : tree.factors) {
        json jf;
        jf["name"] = f.name;
        jf["levels"] = f.levels;
        jf["kind"] = f.kind == FactorKind::two_level
                         ? "two_level"
                         : (f.kind == FactorKind::nominal ? "nominal" : "ordinal");
        jf["scores"] = f.scores;
        factors.push_back(jf);
    }
    j["factors"] = factors;
    j["root"] = node_to_json(tree, tree.root.get());
    return j.dump(2) + "\n";
}

Tree tree_from_json(const std::string& json_text) {
    json j = json::parse(json_text);
    Tree tree;
    std::string fam = j.at("family").get<std::string>();
    if (fam == "gaussian")
        tree.family = Family::gaussian();
    else if (fam == "poisson")
        tree.family = Family::poisson();
    else if (fam == "binomial")
        tree.family = Family::binomial();
    else
        throw ValidationError("tree json: unknown family '" + fam + "'");
    std::string kind = j.at("model").get<std::string>();
    if (kind == "constant")
        tree.kind = NodeModelKind::constant;
    else if (kind == "simple")
        tree.kind = NodeModelKind::best_simple;
    else if (kind == "multiple")
        tree.kind = NodeModelKind::multiple;
    else if (kind == "stepwise")
        tree.kind = NodeModelKind::stepwise;
    else
        throw ValidationError("tree json: unknown model kind '" + kind + "'");
    for (const auto& jf : j.at("factors")) {
        std::string fk = jf.at("kind").get<std::string>();
        std::vector<std::string> levels = jf.at("levels").get<std::vector<std::string>>();
        std::string name = jf.at("name").get<std::string>();
        if (fk == "two_level")
            tree.factors.push_back(Factor::two_level_factor(name, levels.at(0), levels.at(1)));
        else if (fk == "nominal")
            tree.factors.push_back(Factor::nominal(name, levels));
        else
            tree.factors.push_back(
                Factor::ordinal(name, levels, jf.at("scores").get<std::vector<double>>()));
    }
    tree.root = node_from_json(j.at("root"));
    return tree;
}

// ---------------------------------------------------------------------------
// Tables, models, plot data
// ---------------------------------------------------------------------------

std::string render_effect_table(const EffectTable& table, const std::vector<Factor>& factors) {
    std::ostringstream out;
    out << "term,estimate";
    if (table.common_se) out << ",se,t,p";
    out << "\n";
    for (std::size_t i = 0; i < table.terms.size(); ++i) {
        out << table.terms[i].label(factors) << "," << format_number(table.estimates[i]);
        if (table.common_se) {
            double t = table.t_stat(i);
            double p = 2.0 * (1.0 - special::student_t_cdf(std::fabs(t), table.dof));
            out << "," << format_number(*table.common_se) << "," << format_number(t) << ","
                << format_number(p);
        }
        out << "\n";
    }
    if (table.common_se)
        out << "# error df: " << table.dof << ", n: " << table.n << "\n";
    else
        out << "# unreplicated design: no error estimate, n: " << table.n << "\n";
    return out.str();
}

std::string polynomial_to_string(const Polynomial& poly, const std::vector<Factor>& factors) {
    std::string out;
    bool first = true;
    for (const auto& [term, coef] : poly.coefficients) {
        std::string piece = format_number(std::fabs(coef));
        if (term.order() > 0) {
            piece += "*";
            for (std::size_t i = 0; i < term.members.size(); ++i) {
                if (i) piece += "*";
                piece += factors[static_cast<std::size_t>(term.members[i])].name;
            }
        }
        if (first) {
            out += (coef < 0 ? "-" : "") + piece;
            first = false;
        } else {
            out += (coef < 0 ? " - " : " + ") + piece;
        }
    }
    if (out.empty()) out = "0";
    return out;
}

std::string render_selected_model(const SelectedModel& model,
                                  const std::vector<Factor>& factors) {
    std::string out = "method: " + model.method_tag + "\nterms:";
    for (const auto& t : model.terms)
        if (t.order() > 0) out += " " + t.label(factors);
    if (model.terms.size() <= 1) out += " (intercept only)";
    out += "\nfit: yhat = " + polynomial_to_string(model.fitted, factors) + "\n";
    return out;
}

std::string selected_model_json(const SelectedModel& model, const EffectTable& table,
                                const std::vector<Factor>& factors) {
    json j;
    j["method"] = model.method_tag;
    json terms = json::array();
    for (const auto& t : model.terms) terms.push_back(t.label(factors));
    j["terms"] = terms;
    json coef = json::object();
    for (const auto& [term, c] : model.fitted.coefficients) coef[term.label(factors)] = c;
    j["coefficients"] = coef;
    j["n"] = table.n;
    j["error_df"] = table.dof;
    if (table.common_se) j["common_se"] = *table.common_se;
    return j.dump(2) + "\n";
}

std::string render_deviance_table(const DevianceTable& table,
                                  const std::vector<Factor>& factors) {
    std::ostringstream out;
    out << "term,df,deviance,mean_deviance,f,p\n";
    for (const auto& row : table.rows) {
        out << row.term.label(factors) << "," << row.df << "," << format_number(row.deviance)
            << "," << format_number(row.mean_deviance);
        if (row.has_p)
            out << "," << format_number(row.f_ratio) << "," << format_number(row.p_value);
        else
            out << ",,";
        out << "\n";
    }
    out << "Residuals," << table.residual_df << "," << format_number(table.residual_deviance)
        << "," << format_number(table.residual_mean_deviance) << ",,\n";
    return out.str();
}

std::string emit_half_normal(const EffectTable& table, const std::vector<Factor>& factors) {
    std::ostringstream out;
    out << "# half-normal quantile plot of absolute effect estimates\n";
    out << "quantile,abs_estimate,term\n";
    for (const auto& pt : half_normal(table))
        out << format_number(pt.quantile) << "," << format_number(pt.abs_estimate) << ","
            << pt.term.label(factors) << "\n";
    return out.str();
}

std::string emit_relative_pmse(const PmseReport& report) {
    std::ostringstream out;
    out << "# relative prediction MSE by method and simulation model\n";
    out << "model,method,pmse,mc_se,relative,trials\n";
    for (const auto& row : report.rows)
        out << to_string(row.model) << "," << to_string(row.method) << ","
            << format_number(row.pmse) << "," << format_number(row.mc_se) << ","
            << format_number(row.relative) << "," << row.trials << "\n";
    return out.str();
}

std::string emit_fitted_vs_x(const Tree& tree) {
    std::ostringstream out;
    out << "# fitted response versus the leaf regressor, one line per leaf\n";
    out << "leaf,n,regressor,intercept,slope,x_low,fit_low,x_high,fit_high\n";
    std::vector<const TreeNode*> stack = {tree.root.get()};
    std::vector<const TreeNode*> leaves;
    while (!stack.empty()) {
        const TreeNode* n = stack.back();
        stack.pop_back();
        if (n->is_leaf()) {
            leaves.push_back(n);
        } else {
            stack.push_back(n->right.get());
            stack.push_back(n->left.get());
        }
    }
    std::sort(leaves.begin(), leaves.end(),
              [](const TreeNode* a, const TreeNode* b) { return a->id < b->id; });
    for (const TreeNode* n : leaves) {
        double b0 = n->model.coefficients.empty() ? 0.0 : n->model.coefficients[0];
        if (n->model.columns.empty()) {
            out << n->id << "," << n->model.n_rows << ",," << format_number(b0) << ",0,,"
                << format_number(tree.family.inverse_link(b0)) << ",,"
                << format_number(tree.family.inverse_link(b0)) << "\n";
            continue;
        }
        const RegressorColumn& col = n->model.columns[0];
        const Factor& fac = tree.factors[static_cast<std::size_t>(col.factor)];
        double x_lo = fac.code(0);
        double x_hi = fac.code(fac.level_count() - 1);
        double b1 = n->model.coefficients[1];
        out << n->id << "," << n->model.n_rows << "," << col.label << "," << format_number(b0)
            << "," << format_number(b1) << "," << format_number(x_lo) << ","
            << format_number(tree.family.inverse_link(b0 + b1 * x_lo)) << ","
            << format_number(x_hi) << ","
            << format_number(tree.family.inverse_link(b0 + b1 * x_hi)) << "\n";
    }
    return out.str();
}

std::string render_pmse_text(const PmseReport& report) {
    std::ostringstream out;
    out << "design: 2^" << report.design.k << " x " << report.design.replicates
        << " replicates, trials=" << report.trials << ", seed=" << report.seed << "\n";
    out << "model,method,pmse,mc_se,relative\n";
    for (const auto& row : report.rows)
        out << to_string(row.model) << "," << to_string(row.method) << ","
            << format_number(row.pmse) << "," << format_number(row.mc_se) << ","
            << format_number(row.relative) << "\n";
    return out.str();
}

std::string render_pmse_json(const PmseReport& report) {
    json j;
    j["k"] = report.design.k;
    j["replicates"] = report.design.replicates;
    j["trials"] = report.trials;
    j["seed"] = report.seed;
    json rows = json::array();
    for (const auto& row : report.rows) {
        json r;
        r["model"] = to_string(row.model);
        r["method"] = to_string(row.method);
        r["pmse"] = row.pmse;
        r["mc_se"] = row.mc_se;
        r["relative"] = row.relative;
        r["trials"] = row.trials;
        rows.push_back(r);
    }
    j["rows"] = rows;
    return j.dump(2) + "\n";
}

}  // namespace doetree
