// CSV ingestion, tree and report rendering, and plot-data emission.
#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "doetree/classic.hpp"
#include "doetree/design.hpp"
#include "doetree/glm.hpp"
#include "doetree/sim.hpp"
#include "doetree/tree.hpp"

namespace doetree {

struct CsvSchema {
    std::string response_column = "y";
    std::optional<std::string> n_column;  // binomial denominators
    ResponseKind response_kind = ResponseKind::gaussian;
    // Empty = every non-response, non-denominator column, in header order.
    std::vector<std::string> factor_columns;
    // Explicit level orders (otherwise first appearance).
    std::map<std::string, std::vector<std::string>> level_order;
    // Declaring scores makes a factor ordinal.
    std::map<std::string, std::vector<double>> ordinal_scores;
};

Dataset parse_csv(std::istream& in, const CsvSchema& schema);
Dataset parse_csv_file(const std::string& path, const CsvSchema& schema);
void write_csv(std::ostream& out, const Dataset& data);

// Text rendering uses 6 significant digits throughout.
std::string format_number(double v);

std::string render_tree_text(const Tree& tree);
std::string render_tree_json(const Tree& tree);   // lossless
Tree tree_from_json(const std::string& json_text);

std::string render_effect_table(const EffectTable& table, const std::vector<Factor>& factors);
std::string render_selected_model(const SelectedModel& model, const std::vector<Factor>& factors);
std::string selected_model_json(const SelectedModel& model, const EffectTable& table,
                                const std::vector<Factor>& factors);
std::string polynomial_to_string(const Polynomial& poly, const std::vector<Factor>& factors);

std::string render_deviance_table(const DevianceTable& table, const std::vector<Factor>& factors);

// Column-stable plot-data CSVs with a header comment naming the plot kind.
std::string emit_half_normal(const EffectTable& table, const std::vector<Factor>& factors);
std::string emit_relative_pmse(const PmseReport& report);
std::string emit_fitted_vs_x(const Tree& tree);

std::string render_pmse_text(const PmseReport& report);
std::string render_pmse_json(const PmseReport& report);

}  // namespace doetree
