// GUIDE-style recursive partitioning with unbiased split selection.
//
// Split variables are chosen by chi-squared tests of residual signs against
// grouped predictor values (with bootstrap recalibration for the node model's
// own regressors and paired interaction tests), not by exhaustive impurity
// search, so variables with more candidate splits gain no advantage. Node
// models range from constants to stepwise main-effects fits in the Gaussian,
// Poisson, and binomial families. Trees are pruned by cost complexity and
// selected by V-fold cross-validation.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "doetree/design.hpp"
#include "doetree/glm.hpp"
#include "doetree/rng.hpp"

namespace doetree {

enum class NodeModelKind { constant, best_simple, multiple, stepwise };

std::string to_string(NodeModelKind kind);

struct TreeConfig {
    NodeModelKind kind = NodeModelKind::constant;
    Family family = Family::gaussian();
    int min_node_size = 0;       // 0 = max(5, 2 * (regressor columns + 1))
    int max_depth = 6;
    int bootstrap_samples = 50;  // resamples for p-value calibration
    std::uint64_t seed = 0;
    int cv_folds = 10;
};

// One regressor column of a node model: a numeric code column (level < 0) or
// a set-to-zero indicator for a specific level of a nominal factor.
struct RegressorColumn {
    int factor = -1;
    int level = -1;
    std::string label;
};

struct LeafModel {
    std::vector<RegressorColumn> columns;  // excludes the intercept
    std::vector<double> coefficients;      // [intercept, columns...]
    std::vector<double> std_errors;        // aligned with coefficients (NaN if aliased)
    std::vector<bool> aliased;             // aligned with coefficients
    double mean = 0.0;                     // response-scale node mean
    int n_rows = 0;
    double deviance = 0.0;

    double linear_predictor(const std::vector<Factor>& factors, const DesignPoint& point) const;
    std::vector<int> regressor_factors() const;
};

struct Split {
    enum class Kind { threshold, subset };

    int variable = -1;
    Kind kind = Kind::threshold;
    double threshold = 0.0;         // threshold: code <= threshold goes left
    std::vector<int> left_levels;   // subset: level indices routed left
    std::vector<int> seen_levels;   // levels present in this node at training
    bool majority_left = true;      // default branch for unseen levels

    // True if the point goes left; sets *unseen for subset splits on levels
    // that never reached this node during training.
    bool goes_left(const std::vector<Factor>& factors, const DesignPoint& point,
                   bool* unseen = nullptr) const;
    std::string describe(const std::vector<Factor>& factors) const;
};

struct TreeNode {
    std::optional<Split> split;  // empty = leaf
    std::unique_ptr<TreeNode> left, right;
    LeafModel model;  // the model fitted at this node (used directly if leaf)
    int id = 1;

    bool is_leaf() const { return !split.has_value(); }
    int leaf_count() const;
    std::unique_ptr<TreeNode> clone() const;
};

struct Tree {
    std::vector<Factor> factors;
    Family family = Family::gaussian();
    NodeModelKind kind = NodeModelKind::constant;
    std::unique_ptr<TreeNode> root;

    Tree clone() const;
};

struct PruneSequence {
    std::vector<double> alphas;  // nondecreasing, starts at 0
    std::vector<Tree> subtrees;  // nested; last is root-only
};

struct Prediction {
    double value = 0.0;
    bool unseen_level = false;
};

// ---------------------------------------------------------------------------
// Growing, pruning, selection, prediction
// ---------------------------------------------------------------------------

Tree grow_tree(const Dataset& data, const TreeConfig& config);
Tree grow_tree(const Dataset& data, std::span<const int> rows, const TreeConfig& config);

PruneSequence prune_sequence(const Tree& tree);

// V-fold cross-validation over the cost-complexity grid (geometric midpoints
// of consecutive alphas); picks the subtree with the smallest CV deviance.
Tree cv_select(const Dataset& data, const TreeConfig& config, int folds, std::uint64_t seed);

double predict(const Tree& tree, const DesignPoint& point);
Prediction predict_detail(const Tree& tree, const DesignPoint& point);

// Expand a Gaussian tree over two-level factors into the +/-1 monomial basis:
// sum over leaves of (leaf linear function) x product of path indicators.
Polynomial to_polynomial(const Tree& tree);

// ---------------------------------------------------------------------------
// Split-selection internals (exposed for direct testing)
// ---------------------------------------------------------------------------

struct ChiSquareTest {
    double statistic = 0.0;
    int df = 1;
    double p_value = 1.0;
};

// Node-model fit on a row subset.
LeafModel fit_node(const Dataset& data, std::span<const int> rows, NodeModelKind kind,
                   Family family);

// Response-scale residuals of a node model over the node rows.
std::vector<double> node_residuals(const Dataset& data, std::span<const int> rows,
                                   const LeafModel& model, Family family);

// Chi-squared test of residual signs against the grouped values of one
// variable (levels for nominal factors, up to four quartile groups for
// ordinal ones). Degenerate tables give p = 1.
ChiSquareTest curvature_test(const Dataset& data, std::span<const int> rows,
                             std::span<const double> residuals, int variable);

// Chi-squared test of residual signs against the up-to-four cells formed by
// halving two variables (at the node median for ordinal variables, most
// frequent level versus rest for multi-level nominal ones).
ChiSquareTest interaction_test(const Dataset& data, std::span<const int> rows,
                               std::span<const double> residuals, int var_a, int var_b);

// Bootstrap recalibration of a curvature p-value for a variable that is a
// regressor in the node model: the fitted model's regressor columns are
// refitted on permuted responses, and the observed statistic is rescaled so
// the permutation median matches the chi-squared median. Non-regressors are
// returned unchanged.
double calibrate_pvalue(const Dataset& data, std::span<const int> rows, NodeModelKind kind,
                        Family family, const LeafModel& model, int variable,
                        const ChiSquareTest& raw, int bootstrap_samples, Rng rng);

// The variable with the smallest (calibrated) curvature p-value, preempted by
// a Bonferroni-adjusted pairwise interaction test when one is smaller than
// every curvature p-value. Exact p-value ties are broken by a seeded random
// draw so that null variables are selected exchangeably. Returns -1 when no
// variable is admissible.
int choose_split_variable(const Dataset& data, std::span<const int> rows,
                          const LeafModel& model, const TreeConfig& config, Rng rng);

// Exhaustive search over thresholds (ordinal) or level subsets (nominal) of
// the chosen variable, minimizing the summed deviance of the two child node
// models; both children must meet min_node_size.
std::optional<Split> best_split_value(const Dataset& data, std::span<const int> rows,
                                      int variable, const TreeConfig& config);

// Resolved minimum node size for a config (the auto rule when 0).
int resolved_min_node_size(const Dataset& data, const TreeConfig& config);

// ---------------------------------------------------------------------------
// Direct construction helpers (tests and expansion identities)
// ---------------------------------------------------------------------------

std::unique_ptr<TreeNode> make_leaf(double intercept,
                                    std::vector<std::pair<int, double>> slopes = {});
std::unique_ptr<TreeNode> make_split(int variable, std::unique_ptr<TreeNode> low,
                                     std::unique_ptr<TreeNode> high);
Tree make_tree(std::vector<Factor> factors, std::unique_ptr<TreeNode> root,
               Family family = Family::gaussian(),
               NodeModelKind kind = NodeModelKind::constant);

}  // namespace doetree
