// Seeded Monte Carlo comparison of selection methods by prediction MSE.
//
// Each trial draws a true model, simulates a complete two-level factorial
// (replicated or unreplicated), applies one method, and accumulates the sum
// of squared errors of the estimated cell means against the true ones.
// Trials are embarrassingly parallel; per-trial substreams and pairwise
// reduction make reports bit-identical for any worker count.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "doetree/classic.hpp"
#include "doetree/design.hpp"
#include "doetree/rng.hpp"

namespace doetree {

enum class SimModelKind { null_model, unif, exp_model, hier };

enum class SimMethod {
    ier,               // t-interval selection, alpha 0.05
    eer,               // studentized-maximum-modulus selection, alpha 0.10
    aic,               // hierarchical stepwise AIC
    guide_constant,
    guide_simple,
    guide_stepwise,
    lenth_ier,         // Lenth selection, alpha 0.05 (unreplicated)
    lenth_eer,         // Lenth selection, alpha 0.10 (unreplicated)
    oracle_saturated,  // saturated fit (analytic PMSE anchor)
    oracle_intercept,  // grand mean (analytic PMSE anchor)
};

std::string to_string(SimModelKind kind);
std::string to_string(SimMethod method);
SimModelKind parse_sim_model(const std::string& name);
SimMethod parse_sim_method(const std::string& name);

// The standard method panels: six methods for replicated designs, five for
// unreplicated ones.
std::vector<SimMethod> replicated_methods();
std::vector<SimMethod> unreplicated_methods();

struct SimDesign {
    int k = 4;
    int replicates = 6;  // 1 = unreplicated
};

struct PmseRow {
    SimMethod method = SimMethod::ier;
    SimModelKind model = SimModelKind::null_model;
    double pmse = 0.0;
    double mc_se = 0.0;
    double relative = 0.0;  // filled by relative_pmse
    long trials = 0;
};

struct PmseReport {
    SimDesign design;
    long trials = 0;
    std::uint64_t seed = 0;
    std::vector<PmseRow> rows;
};

// True cell means and a response sampler for one trial.
struct TrueModel {
    std::vector<double> mu;  // per design point, enumerate_design order
    // Response for one observation at design point `index`, consuming `rng`.
    double sample(std::size_t index, Rng& rng) const;

    SimModelKind kind = SimModelKind::null_model;
    std::vector<double> eta;           // linear predictor (exp_model only)
    std::vector<double> coefficients;  // per non-intercept term, all_terms order
    double sigma = 0.5;
};

// Draw coefficients for one trial and return the implied cell means.
TrueModel draw_true_model(SimModelKind kind, int k, Rng& rng);

// PMSE of one method under one simulation model. Identical (seed, design,
// model) settings replay identical data for every method.
PmseRow run_pmse(SimMethod method, SimModelKind model, const SimDesign& design, long trials,
                 std::uint64_t seed, const McConfig& mc = {}, int threads = 0);

// Fill the `relative` field of rows sharing one simulation model: each PMSE
// divided by the mean PMSE over the rows.
void relative_pmse(std::span<PmseRow> rows);

// Full protocol: every method of the design's panel crossed with the given
// simulation models, with relatives computed per model.
PmseReport run_protocol(const SimDesign& design, std::span<const SimModelKind> models,
                        long trials, std::uint64_t seed, const McConfig& mc = {},
                        int threads = 0);

}  // namespace doetree
