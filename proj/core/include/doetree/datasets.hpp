// Built-in datasets: published factorial studies, embedded directly or
// reconstructed from their published summary statistics, plus one synthetic
// shape-mimic. Used by the tests and exposed through the CLI.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "doetree/classic.hpp"
#include "doetree/design.hpp"

namespace doetree {

struct NamedDataset {
    std::string id;
    std::string provenance;
    Dataset data;
};

// Seed germination counts out of 100: 2 germination temperatures x 3 moisture
// levels x 3 storage temperatures (Collett, Modelling Binary Data, 1991).
NamedDataset seed_germination();

// Epitaxial-layer growth 2^4 experiment, six replicates (Wu & Hamada,
// Experiments, 2000). Cell means are the published saturated-fit values; the
// within-cell residuals are synthetic zero-sum patterns scaled so the
// saturated refit reproduces the published coefficients and standard error
// exactly. seed 0 uses a fixed balanced pattern; other seeds draw a random
// zero-sum pattern with the same residual sum of squares.
NamedDataset wafer_reconstruction(std::uint64_t seed = 0);

// Unreplicated 2^5 reactor study (Box, Hunter & Hunter, Statistics for
// Experimenters). The five large effects are the published ones; the
// remaining 26 effects are synthetic stand-ins (the raw data are not
// reproduced here), so the response values are a reconstruction.
NamedDataset reactor_reconstruction();

// Published effect table of the reactor reconstruction (convenience).
EffectTable reactor_effects();

// Synthetic wave-soldering shape mimic: complete 3x2x4x10x3 design (720 runs)
// with Poisson counts from a documented loglinear generator with
// Opening/Solder/Mask interactions. effect_scale 0 collapses the generator to
// unit-rate Poisson noise.
NamedDataset synthetic_solder(std::uint64_t seed, double effect_scale = 1.0);

// Registry for the CLI.
std::vector<std::string> dataset_ids();
NamedDataset get_dataset(const std::string& id, std::uint64_t seed = 0);

}  // namespace doetree
