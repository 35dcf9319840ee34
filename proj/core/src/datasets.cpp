#include "doetree/datasets.hpp"

#include <algorithm>
#include <cmath>

#include "doetree/errors.hpp"
#include "doetree/rng.hpp"

namespace doetree {

namespace {

// Saturated coefficients of the wafer experiment (published fit; +/-1 coding,
// factor order x1..x4). Standard error 0.049744 on 96 observations.
struct WaferCoef {
    std::uint32_t mask;
    double value;
};
constexpr WaferCoef kWaferCoefs[] = {
    {0b0000, 14.161250}, {0b0001, -0.038729}, {0b0010, 0.086271},  {0b0100, -0.038708},
    {0b1000, 0.245021},  {0b0011, 0.003708},  {0b0101, -0.046229}, {0b1001, -0.025000},
    {0b0110, 0.028771},  {0b1010, -0.015042}, {0b1100, -0.172521}, {0b0111, 0.048750},
    {0b1011, 0.012521},  {0b1101, -0.015000}, {0b1110, 0.054958},  {0b1111, 0.009979},
};
constexpr double kWaferSe = 0.049744;

// Reactor 2^5 effects on the coefficient (half-effect) scale. The intercept
// and the five large effects (B, D, E, BD, DE) are the published values; the
// rest are synthetic placeholders consistent with them.
struct ReactorCoef {
    const char* term;  // factor letters
    double value;
};
constexpr ReactorCoef kReactorCoefs[] = {
    {"", 65.5},       {"A", -1.25},    {"B", 9.75},      {"C", 0.62},     {"D", 5.375},
    {"E", -3.125},    {"AB", 0.70},    {"AC", -0.38},    {"AD", 0.88},    {"AE", 0.12},
    {"BC", 0.42},     {"BD", 6.625},   {"BE", 1.40},     {"CD", 1.12},    {"CE", 0.48},
    {"DE", -5.5},     {"ABC", 0.74},   {"ABD", 0.52},    {"ABE", -0.92},  {"ACD", -0.28},
    {"ACE", -1.32},   {"ADE", 0.32},   {"BCD", 0.78},    {"BCE", -0.58},  {"BDE", -0.18},
    {"CDE", 0.08},    {"ABCD", 0.76},  {"ABCE", 0.22},   {"ABDE", 1.05},  {"ACDE", -0.82},
    {"BCDE", -1.18},  {"ABCDE", -0.98},
};

double term_sign(const DesignPoint& pt, std::uint32_t mask) {
    double s = 1.0;
    for (int f = 0; f < 16; ++f)
        if (mask & (1u << f)) s *= pt.codes[static_cast<std::size_t>(f)] == 0 ? -1.0 : 1.0;
    return s;
}

int poisson_draw(double rate, Rng& rng) {
    // Knuth multiplication; rates here stay below ~50.
    double limit = std::exp(-rate);
    int k = 0;
    double prod = 1.0;
    for (;;) {
        prod *= rng.uniform();
        if (prod <= limit) return k;
        ++k;
        if (k > 10000) throw NumericError("poisson_draw: rate too large");
    }
}

}  // namespace

NamedDataset seed_germination() {
    // Germination counts by (germination temp, storage temp, moisture).
    std::vector<Factor> factors = {
        Factor::two_level_factor("germ", "11", "21"),
        Factor::ordinal("store", {"21", "42", "62"}, {21.0, 42.0, 62.0}),
        Factor::nominal("moist", {"low", "med", "high"}),
    };
    // y[germ][moist][store], moisture rows in low/med/high order
    const int counts[2][3][3] = {
        {{98, 96, 62}, {94, 79, 3}, {92, 41, 1}},
        {{94, 93, 65}, {94, 71, 2}, {91, 30, 1}},
    };
    std::vector<DesignPoint> points;
    std::vector<double> y, n;
    for (int g = 0; g < 2; ++g)
        for (int m = 0; m < 3; ++m)
            for (int s = 0; s < 3; ++s) {
                points.push_back(DesignPoint{{g, s, m}});
                y.push_back(counts[g][m][s]);
                n.push_back(100.0);
            }
    NamedDataset out;
    out.id = "seed-germination";
    out.provenance =
        "Seed germination counts out of 100 (2x3x3 factorial), from Collett, "
        "Modelling Binary Data (1991).";
    out.data = Dataset::make(std::move(factors), std::move(points), std::move(y), std::move(n),
                             ResponseKind::proportion);
    return out;
}

NamedDataset wafer_reconstruction(std::uint64_t seed) {
    std::vector<Factor> factors;
    for (int j = 1; j <= 4; ++j)
        factors.push_back(Factor::two_level_factor("x" + std::to_string(j), "-", "+"));

    const double s = kWaferSe * std::sqrt(96.0);  // residual SD of the published fit
    // Fixed zero-sum pattern with per-cell sum of squares 5 s^2, so that the
    // saturated refit reproduces the published coefficients and SE exactly.
    const double base[6] = {-5.0, -3.0, -1.0, 1.0, 3.0, 5.0};
    const double norm = s * std::sqrt(5.0 / 6.0) / std::sqrt(70.0 / 6.0);

    Rng rng(seed, 0xAFE7ull);
    std::vector<DesignPoint> points;
    std::vector<double> y;
    auto design = enumerate_design(4);
    for (std::size_t cell = 0; cell < design.size(); ++cell) {
        double mu = 0.0;
        for (const auto& c : kWaferCoefs) mu += c.value * term_sign(design[cell], c.mask);
        double pat[6];
        if (seed == 0) {
            for (int r = 0; r < 6; ++r) pat[r] = norm * base[r];
        } else {
            // random zero-sum pattern rescaled to the same sum of squares
            double mean = 0.0;
            for (int r = 0; r < 6; ++r) {
                pat[r] = rng.normal();
                mean += pat[r];
            }
            mean /= 6.0;
            double ss = 0.0;
            for (int r = 0; r < 6; ++r) {
                pat[r] -= mean;
                ss += pat[r] * pat[r];
            }
            double scale = std::sqrt(5.0 * s * s / ss);
            for (int r = 0; r < 6; ++r) pat[r] *= scale;
        }
        for (int r = 0; r < 6; ++r) {
            points.push_back(design[cell]);
            y.push_back(mu + pat[r]);
        }
    }
    NamedDataset out;
    out.id = "wafer";
    out.provenance =
        "Epitaxial-layer growth 2^4 experiment, six replicates (Wu & Hamada, Experiments, "
        "2000). Cell means reconstructed from the published saturated fit; within-cell "
        "residuals are synthetic zero-sum patterns carrying the published residual SD.";
    out.data = Dataset::make(std::move(factors), std::move(points), std::move(y));
    return out;
}

NamedDataset reactor_reconstruction() {
    std::vector<Factor> factors;
    for (char c = 'A'; c <= 'E'; ++c)
        factors.push_back(Factor::two_level_factor(std::string(1, c), "-", "+"));

    auto design = enumerate_design(5);
    std::vector<double> y(design.size(), 0.0);
    for (const auto& coef : kReactorCoefs) {
        std::uint32_t mask = 0;
        for (const char* p = coef.term; *p; ++p) mask |= 1u << (*p - 'A');
        for (std::size_t i = 0; i < design.size(); ++i)
            y[i] += coef.value * term_sign(design[i], mask);
    }
    NamedDataset out;
    out.id = "reactor";
    out.provenance =
        "Unreplicated 2^5 reactor study (Box, Hunter & Hunter, Statistics for "
        "Experimenters). The intercept and the five large effects are the published values; "
        "the 26 small effects are synthetic stand-ins, so the responses are a "
        "reconstruction, not the original measurements.";
    out.data = Dataset::make(std::move(factors), design, std::move(y));
    return out;
}

EffectTable reactor_effects() {
    return estimate_effects(reactor_reconstruction().data);
}

NamedDataset synthetic_solder(std::uint64_t seed, double effect_scale) {
    std::vector<Factor> factors = {
        Factor::nominal("opening", {"small", "medium", "large"}),
        Factor::two_level_factor("solder", {"thick"}, {"thin"}),
        Factor::nominal("mask", {"A1.5", "A3", "B3", "B6"}),
        Factor::nominal("pad", {"D4", "D6", "D7", "L4", "L6", "L7", "L8", "L9", "W4", "W9"}),
        Factor::nominal("panel", {"1", "2", "3"}),
    };

    // Documented loglinear generator. Main effects for every factor plus
    // opening:solder, opening:mask, and solder:mask interactions.
    const double intercept = 0.3;
    const double opening_eff[3] = {0.9, 0.2, -0.5};                   // small, medium, large
    const double solder_eff[2] = {-0.4, 0.4};                        // thick, thin
    const double mask_eff[4] = {-0.5, -0.1, 0.4, 0.9};               // A1.5, A3, B3, B6
    const double pad_eff[10] = {0.1, -0.1, 0.0, 0.3, -0.3, -0.2, 0.05, -0.4, 0.15, -0.5};
    const double panel_eff[3] = {-0.1, 0.1, 0.0};
    auto open_solder = [&](int o, int s2) {
        if (o == 0 && s2 == 1) return 0.25;   // small opening, thin solder
        if (o == 2 && s2 == 1) return -0.15;  // large opening, thin solder
        return 0.0;
    };
    auto open_mask = [&](int o, int mk) {
        if (o == 0 && mk == 3) return 0.20;   // small opening, B6 mask
        if (o == 2 && mk == 3) return -0.20;  // large opening, B6 mask
        return 0.0;
    };
    auto solder_mask = [&](int s2, int mk) {
        if (s2 == 1 && mk == 3) return 0.25;  // thin solder, B6 mask
        if (s2 == 1 && mk == 0) return -0.10; // thin solder, A1.5 mask
        return 0.0;
    };

    Rng rng(seed, 0x501Dull);
    std::vector<DesignPoint> points;
    std::vector<double> y;
    for (int o = 0; o < 3; ++o)
        for (int s2 = 0; s2 < 2; ++s2)
            for (int mk = 0; mk < 4; ++mk)
                for (int pd = 0; pd < 10; ++pd)
                    for (int pn = 0; pn < 3; ++pn) {
                        double eta = intercept + opening_eff[o] + solder_eff[s2] + mask_eff[mk] +
                                     pad_eff[pd] + panel_eff[pn] + open_solder(o, s2) +
                                     open_mask(o, mk) + solder_mask(s2, mk);
                        double rate = std::exp(effect_scale * eta);
                        points.push_back(DesignPoint{{o, s2, mk, pd, pn}});
                        y.push_back(poisson_draw(rate, rng));
                    }
    NamedDataset out;
    out.id = "solder-synthetic";
    out.provenance =
        "Synthetic shape mimic of the 3x2x4x10x3 wave-soldering study (Comizzoli, Landwehr "
        "& Sinclair, 1990): same factors and 720-run layout, responses drawn from a "
        "documented Poisson loglinear generator, NOT the original data.";
    out.data = Dataset::make(std::move(factors), std::move(points), std::move(y), {},
                             ResponseKind::count);
    return out;
}

std::vector<std::string> dataset_ids() {
    return {"seed-germination", "wafer", "reactor", "solder-synthetic"};
}

NamedDataset get_dataset(const std::string& id, std::uint64_t seed) {
    if (id == "seed-germination") return seed_germination();
    if (id == "wafer") return wafer_reconstruction(seed);
    if (id == "reactor") return reactor_reconstruction();
    if (id == "solder-synthetic") return synthetic_solder(seed);
    throw ConfigError("unknown dataset '" + id + "'");
}

}  // namespace doetree
