// Factors, design points, datasets, factorial terms, and coding matrices.
//
// Everything here is immutable after construction and safe to share across
// threads. Two-level factors code their first listed level as -1 and the
// second as +1; ordinal factors carry explicit numeric scores per level.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "doetree/linalg.hpp"

namespace doetree {

enum class FactorKind { two_level, nominal, ordinal };

struct Factor {
    std::string name;
    std::vector<std::string> levels;
    FactorKind kind = FactorKind::two_level;
    std::vector<double> scores;  // ordinal only; one numeric score per level

    int level_count() const { return static_cast<int>(levels.size()); }

    // Numeric code of a level: -1/+1 for two-level, the score for ordinal.
    // Nominal factors have no single-column coding.
    double code(int level) const;
    bool numeric_codable() const { return kind != FactorKind::nominal; }

    static Factor two_level_factor(std::string name, std::string low, std::string high);
    static Factor nominal(std::string name, std::vector<std::string> levels);
    static Factor ordinal(std::string name, std::vector<std::string> levels,
                          std::vector<double> scores);
};

struct DesignPoint {
    std::vector<int> codes;  // level index per factor

    bool operator==(const DesignPoint&) const = default;
};

enum class ResponseKind { gaussian, count, proportion };

// Rows are stored individually (not as cell means) so replicated and
// unreplicated designs share one representation.
class Dataset {
  public:
    static Dataset make(std::vector<Factor> factors, std::vector<DesignPoint> points,
                        std::vector<double> y, std::vector<double> n = {},
                        ResponseKind kind = ResponseKind::gaussian);

    const std::vector<Factor>& factors() const { return factors_; }
    const std::vector<DesignPoint>& points() const { return points_; }
    const std::vector<double>& y() const { return y_; }
    const std::vector<double>& trials() const { return n_; }  // binomial denominators
    ResponseKind response_kind() const { return kind_; }

    std::size_t n_rows() const { return points_.size(); }
    std::size_t n_factors() const { return factors_.size(); }
    int level_of(std::size_t row, std::size_t factor) const {
        return points_[row].codes[factor];
    }
    double code(std::size_t row, std::size_t factor) const {
        return factors_[factor].code(points_[row].codes[factor]);
    }

    bool all_two_level() const;
    // Replicate count if this is a complete two-level factorial with an equal
    // number of rows per design point; nullopt otherwise.
    std::optional<int> complete_two_level_replicates() const;

  private:
    std::vector<Factor> factors_;
    std::vector<DesignPoint> points_;
    std::vector<double> y_;
    std::vector<double> n_;
    ResponseKind kind_ = ResponseKind::gaussian;
};

// A model term: a set of factor indices; the empty set is the intercept.
struct Term {
    std::vector<int> members;  // sorted, unique

    Term() = default;
    Term(std::initializer_list<int> m);
    explicit Term(std::vector<int> m);

    int order() const { return static_cast<int>(members.size()); }
    bool contains(const Term& other) const;  // other subset of this
    std::uint32_t mask() const;              // bitmask form (factors < 32)

    // Order by (order, lexicographic members): Table-1-style listing.
    bool operator<(const Term& rhs) const;
    bool operator==(const Term& rhs) const = default;

    std::string label(const std::vector<Factor>& factors) const;
    static Term from_mask(std::uint32_t mask);
};

// Polynomial on the +/-1 cube: map from Term to coefficient.
struct Polynomial {
    std::map<Term, double> coefficients;

    double eval(const std::vector<double>& codes) const;
    double eval(const Dataset& data, const DesignPoint& point) const;
    Polynomial& operator+=(const Polynomial& rhs);
};

// All 2^k points of a two-level design in lexicographic code order.
std::vector<DesignPoint> enumerate_design(int k);

// All 2^k terms (intercept first, then by order/lexicographic members).
std::vector<Term> all_terms(int k);

// Contrast matrix: entry (i, j) = product of +/-1 codes of row i over the
// factors of term j; the intercept term yields 1. Two-level factors only.
Matrix effect_matrix(const Dataset& data, const std::vector<Term>& terms);

// Set-to-zero dummy coding: each factor contributes (levels - 1) indicator
// columns with the alphabetically first level as the omitted reference;
// interaction terms contribute products of their component columns.
struct DummyMatrix {
    Matrix x;
    std::vector<std::string> labels;
};
DummyMatrix dummy_matrix(const Dataset& data, const std::vector<Term>& terms);

}  // namespace doetree
