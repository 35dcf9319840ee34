#include "doetree/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "doetree/errors.hpp"

namespace doetree {

double Factor::code(int level) const {
    if (level < 0 || level >= level_count())
        throw ValidationError("factor '" + name + "': level index out of range");
    switch (kind) {
        case FactorKind::two_level:
            return level == 0 ? -1.0 : 1.0;
        case FactorKind::ordinal:
            return scores[static_cast<std::size_t>(level)];
        case FactorKind::nominal:
            throw ValidationError("factor '" + name + "' is nominal and has no numeric code");
    }
    return 0.0;
}

Factor Factor::two_level_factor(std::string name, std::string low, std::string high) {
    Factor f;
    f.name = std::move(name);
    f.levels = {std::move(low), std::move(high)};
    f.kind = FactorKind::two_level;
    return f;
}

Factor Factor::nominal(std::string name, std::vector<std::string> levels) {
    Factor f;
    f.name = std::move(name);
    f.levels = std::move(levels);
    f.kind = FactorKind::nominal;
    return f;
}

Factor Factor::ordinal(std::string name, std::vector<std::string> levels,
                       std::vector<double> scores) {
    Factor f;
    f.name = std::move(name);
    f.levels = std::move(levels);
    f.scores = std::move(scores);
    f.kind = FactorKind::ordinal;
    if (f.scores.size() != f.levels.size())
        throw ValidationError("ordinal factor '" + f.name + "': one score per level required");
    return f;
}

Dataset Dataset::make(std::vector<Factor> factors, std::vector<DesignPoint> points,
                      std::vector<double> y, std::vector<double> n, ResponseKind kind) {
    Dataset d;
    for (const auto& f : factors) {
        if (f.level_count() < 2)
            throw ValidationError("factor '" + f.name + "' needs at least two levels");
        std::set<std::string> uniq(f.levels.begin(), f.levels.end());
        if (uniq.size() != f.levels.size())
            throw ValidationError("factor '" + f.name + "' has duplicate level labels");
        if (f.kind == FactorKind::two_level && f.level_count() != 2)
            throw ValidationError("factor '" + f.name + "' declared two-level with " +
                                  std::to_string(f.level_count()) + " levels");
    }
    if (points.size() != y.size()) throw ValidationError("dataset: row/response count mismatch");
    if (kind == ResponseKind::proportion && n.size() != y.size())
        throw ValidationError("dataset: proportion responses need a denominator per row");
    if (kind != ResponseKind::proportion && !n.empty())
        throw ValidationError("dataset: denominators only apply to proportion responses");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].codes.size() != factors.size())
            throw ValidationError("dataset: row " + std::to_string(i) + " has wrong arity");
        for (std::size_t j = 0; j < factors.size(); ++j) {
            int lv = points[i].codes[j];
            if (lv < 0 || lv >= factors[j].level_count())
                throw ValidationError("dataset: row " + std::to_string(i) +
                                      " has out-of-range level for factor '" + factors[j].name +
                                      "'");
        }
        if (kind == ResponseKind::count) {
            if (y[i] < 0.0 || y[i] != std::floor(y[i]))
                throw ValidationError("dataset: count responses must be nonnegative integers");
        }
        if (kind == ResponseKind::proportion) {
            if (n[i] <= 0.0 || n[i] != std::floor(n[i]))
                throw ValidationError("dataset: denominators must be positive integers");
            if (y[i] < 0.0 || y[i] > n[i] || y[i] != std::floor(y[i]))
                throw ValidationError("dataset: proportion responses need 0 <= y <= n, integer");
        }
    }
    d.factors_ = std::move(factors);
    d.points_ = std::move(points);
    d.y_ = std::move(y);
    d.n_ = std::move(n);
    d.kind_ = kind;
    return d;
}

bool Dataset::all_two_level() const {
    return std::all_of(factors_.begin(), factors_.end(),
                       [](const Factor& f) { return f.level_count() == 2; });
}

std::optional<int> Dataset::complete_two_level_replicates() const {
    if (!all_two_level() || factors_.empty() || factors_.size() > 16) return std::nullopt;
    const std::size_t cells = std::size_t{1} << factors_.size();
    if (points_.empty() || points_.size() % cells != 0) return std::nullopt;
    std::vector<std::size_t> counts(cells, 0);
    for (const auto& pt : points_) {
        std::size_t idx = 0;
        for (std::size_t j = 0; j < factors_.size(); ++j)
            idx = (idx << 1) | static_cast<std::size_t>(pt.codes[j]);
        ++counts[idx];
    }
    const std::size_t r = points_.size() / cells;
    for (auto c : counts)
        if (c != r) return std::nullopt;
    return static_cast<int>(r);
}

Term::Term(std::initializer_list<int> m) : members(m) {
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
}

Term::Term(std::vector<int> m) : members(std::move(m)) {
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
}

bool Term::contains(const Term& other) const {
    return std::includes(members.begin(), members.end(), other.members.begin(),
                         other.members.end());
}

std::uint32_t Term::mask() const {
    std::uint32_t m = 0;
    for (int f : members) m |= (1u << f);
    return m;
}

bool Term::operator<(const Term& rhs) const {
    if (members.size() != rhs.members.size()) return members.size() < rhs.members.size();
    return members < rhs.members;
}

std::string Term::label(const std::vector<Factor>& factors) const {
    if (members.empty()) return "(Intercept)";
    std::string out;
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (i) out += ":";
        out += factors[static_cast<std::size_t>(members[i])].name;
    }
    return out;
}

Term Term::from_mask(std::uint32_t mask) {
    std::vector<int> m;
    for (int f = 0; f < 32; ++f)
        if (mask & (1u << f)) m.push_back(f);
    return Term(std::move(m));
}

double Polynomial::eval(const std::vector<double>& codes) const {
    double s = 0.0;
    for (const auto& [term, coef] : coefficients) {
        double prod = coef;
        for (int f : term.members) prod *= codes[static_cast<std::size_t>(f)];
        s += prod;
    }
    return s;
}

double Polynomial::eval(const Dataset& data, const DesignPoint& point) const {
    std::vector<double> codes(point.codes.size());
    for (std::size_t j = 0; j < codes.size(); ++j)
        codes[j] = data.factors()[j].code(point.codes[j]);
    return eval(codes);
}

Polynomial& Polynomial::operator+=(const Polynomial& rhs) {
    for (const auto& [term, coef] : rhs.coefficients) coefficients[term] += coef;
    return *this;
}

std::vector<DesignPoint> enumerate_design(int k) {
    if (k < 1 || k > 16) throw ConfigError("enumerate_design: factor count must be in [1, 16]");
    std::vector<DesignPoint> pts;
    const std::size_t total = std::size_t{1} << k;
    pts.reserve(total);
    for (std::size_t i = 0; i < total; ++i) {
        DesignPoint p;
        p.codes.resize(static_cast<std::size_t>(k));
        for (int j = 0; j < k; ++j)
            p.codes[static_cast<std::size_t>(j)] = static_cast<int>((i >> (k - 1 - j)) & 1u);
        pts.push_back(std::move(p));
    }
    return pts;
}

std::vector<Term> all_terms(int k) {
    std::vector<Term> terms;
    terms.reserve(std::size_t{1} << k);
    for (std::uint32_t m = 0; m < (1u << k); ++m) terms.push_back(Term::from_mask(m));
    std::sort(terms.begin(), terms.end());
    return terms;
}

Matrix effect_matrix(const Dataset& data, const std::vector<Term>& terms) {
    for (const auto& t : terms)
        for (int f : t.members)
            if (data.factors()[static_cast<std::size_t>(f)].level_count() != 2)
                throw ValidationError("effect_matrix: term references multi-level factor '" +
                                      data.factors()[static_cast<std::size_t>(f)].name +
                                      "' (use dummy_matrix)");
    Matrix x(data.n_rows(), terms.size());
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
        for (std::size_t j = 0; j < terms.size(); ++j) {
            double prod = 1.0;
            for (int f : terms[j].members)
                prod *= (data.level_of(i, static_cast<std::size_t>(f)) == 0) ? -1.0 : 1.0;
            x(i, j) = prod;
        }
    }
    return x;
}

namespace {

// Non-reference levels of a factor in alphabetical label order; the
// alphabetically first level is the set-to-zero reference.
std::vector<int> dummy_levels(const Factor& f) {
    std::vector<int> order(static_cast<std::size_t>(f.level_count()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return f.levels[static_cast<std::size_t>(a)] < f.levels[static_cast<std::size_t>(b)];
    });
    return {order.begin() + 1, order.end()};
}

}  // namespace

DummyMatrix dummy_matrix(const Dataset& data, const std::vector<Term>& terms) {
    // Column specs: per term, the cartesian product of member factors'
    // non-reference levels, last member varying fastest.
    struct Col {
        std::vector<std::pair<int, int>> parts;  // (factor, level)
        std::string label;
    };
    std::vector<Col> cols;
    for (const auto& t : terms) {
        if (t.members.empty()) {
            cols.push_back({{}, "(Intercept)"});
            continue;
        }
        std::vector<std::vector<int>> lv;
        for (int f : t.members) lv.push_back(dummy_levels(data.factors()[static_cast<std::size_t>(f)]));
        std::vector<std::size_t> idx(t.members.size(), 0);
        bool done = false;
        while (!done) {
            Col c;
            for (std::size_t m = 0; m < t.members.size(); ++m) {
                int f = t.members[m];
                int level = lv[m][idx[m]];
                c.parts.emplace_back(f, level);
                if (!c.label.empty()) c.label += ":";
                c.label += data.factors()[static_cast<std::size_t>(f)].name +
                           data.factors()[static_cast<std::size_t>(f)].levels[static_cast<std::size_t>(level)];
            }
            cols.push_back(std::move(c));
            // odometer increment, last member varies fastest
            std::size_t m = t.members.size();
            while (m > 0 && ++idx[m - 1] == lv[m - 1].size()) {
                idx[m - 1] = 0;
                --m;
            }
            if (m == 0) done = true;
        }
    }

    DummyMatrix out;
    out.x = Matrix(data.n_rows(), cols.size());
    for (auto& c : cols) out.labels.push_back(c.label);
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            double v = 1.0;
            for (auto [f, level] : cols[j].parts)
                if (data.level_of(i, static_cast<std::size_t>(f)) != level) v = 0.0;
            out.x(i, j) = v;
        }
    }
    return out;
}

}  // namespace doetree
