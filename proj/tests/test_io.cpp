#include <doctest.h>

#include <cmath>
#include <sstream>

#include "doetree/classic.hpp"
#include "doetree/datasets.hpp"
#include "doetree/errors.hpp"
#include "doetree/io.hpp"
#include "doetree/tree.hpp"

using namespace doetree;

TEST_CASE("csv round-trip of the seed germination table") {
    auto ds = seed_germination();
    std::ostringstream out;
    write_csv(out, ds.data);

    CsvSchema schema;
    schema.response_kind = ResponseKind::proportion;
    schema.n_column = "n";
    schema.ordinal_scores["store"] = {21, 42, 62};
    std::istringstream in(out.str());
    Dataset parsed = parse_csv(in, schema);
    REQUIRE(parsed.n_rows() == 18);
    REQUIRE(parsed.n_factors() == 3);
    for (std::size_t i = 0; i < 18; ++i) {
        CHECK(parsed.y()[i] == ds.data.y()[i]);
        CHECK(parsed.trials()[i] == ds.data.trials()[i]);
        for (std::size_t f = 0; f < 3; ++f)
            CHECK(parsed.level_of(i, f) == ds.data.level_of(i, f));
    }
    CHECK(parsed.factors()[1].kind == FactorKind::ordinal);
}

TEST_CASE("csv parses the wafer export with the expected shape") {
    auto wafer = wafer_reconstruction();
    std::ostringstream out;
    write_csv(out, wafer.data);
    std::istringstream in(out.str());
    Dataset parsed = parse_csv(in, CsvSchema{});
    CHECK(parsed.n_rows() == 96);
    CHECK(parsed.n_factors() == 4);
    CHECK(parsed.complete_two_level_replicates() == 6);
    // values survive the 17-digit round trip exactly
    for (std::size_t i = 0; i < parsed.n_rows(); ++i)
        CHECK(parsed.y()[i] == wafer.data.y()[i]);
}

TEST_CASE("csv validation errors") {
    CsvSchema schema;
    schema.response_kind = ResponseKind::proportion;
    schema.n_column = "n";
    std::istringstream bad1("a,y,n\nu,101,100\n");
    CHECK_THROWS_AS(parse_csv(bad1, schema), ValidationError);

    std::istringstream bad2("a,y\nu,\n");
    CHECK_THROWS_AS(parse_csv(bad2, CsvSchema{}), ValidationError);

    std::istringstream bad3("a,y\nu,1\nv\n");
    CHECK_THROWS_AS(parse_csv(bad3, CsvSchema{}), ValidationError);

    CsvSchema counts;
    counts.response_kind = ResponseKind::count;
    std::istringstream bad4("a,y\nu,2.5\nv,1\n");
    CHECK_THROWS_AS(parse_csv(bad4, counts), ValidationError);
}

TEST_CASE("tree text rendering lists conditions and leaf equations") {
    Dataset wafer = wafer_reconstruction().data;
    TreeConfig cfg;
    cfg.kind = NodeModelKind::constant;
    cfg.seed = 3;
    Tree t = grow_tree(wafer, cfg);
    std::string text = render_tree_text(t);
    // the root condition shows the low level of the split factor
    CHECK(text.find("node 1: x4 = -") != std::string::npos);
    CHECK(text.find("yhat = ") != std::string::npos);
}

TEST_CASE("root-only trees render as a single leaf block") {
    Tree solo = make_tree({Factor::two_level_factor("x1", "-", "+")}, make_leaf(2.5));
    solo.root->model.n_rows = 8;
    solo.root->model.mean = 2.5;
    std::string text = render_tree_text(solo);
    CHECK(text.find("leaves=1") != std::string::npos);
    CHECK(text.find("leaf 1: n=8") != std::string::npos);
    CHECK(text.find("node") == std::string::npos);
}

TEST_CASE("tree json round-trip preserves predictions exactly") {
    Dataset wafer = wafer_reconstruction().data;
    for (NodeModelKind kind : {NodeModelKind::constant, NodeModelKind::best_simple}) {
        TreeConfig cfg;
        cfg.kind = kind;
        cfg.seed = 9;
        Tree t = grow_tree(wafer, cfg);
        Tree back = tree_from_json(render_tree_json(t));
        for (const auto& pt : enumerate_design(4))
            CHECK(predict(back, pt) == predict(t, pt));
    }

    // binomial tree with an ordinal regressor
    auto seed = seed_germination();
    TreeConfig cfg;
    cfg.kind = NodeModelKind::best_simple;
    cfg.family = Family::binomial();
    cfg.seed = 4;
    Tree t = grow_tree(seed.data, cfg);
    Tree back = tree_from_json(render_tree_json(t));
    for (const auto& pt : seed.data.points()) CHECK(predict(back, pt) == predict(t, pt));
}

TEST_CASE("half-normal plot data for the wafer table") {
    EffectTable table = estimate_effects(wafer_reconstruction().data);
    std::string csv = emit_half_normal(table, wafer_reconstruction().data.factors());
    // 15 data rows; the last two are x4 and x3:x4
    std::istringstream in(csv);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 17);  // comment + header + 15 rows
    CHECK(lines[0].rfind("#", 0) == 0);
    CHECK(lines[16].find("x4") != std::string::npos);
    CHECK(lines[16].find("x3:x4") == std::string::npos);
    CHECK(lines[15].find("x3:x4") != std::string::npos);
}

TEST_CASE("relative pmse csv carries equal relatives for equal methods") {
    PmseReport report;
    report.design = {4, 6};
    report.trials = 10;
    PmseRow a;
    a.method = SimMethod::ier;
    a.model = SimModelKind::unif;
    a.pmse = 2.0;
    PmseRow b = a;
    b.method = SimMethod::eer;
    report.rows = {a, b};
    relative_pmse(report.rows);
    std::string csv = emit_relative_pmse(report);
    CHECK(csv.find("unif,ier,2,") != std::string::npos);
    std::size_t first = csv.find(",1,");
    CHECK(first != std::string::npos);
    CHECK(csv.find(",1,", first + 1) != std::string::npos);
}

TEST_CASE("fitted-vs-x emits one line per leaf of a simple-linear tree") {
    auto lo = make_leaf(60.125, {{1, 3.125}});
    auto hi = make_leaf(70.875, {{1, 16.375}});
    Tree t = make_tree(
        {Factor::two_level_factor("x1", "-", "+"), Factor::two_level_factor("x2", "-", "+"),
         Factor::two_level_factor("x3", "-", "+"), Factor::two_level_factor("x4", "-", "+")},
        make_split(3, std::move(lo), std::move(hi)));
    std::string csv = emit_fitted_vs_x(t);
    std::istringstream in(csv);
    std::string line;
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#' && line.rfind("leaf,", 0) != 0) ++rows;
    CHECK(rows == 2);
    CHECK(csv.find("x2") != std::string::npos);
}

TEST_CASE("number formatting uses six significant digits") {
    CHECK(format_number(14.161250001) == "14.1613");
    CHECK(format_number(0.049744) == "0.049744");
    CHECK(format_number(-0.17252123) == "-0.172521");
}
