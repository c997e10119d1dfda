#include <doctest.h>

#include <cmath>
#include <array>
#include <map>

#include "greenpat/analytics.hpp"
#include "greenpat/error.hpp"

using namespace greenpat;

namespace {

PatentRecord pat(const std::string& id, std::vector<std::string> codes, bool green, std::optional<int> grant = 2015,
                 std::optional<std::int64_t> cites = 0) {
    PatentRecord p;
    p.patent_id = id;
    p.family_id = "F" + id;
    p.cpc_codes = std::move(codes);
    p.baseline_green = green;
    p.priority_year = grant ? std::optional<int>(*grant - 2) : std::nullopt;
    p.grant_year = grant;
    p.citation_count = cites;
    return p;
}

}  // namespace

TEST_CASE("multiple counting across classes") {
    std::vector<PatentRecord> p{pat("1", {"Y02E 10/50", "H01L 31/04"}, true)};
    auto c = class_counts(p, {true}, 3);
    REQUIRE(c.size() == 2);
    CHECK(c[0].class_code == "H01");
    CHECK(c[1].class_code == "Y02");
    for (const auto& x : c) CHECK((x.n_total == 1 && x.n_green == 1 && x.n_true_green == 1));
    CHECK(class_counts({}, {}, 3).empty());
}

TEST_CASE("class counts equal a hand tally of ten patents") {
    std::vector<PatentRecord> p{
        pat("1", {"Y02E 10/50"}, true),          pat("2", {"Y02E 20/10", "Y02W 30/00"}, true),
        pat("3", {"H01L 31/04"}, false),         pat("4", {"H01M 8/00", "Y02E 60/50"}, true),
        pat("5", {"B01J 37/02"}, true),          pat("6", {"B01D 53/86", "B01J 21/18"}, true),
        pat("7", {"h01l 33/00"}, false),         pat("8", {"C10L 3/00", "Y02E 50/30"}, true),
        pat("9", {"C10L 1/02"}, false),          pat("10", {"F03D 1/06", "Y02E 10/72"}, true),
    };
    std::vector<bool> tg{true, true, false, true, false, false, false, true, false, false};
    // hand tally: class -> {patents, green, true green}
    std::map<std::string, std::array<std::size_t, 3>> want{
        {"B01", {2, 2, 0}}, {"C10", {2, 1, 1}}, {"F03", {1, 1, 0}}, {"H01", {3, 1, 1}}, {"Y02", {5, 5, 4}}};
    auto got = class_counts(p, tg, 3);
    REQUIRE(got.size() == want.size());
    for (const auto& c : got) {
        auto w = want.at(c.class_code);
        CHECK(c.n_total == w[0]);
        CHECK(c.n_green == w[1]);
        CHECK(c.n_true_green == w[2]);
    }
    auto sections = class_counts(p, tg, 1);
    CHECK(sections.size() == 5);
}

TEST_CASE("RCA worked example and symmetry") {
    // A: G=2, N=8. Rest pooled: G=10, N=90 split over two classes.
    std::vector<ClassCounts> c{{"A", 10, 0, 2}, {"B", 50, 0, 5}, {"C", 50, 0, 5}};
    auto r = rca_index(c, RcaBasis::TrueGreen);
    REQUIRE(r[0].rca.has_value());
    CHECK(std::abs(*r[0].rca - 2.25) < 1e-9);

    std::vector<ClassCounts> sym{{"A", 10, 0, 2}, {"B", 20, 0, 4}, {"C", 50, 0, 10}};
    for (const auto& x : rca_index(sym)) CHECK(std::abs(*x.rca - 1.0) < 1e-9);

    std::vector<ClassCounts> zero{{"A", 10, 0, 0}, {"B", 10, 0, 5}};
    CHECK(*rca_index(zero)[0].rca == 0.0);

    std::vector<ClassCounts> allg{{"A", 3, 0, 3}, {"B", 10, 0, 5}};
    CHECK_FALSE(rca_index(allg)[0].rca.has_value());
}

TEST_CASE("RCA on the green basis uses baseline greens") {
    std::vector<ClassCounts> c{{"A", 10, 2, 0}, {"B", 50, 5, 0}, {"C", 50, 5, 0}};
    CHECK(std::abs(*rca_index(c, RcaBasis::Green)[0].rca - 2.25) < 1e-9);
}

TEST_CASE("shares over time") {
    std::vector<PatentRecord> p;
    std::vector<bool> tg;
    for (int i = 0; i < 100; ++i) {
        p.push_back(pat("A" + std::to_string(i), {"Y02E"}, i < 12, 2018));
        tg.push_back(i < 3);
    }
    p.push_back(pat("U", {"Y02E"}, true, std::nullopt));
    tg.push_back(true);
    p.push_back(pat("L", {"Y02E"}, false, 2020));
    tg.push_back(false);
    auto rows = share_over_time(p, tg);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].year == 2018);
    CHECK(rows[0].n_granted == 100);
    CHECK(rows[0].share_green == doctest::Approx(0.12).epsilon(1e-15));
    CHECK(rows[0].share_true_green == doctest::Approx(0.03).epsilon(1e-15));
    CHECK(rows[1].year == 2020);
}

TEST_CASE("citation design") {
    std::vector<PatentRecord> p{pat("1", {"Y02E 10/50"}, true, 2015, 0), pat("2", {"H01L"}, false, 2017, 99),
                                pat("3", {"H01L"}, false, 2016, std::nullopt), pat("4", {}, false, 2016, 3)};
    auto d = citation_design(p, {true, false, false, false});
    CHECK(d.design.rows() == 2);
    CHECK(d.dropped_missing_citations == 1);
    CHECK(d.dropped_missing_class == 1);
    CHECK(d.reference_year == 2017);
    CHECK(d.design.y(0) == 0.0);
    CHECK(std::abs(d.design.y(1) - 4.60517) < 1e-5);
    CHECK(std::abs(d.design.y(1) - std::log(100.0)) < 1e-9);
    CHECK(d.design.names == std::vector<std::string>{"true_green", "age", "family_size"});
    CHECK(d.design.X(0, 1) == 2.0);
    CHECK(d.design.group_labels[0] == "Y02*2013");
    CHECK(d.design.cluster_labels[0] == "F1");
}

TEST_CASE("csv writers") {
    std::vector<ClassCounts> c{{"A", 4, 2, 1}, {"B", 3, 0, 0}};
    CHECK(class_counts_to_csv(c) ==
          "class_code,patents,green_patents,true_green_patents,true_green_pct\nA,4,2,1,50\nB,3,0,0,\n");
    CHECK(density_to_csv(c) == "class_code,share\nA,0.5\n");
    CHECK(rca_to_csv(std::vector<ClassCounts>{}) == "class_code,rca_green,rca_true_green\n");
}
