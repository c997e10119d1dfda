#include <doctest.h>

#include <random>

#include "greenpat/error.hpp"
#include "greenpat/novelty.hpp"
#include "oracles.hpp"

using namespace greenpat;

namespace {

DatedDoc dd(const std::string& id, int year, std::vector<std::string> toks) { return {{id, std::move(toks)}, year}; }

}  // namespace

TEST_CASE("gram enumeration for [a,b,c]") {
    auto g = extract_grams({"a", "b", "c"});
    using V = std::vector<std::string>;
    CHECK(g.unigrams == V{"a", "b", "c"});
    CHECK(g.bigrams == V{"a b", "b c"});
    CHECK(g.trigrams == V{"a b c"});
    CHECK(g.pairs == V{"a b", "a c", "b c"});
}

TEST_CASE("pairs are unordered and exclude self pairs") {
    auto g = extract_grams({"b", "a", "b"});
    CHECK(g.pairs == std::vector<std::string>{"a b"});
    CHECK(g.bigrams == std::vector<std::string>{"a b", "b a"});
}

TEST_CASE("baseline: set semantics, cutoff, empty warning") {
    std::vector<DatedDoc> one{dd("A", 1970, {"x", "y"})};
    std::vector<DatedDoc> two{dd("A", 1970, {"x", "y"}), dd("B", 1971, {"x", "y"}), dd("C", 1990, {"z"})};
    CHECK(build_baseline(one).lexicon == build_baseline(two).lexicon);
    auto empty = build_baseline(std::vector<DatedDoc>{});
    CHECK(empty.lexicon.empty());
    CHECK_FALSE(empty.warnings.empty());
}

TEST_CASE("fully known doc has no novelty; one new token adds a unigram, bigram and pair") {
    auto base = build_baseline(std::vector<DatedDoc>{dd("A", 1970, {"x", "y", "z"})}).lexicon;
    auto known = score_novelty(std::vector<DatedDoc>{dd("B", 1990, {"x", "y"})}, base);
    CHECK(known[0].new_unigrams == 0);
    CHECK(known[0].new_pairs == 0);
    CHECK_FALSE(known[0].high_novelty);
    auto fresh = score_novelty(std::vector<DatedDoc>{dd("B", 1990, {"t", "x"})}, base);
    CHECK(fresh[0].new_unigrams == 1);
    CHECK(fresh[0].new_bigrams == 1);
    CHECK(fresh[0].new_trigrams == 0);
    CHECK(fresh[0].new_pairs == 1);
}

TEST_CASE("strict scoring equals a from-scratch rescan") {
    std::mt19937_64 rng(5);
    std::vector<std::vector<std::string>> base_toks, scored_toks;
    std::vector<DatedDoc> base, scored;
    for (int i = 0; i < 10; ++i) {
        std::vector<std::string> t;
        for (int j = 0; j < 6; ++j) t.push_back("w" + std::to_string(rng() % 12));
        base_toks.push_back(t);
        base.push_back(dd("B" + std::to_string(i), 1975, t));
    }
    for (int i = 0; i < 50; ++i) {
        std::vector<std::string> t;
        for (int j = 0; j < 1 + static_cast<int>(rng() % 10); ++j) t.push_back("w" + std::to_string(rng() % 25));
        scored_toks.push_back(t);
        char id[8];
        std::snprintf(id, sizeof id, "P%03d", i);
        scored.push_back(dd(id, 1990 + i / 10, t));
    }
    auto got = score_novelty(scored, build_baseline(base).lexicon);
    auto want = oracle::brute_novelty(base_toks, scored_toks);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        oracle::Counts c{got[i].new_unigrams, got[i].new_bigrams, got[i].new_trigrams, got[i].new_pairs};
        CHECK(c == want[i]);
    }
}

TEST_CASE("out-of-order docs are rejected") {
    NoveltyScorer s(BaselineLexicon{});
    s.score(dd("B", 1990, {"a"}));
    CHECK_THROWS_AS(s.score(dd("A", 1990, {"a"})), ValidationError);
    CHECK_THROWS_AS(s.score(dd("C", 1989, {"a"})), ValidationError);
}

TEST_CASE("year-cohort mode scores a year against the frozen lexicon") {
    std::vector<DatedDoc> docs{dd("A", 1990, {"x"}), dd("B", 1990, {"x"}), dd("C", 1991, {"x"})};
    auto strict = score_novelty(docs, {}, NoveltyMode::Strict);
    auto cohort = score_novelty(docs, {}, NoveltyMode::YearCohort);
    CHECK(strict[1].new_unigrams == 0);
    CHECK(cohort[1].new_unigrams == 1);
    CHECK(cohort[2].new_unigrams == 0);
    CHECK(score_novelty(docs, {}, NoveltyMode::YearCohort, 3) == cohort);
}

TEST_CASE("high-novelty flags") {
    std::vector<NoveltyProfile> p;
    for (int i = 0; i < 10; ++i) p.push_back({"P" + std::to_string(i), 2000, 0, 0, 0, static_cast<std::size_t>(i), false});
    auto q = p;
    flag_high_novelty(q, {HighNoveltyRule::Kind::TopQuantile, 0.2, 1});
    for (const auto& x : q) CHECK(x.high_novelty == (x.new_pairs >= 8));

    auto ties = p;
    for (auto& x : ties) x.new_pairs = 4;
    flag_high_novelty(ties, {HighNoveltyRule::Kind::TopQuantile, 0.25, 1});
    for (const auto& x : ties) CHECK(x.high_novelty);

    auto mn = p;
    flag_high_novelty(mn, {HighNoveltyRule::Kind::MinNewPairs, 0.25, 1});
    for (const auto& x : mn) CHECK(x.high_novelty == (x.new_pairs >= 1));
}

TEST_CASE("type-7 quantile") {
    CHECK(quantile({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, 0.8) == doctest::Approx(7.2));
    CHECK(quantile({5}, 0.3) == 5.0);
    CHECK(quantile({1, 3}, 0.5) == 2.0);
}

TEST_CASE("lexicon round trip") {
    auto base = build_baseline(std::vector<DatedDoc>{dd("A", 1970, {"x", "y", "z"})}).lexicon;
    CHECK(deserialize_lexicon(serialize_lexicon(base)) == base);
    CHECK(serialize_lexicon(deserialize_lexicon(serialize_lexicon(base))) == serialize_lexicon(base));
}
