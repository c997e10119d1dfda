#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "greenpat/embedding.hpp"
#include "greenpat/error.hpp"
#include "greenpat/textio.hpp"

using namespace greenpat;
namespace fs = std::filesystem;

namespace {

std::vector<ProcessedDoc> docs_of(std::initializer_list<std::vector<std::string>> toks) {
    std::vector<ProcessedDoc> out;
    int i = 0;
    for (const auto& t : toks) out.push_back({"D" + std::to_string(i++), t});
    return out;
}

CbowModel random_model(std::size_t V, std::size_t d, std::uint64_t seed) {
    std::vector<std::pair<std::string, std::uint64_t>> counts;
    for (std::size_t i = 0; i < V; ++i) counts.push_back({"w" + std::to_string(i), V - i});
    TrainConfig cfg;
    cfg.d = d;
    cfg.min_count = 1;
    cfg.seed = seed;
    auto m = init_model(vocab_from_counts(counts, 1), cfg);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0, 1);
    for (Eigen::Index i = 0; i < m.w_in.size(); ++i) m.w_in.data()[i] = N(rng);
    for (Eigen::Index i = 0; i < m.w_out.size(); ++i) m.w_out.data()[i] = N(rng);
    return m;
}

}  // namespace

TEST_CASE("vocabulary thresholds") {
    auto docs = docs_of({{"solar", "solar", "wind"}});
    auto v2 = build_vocab(docs, 2);
    CHECK(v2.words == std::vector<std::string>{"solar"});
    auto v1 = build_vocab(docs, 1);
    CHECK(v1.words == std::vector<std::string>{"solar", "wind"});
    CHECK(v1.counts == std::vector<std::uint64_t>{2, 1});
    CHECK_THROWS_AS(build_vocab(docs, 3), ValidationError);
}

TEST_CASE("forward pass: context mean") {
    auto m = random_model(4, 3, 7);
    std::vector<std::uint32_t> one{2};
    auto f = cbow_forward(m, one);
    for (int j = 0; j < 3; ++j) CHECK(f.h(j) == m.w_in(2, j));
    std::vector<std::uint32_t> twice{2, 2};
    CHECK((cbow_forward(m, twice).h - f.h).norm() == 0.0);
    m.w_in.setZero();
    auto z = cbow_forward(m, one);
    CHECK(z.scores.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("make_examples truncates windows at document edges") {
    auto docs = docs_of({{"a", "b", "c", "oov"}});
    auto v = build_vocab(docs, 1);
    v = vocab_from_counts({{"a", 1}, {"b", 1}, {"c", 1}}, 1);
    auto ex = make_examples(docs[0], v, 1);
    REQUIRE(ex.size() == 3);
    CHECK(ex[0].context.size() == 1);
    CHECK(ex[1].context.size() == 2);
    CHECK(ex[2].context.size() == 1);
}

TEST_CASE("analytic gradient agrees with central differences on a V=5, d=3 model") {
    auto m = random_model(5, 3, 11);
    std::vector<CbowExample> ex{{0, {1, 2}}, {3, {4}}, {2, {0, 1, 3}}, {4, {2, 2}}};
    auto g = loss_gradient(m, ex);
    const double eps = 1e-4;
    double worst = 0;
    auto check = [&](double& param, double analytic) {
        double keep = param;
        param = keep + eps;
        double up = corpus_loss(m, ex);
        param = keep - eps;
        double dn = corpus_loss(m, ex);
        param = keep;
        double fd = (up - dn) / (2 * eps);
        worst = std::max(worst, std::abs(fd - analytic) / std::max(1e-8, std::abs(fd) + std::abs(analytic)));
    };
    for (Eigen::Index i = 0; i < m.w_in.rows(); ++i)
        for (Eigen::Index j = 0; j < m.w_in.cols(); ++j) check(m.w_in(i, j), g.d_in(i, j));
    for (Eigen::Index i = 0; i < m.w_out.rows(); ++i)
        for (Eigen::Index j = 0; j < m.w_out.cols(); ++j) check(m.w_out(i, j), g.d_out(i, j));
    CHECK(worst < 1e-4);
}

TEST_CASE("training on a repeated sentence does not increase the loss after epoch one") {
    std::vector<ProcessedDoc> docs;
    for (int i = 0; i < 20; ++i) docs.push_back({"D" + std::to_string(i), {"solar", "panel", "energy"}});
    TrainConfig cfg;
    cfg.d = 8;
    cfg.c = 2;
    cfg.min_count = 1;
    cfg.epochs = 50;
    cfg.seed = 3;
    TrainReport rep;
    auto m = train_cbow(docs, cfg, &rep);
    REQUIRE(rep.epoch_loss.size() == 50);
    auto ex = make_examples(docs, m.vocab, cfg.c);
    CHECK(std::abs(corpus_loss(m, ex) - rep.epoch_loss.back()) < 1e-12);
    for (std::size_t e = 2; e < rep.epoch_loss.size(); ++e) CHECK(rep.epoch_loss[e] <= rep.epoch_loss[e - 1] + 1e-6);
}

TEST_CASE("zero epochs leaves the initialization untouched") {
    auto docs = docs_of({{"a", "b", "c", "a", "b"}});
    TrainConfig cfg;
    cfg.d = 4;
    cfg.min_count = 1;
    cfg.epochs = 0;
    cfg.seed = 9;
    auto trained = train_cbow(docs, cfg);
    auto init = init_model(build_vocab(docs, 1), cfg);
    CHECK(trained.w_in == init.w_in);
    CHECK(trained.w_out == init.w_out);
}

TEST_CASE("training is reproducible for a fixed seed with one worker") {
    auto docs = docs_of({{"a", "b", "c", "d", "a", "c"}, {"b", "d", "a"}});
    TrainConfig cfg;
    cfg.d = 5;
    cfg.min_count = 1;
    cfg.epochs = 3;
    cfg.seed = 42;
    CHECK(serialize_model(train_cbow(docs, cfg)) == serialize_model(train_cbow(docs, cfg)));
    cfg.loss = LossKind::NegativeSampling;
    CHECK(serialize_model(train_cbow(docs, cfg)) == serialize_model(train_cbow(docs, cfg)));
}

TEST_CASE("cosine similarity") {
    std::vector<double> v{0.3, -1.2, 2.0}, a{1, 0}, b{0, 1}, c{1, 1};
    CHECK(cosine_similarity(v, v) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cosine_similarity(a, b) == 0.0);
    CHECK(std::abs(cosine_similarity(c, a) - 0.70710678) < 1e-8);
}

TEST_CASE("top_k neighbors: brute force, boundary and OOV") {
    auto m = random_model(100, 6, 5);
    for (std::size_t w = 0; w < m.vocab_size(); w += 7) {
        const auto& q = m.vocab.words[w];
        std::vector<std::pair<double, std::string>> all;
        for (std::size_t o = 0; o < m.vocab_size(); ++o) {
            if (o == w) continue;
            Eigen::VectorXd x = m.w_in.row(static_cast<Eigen::Index>(w)), y = m.w_in.row(static_cast<Eigen::Index>(o));
            all.push_back({-x.dot(y) / (x.norm() * y.norm()), m.vocab.words[o]});
        }
        std::sort(all.begin(), all.end());
        auto got = top_k_neighbors(m, q, 15);
        REQUIRE(got.size() == 15);
        for (std::size_t i = 0; i < 15; ++i) {
            CHECK(got[i].word == all[i].second);
            CHECK(std::abs(got[i].similarity + all[i].first) < 1e-12);
        }
    }
    CHECK(top_k_neighbors(m, "w0", 500).size() == 99);
    CHECK_THROWS_AS(top_k_neighbors(m, "zzz", 3), ValidationError);
}

TEST_CASE("gold evaluation: perfect and noise correlations") {
    auto m = random_model(60, 8, 21);
    std::vector<GoldPair> gold;
    for (std::size_t i = 0; i + 1 < 60; i += 2) {
        auto a = m.vocab.words[i], b = m.vocab.words[i + 1];
        gold.push_back({a, b, 3.0 * cosine_similarity(m.embedding(static_cast<std::uint32_t>(i)),
                                                      m.embedding(static_cast<std::uint32_t>(i + 1))) + 1.0});
    }
    gold.push_back({"w1", "missing", 5.0});
    auto ev = evaluate_gold(m, gold);
    REQUIRE(ev.pearson_r.has_value());
    CHECK(std::abs(*ev.pearson_r - 1.0) < 1e-9);
    CHECK(ev.n_pairs == 30);
    CHECK(ev.coverage == doctest::Approx(30.0 / 31.0));

    std::mt19937_64 rng(1234);
    std::normal_distribution<double> N(0, 1);
    std::vector<double> x(200), y(200);
    for (std::size_t i = 0; i < 200; ++i) x[i] = N(rng), y[i] = N(rng);
    CHECK(std::abs(pearson(x, y)) < 0.2);
}

TEST_CASE("shipped defaults: MC=40, C=2, d=450") {
    TrainConfig cfg;
    CHECK(cfg.min_count == 40);
    CHECK(cfg.c == 2);
    CHECK(cfg.d == 450);
}

TEST_CASE("model file round trip and corruption") {
    auto m = random_model(12, 4, 2);
    auto bytes = serialize_model(m);
    auto path = fs::temp_directory_path() / "greenpat_model_roundtrip.bin";
    save_model(m, path);
    auto back = load_model(path);
    CHECK(serialize_model(back) == bytes);
    CHECK(back.vocab.words == m.vocab.words);
    try {
        deserialize_model(std::string_view(bytes).substr(0, bytes.size() - 5));
        FAIL("expected error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("unexpected EOF") != std::string::npos);
    }
    auto bad = bytes;
    bad[0] = 'X';
    try {
        deserialize_model(bad);
        FAIL("expected error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("version") != std::string::npos);
    }
    fs::remove(path);
}

TEST_CASE("tune grid emits one row per combination") {
    std::vector<ProcessedDoc> docs;
    std::mt19937_64 rng(8);
    for (int i = 0; i < 40; ++i) {
        ProcessedDoc d{"D" + std::to_string(i), {}};
        for (int j = 0; j < 12; ++j) d.tokens.push_back("t" + std::to_string(rng() % 15));
        docs.push_back(d);
    }
    std::vector<GoldPair> gold{{"t1", "t2", 1}, {"t3", "t4", 2}, {"t5", "t6", 3}};
    TrainConfig base;
    base.epochs = 1;
    auto res = tune_hyperparams(docs, gold, {{1, 2}, {1, 1000}, {4, 8}}, base);
    CHECK(res.rows.size() == 8);
    for (const auto& r : res.rows)
        if (r.min_count == 1000) CHECK_FALSE(r.error.empty());
}
