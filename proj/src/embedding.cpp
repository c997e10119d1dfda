#include "greenpat/embedding.hpp"

#include <algorithm>
#include <limits>
#include <atomic>
#include <bit>
#include <cmath>
#include <map>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "greenpat/textio.hpp"

namespace greenpat {

Vocabulary vocab_from_counts(std::vector<std::pair<std::string, std::uint64_t>> counts, std::uint64_t min_count) {
    if (min_count < 1) throw ValidationError("min_count must be >= 1");
    std::erase_if(counts, [&](const auto& p) { return p.second < min_count; });
    if (counts.empty()) throw ValidationError("no words meet min_count");
    std::sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocabulary v;
    v.min_count = min_count;
    for (auto& [w, n] : counts) {
        v.index.emplace(w, static_cast<std::uint32_t>(v.words.size()));
        v.words.push_back(std::move(w));
        v.counts.push_back(n);
    }
    return v;
}

Vocabulary build_vocab(std::span<const ProcessedDoc> docs, std::uint64_t min_count) {
    std::unordered_map<std::string, std::uint64_t> freq;
    for (const auto& d : docs)
        for (const auto& t : d.tokens) ++freq[t];
    return vocab_from_counts({freq.begin(), freq.end()}, min_count);
}

void TrainConfig::validate() const {
    if (d < 1) throw ValidationError("embedding size d must be >= 1");
    if (c < 1) throw ValidationError("context window c must be >= 1");
    if (min_count < 1) throw ValidationError("min_count must be >= 1");
    if (!(learning_rate > 0)) throw ValidationError("learning_rate must be > 0");
    if (!(min_learning_rate > 0) || min_learning_rate > learning_rate)
        throw ValidationError("min_learning_rate must be in (0, learning_rate]");
    if (workers < 1) throw ValidationError("workers must be >= 1");
    if (loss == LossKind::NegativeSampling && negatives < 1) throw ValidationError("negatives must be >= 1");
}

namespace {

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double log_sum_exp(const Eigen::VectorXd& s) {
    double m = s.maxCoeff();
    double acc = 0;
    for (Eigen::Index j = 0; j < s.size(); ++j) acc += std::exp(s[j] - m);
    return m + std::log(acc);
}

void check_context(const CbowModel& model, std::span<const std::uint32_t> ctx) {
    if (ctx.empty()) throw ValidationError("cbow_forward: empty context");
    for (auto id : ctx)
        if (id >= model.vocab_size()) throw ValidationError(fmt::format("cbow_forward: word index {} out of range", id));
}

}  // namespace

CbowModel init_model(Vocabulary vocab, const TrainConfig& config) {
    config.validate();
    CbowModel m;
    auto V = static_cast<Eigen::Index>(vocab.size());
    auto d = static_cast<Eigen::Index>(config.d);
    m.vocab = std::move(vocab);
    m.config = config;
    m.w_in.resize(V, d);
    m.w_out = Eigen::MatrixXd::Zero(d, V);
    std::mt19937_64 rng(config.seed);
    double scale = 1.0 / static_cast<double>(config.d);
    for (Eigen::Index i = 0; i < V; ++i)
        for (Eigen::Index k = 0; k < d; ++k) m.w_in(i, k) = (unit_uniform(rng) - 0.5) * scale;
    return m;
}

std::vector<CbowExample> make_examples(const ProcessedDoc& doc, const Vocabulary& vocab, std::size_t window) {
    std::vector<std::uint32_t> ids;
    ids.reserve(doc.tokens.size());
    for (const auto& t : doc.tokens)
        if (auto id = vocab.find(t)) ids.push_back(*id);
    std::vector<CbowExample> out;
    for (std::size_t t = 0; t < ids.size(); ++t) {
        CbowExample ex{ids[t], {}};
        std::size_t lo = t >= window ? t - window : 0;
        std::size_t hi = std::min(ids.size() - 1, t + window);
        for (std::size_t j = lo; j <= hi; ++j)
            if (j != t) ex.context.push_back(ids[j]);
        if (!ex.context.empty()) out.push_back(std::move(ex));
    }
    return out;
}

std::vector<CbowExample> make_examples(std::span<const ProcessedDoc> docs, const Vocabulary& vocab,
                                       std::size_t window) {
    std::vector<CbowExample> out;
    for (const auto& d : docs) {
        auto ex = make_examples(d, vocab, window);
        out.insert(out.end(), std::make_move_iterator(ex.begin()), std::make_move_iterator(ex.end()));
    }
    return out;
}

ForwardPass cbow_forward(const CbowModel& model, std::span<const std::uint32_t> context_ids) {
    check_context(model, context_ids);
    ForwardPass fp;
    fp.h = Eigen::VectorXd::Zero(model.w_in.cols());
    for (auto id : context_ids) fp.h += model.w_in.row(id).transpose();
    fp.h /= static_cast<double>(context_ids.size());
    fp.scores = model.w_out.transpose() * fp.h;
    return fp;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& scores) {
    double m = scores.maxCoeff();
    Eigen::VectorXd p = (scores.array() - m).exp();
    return p / p.sum();
}

double example_loss(const CbowModel& model, const CbowExample& ex) {
    auto fp = cbow_forward(model, ex.context);
    return log_sum_exp(fp.scores) - fp.scores[ex.target];
}

double corpus_loss(const CbowModel& model, std::span<const CbowExample> examples) {
    if (examples.empty()) return 0.0;
    double total = 0;
    for (const auto& ex : examples) total += example_loss(model, ex);
    return total / static_cast<double>(examples.size());
}

Gradient loss_gradient(const CbowModel& model, std::span<const CbowExample> examples) {
    Gradient g{RowMatrix::Zero(model.w_in.rows(), model.w_in.cols()),
               Eigen::MatrixXd::Zero(model.w_out.rows(), model.w_out.cols())};
    if (examples.empty()) return g;
    double inv_n = 1.0 / static_cast<double>(examples.size());
    for (const auto& ex : examples) {
        auto fp = cbow_forward(model, ex.context);
        Eigen::VectorXd e = softmax(fp.scores);
        e[ex.target] -= 1.0;
        g.d_out.noalias() += inv_n * fp.h * e.transpose();
        Eigen::VectorXd dh = model.w_out * e;
        double share = inv_n / static_cast<double>(ex.context.size());
        for (auto id : ex.context) g.d_in.row(id) += share * dh.transpose();
    }
    return g;
}

TrainingDiverged::TrainingDiverged(std::size_t e, std::size_t s, double lr)
    : RuntimeError(fmt::format("training diverged: non-finite value at epoch {}, step {}, learning rate {}", e, s, lr)),
      epoch(e),
      step(s),
      learning_rate(lr) {}

namespace {

template <bool Shared>
struct Access {
    static double load(const double* p) {
        if constexpr (Shared) return std::atomic_ref<double>(*const_cast<double*>(p)).load(std::memory_order_relaxed);
        else return *p;
    }
    static void add(double* p, double v) {
        if constexpr (Shared) {
            std::atomic_ref<double> r(*p);
            r.store(r.load(std::memory_order_relaxed) + v, std::memory_order_relaxed);
        } else {
            *p += v;
        }
    }
};

struct Workspace {
    std::vector<double> h, grad_h, scores;
};

// One SGD step on a single example; returns the example loss before the update.
template <bool Shared>
double sgd_step_softmax(CbowModel& m, const CbowExample& ex, double lr, Workspace& ws) {
    using A = Access<Shared>;
    const std::size_t d = m.dim();
    const std::size_t V = m.vocab_size();
    double* w_in = m.w_in.data();
    double* w_out = m.w_out.data();  // column-major d x V: column j at w_out + j*d
    ws.h.assign(d, 0.0);
    ws.grad_h.assign(d, 0.0);
    ws.scores.resize(V);
    for (auto c : ex.context) {
        const double* row = w_in + static_cast<std::size_t>(c) * d;
        for (std::size_t k = 0; k < d; ++k) ws.h[k] += A::load(row + k);
    }
    double inv_ctx = 1.0 / static_cast<double>(ex.context.size());
    for (auto& v : ws.h) v *= inv_ctx;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < V; ++j) {
        const double* col = w_out + j * d;
        double s = 0;
        for (std::size_t k = 0; k < d; ++k) s += A::load(col + k) * ws.h[k];
        ws.scores[j] = s;
        mx = std::max(mx, s);
    }
    double z = 0;
    for (std::size_t j = 0; j < V; ++j) z += std::exp(ws.scores[j] - mx);
    double loss = mx + std::log(z) - ws.scores[ex.target];
    if (!std::isfinite(loss)) return loss;
    for (std::size_t j = 0; j < V; ++j) {
        double e = std::exp(ws.scores[j] - mx) / z - (j == ex.target ? 1.0 : 0.0);
        double* col = w_out + j * d;
        for (std::size_t k = 0; k < d; ++k) {
            ws.grad_h[k] += A::load(col + k) * e;
            A::add(col + k, -lr * e * ws.h[k]);
        }
    }
    for (auto c : ex.context) {
        double* row = w_in + static_cast<std::size_t>(c) * d;
        for (std::size_t k = 0; k < d; ++k) A::add(row + k, -lr * ws.grad_h[k] * inv_ctx);
    }
    return loss;
}

double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

template <bool Shared>
double sgd_step_negative(CbowModel& m, const CbowExample& ex, double lr, Workspace& ws,
                         const std::vector<std::uint32_t>& table, std::mt19937_64& rng) {
    using A = Access<Shared>;
    const std::size_t d = m.dim();
    double* w_in = m.w_in.data();
    double* w_out = m.w_out.data();
    ws.h.assign(d, 0.0);
    ws.grad_h.assign(d, 0.0);
    for (auto c : ex.context) {
        const double* row = w_in + static_cast<std::size_t>(c) * d;
        for (std::size_t k = 0; k < d; ++k) ws.h[k] += A::load(row + k);
    }
    double inv_ctx = 1.0 / static_cast<double>(ex.context.size());
    for (auto& v : ws.h) v *= inv_ctx;
    double loss = 0;
    for (std::size_t s = 0; s <= m.config.negatives; ++s) {
        std::uint32_t j = ex.target;
        double label = 1.0;
        if (s > 0) {
            j = table[rng() % table.size()];
            if (j == ex.target) continue;
            label = 0.0;
        }
        double* col = w_out + static_cast<std::size_t>(j) * d;
        double x = 0;
        for (std::size_t k = 0; k < d; ++k) x += A::load(col + k) * ws.h[k];
        loss -= label > 0 ? log_sigmoid(x) : log_sigmoid(-x);
        double g = label - 1.0 / (1.0 + std::exp(-x));
        for (std::size_t k = 0; k < d; ++k) {
            ws.grad_h[k] += g * A::load(col + k);
            A::add(col + k, lr * g * ws.h[k]);
        }
    }
    for (auto c : ex.context) {
        double* row = w_in + static_cast<std::size_t>(c) * d;
        for (std::size_t k = 0; k < d; ++k) A::add(row + k, lr * ws.grad_h[k] * inv_ctx);
    }
    return loss;
}

std::vector<std::uint32_t> unigram_table(const Vocabulary& v) {
    constexpr std::size_t kSize = 1 << 20;
    std::vector<double> w(v.size());
    double total = 0;
    for (std::size_t i = 0; i < v.size(); ++i) total += w[i] = std::pow(static_cast<double>(v.counts[i]), 0.75);
    std::vector<std::uint32_t> table;
    table.reserve(kSize);
    double cum = 0;
    std::size_t i = 0;
    for (std::size_t t = 0; t < kSize; ++t) {
        double target = (static_cast<double>(t) + 0.5) / kSize * total;
        while (i + 1 < v.size() && cum + w[i] < target) cum += w[i++];
        table.push_back(static_cast<std::uint32_t>(i));
    }
    return table;
}

}  // namespace

CbowModel train_cbow(Vocabulary vocab, std::span<const ProcessedDoc> docs, const TrainConfig& config,
                     TrainReport* report) {
    CbowModel model = init_model(std::move(vocab), config);
    auto examples = make_examples(docs, model.vocab, config.c);
    TrainReport local;
    TrainReport& rep = report ? *report : local;
    rep = {};
    if (config.epochs == 0 || examples.empty()) return model;

    const bool negative = config.loss == LossKind::NegativeSampling;
    std::vector<std::uint32_t> table;
    if (negative) table = unigram_table(model.vocab);

    const std::size_t total_steps = config.epochs * examples.size();
    auto lr_at = [&](std::size_t step) {
        double frac = static_cast<double>(step) / static_cast<double>(total_steps);
        return std::max(config.min_learning_rate,
                        config.learning_rate - (config.learning_rate - config.min_learning_rate) * frac);
    };

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        double epoch_sum = 0;
        if (config.workers == 1) {
            Workspace ws;
            std::mt19937_64 rng(splitmix(config.seed ^ (epoch + 1)));
            for (std::size_t i = 0; i < examples.size(); ++i) {
                std::size_t step = epoch * examples.size() + i;
                double lr = lr_at(step);
                double loss = negative ? sgd_step_negative<false>(model, examples[i], lr, ws, table, rng)
                                       : sgd_step_softmax<false>(model, examples[i], lr, ws);
                if (!std::isfinite(loss)) throw TrainingDiverged(epoch, step, lr);
                epoch_sum += loss;
            }
        } else {
            std::atomic<std::size_t> next_step{epoch * examples.size()};
            std::atomic<bool> diverged{false};
            std::vector<double> sums(config.workers, 0.0);
            std::size_t diverged_step = 0;
            std::vector<std::jthread> threads;
            std::size_t chunk = (examples.size() + config.workers - 1) / config.workers;
            for (std::size_t w = 0; w < config.workers; ++w) {
                threads.emplace_back([&, w] {
                    Workspace ws;
                    std::mt19937_64 rng(splitmix(config.seed ^ (epoch + 1) ^ (w << 32)));
                    std::size_t lo = w * chunk, hi = std::min(examples.size(), lo + chunk);
                    for (std::size_t i = lo; i < hi && !diverged.load(std::memory_order_relaxed); ++i) {
                        std::size_t step = next_step.fetch_add(1, std::memory_order_relaxed);
                        double lr = lr_at(step);
                        double loss = negative ? sgd_step_negative<true>(model, examples[i], lr, ws, table, rng)
                                               : sgd_step_softmax<true>(model, examples[i], lr, ws);
                        if (!std::isfinite(loss)) {
                            if (!diverged.exchange(true)) diverged_step = step;
                            return;
                        }
                        sums[w] += loss;
                    }
                });
            }
            threads.clear();
            if (diverged) throw TrainingDiverged(epoch, diverged_step, lr_at(diverged_step));
            for (double s : sums) epoch_sum += s;
        }
        rep.steps += examples.size();
        if (!model.w_in.allFinite() || !model.w_out.allFinite())
            throw TrainingDiverged(epoch, rep.steps, lr_at(rep.steps - 1));
        if (config.track_loss && !negative) rep.epoch_loss.push_back(corpus_loss(model, examples));
        else rep.epoch_loss.push_back(epoch_sum / static_cast<double>(examples.size()));
    }
    return model;
}

CbowModel train_cbow(std::span<const ProcessedDoc> docs, const TrainConfig& config, TrainReport* report) {
    config.validate();
    return train_cbow(build_vocab(docs, config.min_count), docs, config, report);
}

// ---------------------------------------------------------------------------

namespace {

double sum_squares(std::span<const double> a) {
    double s = 0;
    for (double v : a) s += v * v;
    return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double cosine_from_parts(double dp, double norm_a, double norm_b) {
    return std::clamp(dp / (norm_a * norm_b), -1.0, 1.0);
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ValidationError("cosine_similarity: dimension mismatch");
    double na = std::sqrt(sum_squares(a));
    double nb = std::sqrt(sum_squares(b));
    if (!(na > 0) || !(nb > 0)) throw ValidationError("cosine_similarity: zero-norm vector");
    return cosine_from_parts(dot(a, b), na, nb);
}

std::vector<Neighbor> top_k_neighbors(const CbowModel& model, const std::string& query, std::size_t k) {
    if (k < 1) throw ValidationError("top_k_neighbors: k must be >= 1");
    auto q = model.vocab.find(query);
    if (!q) throw ValidationError("word not in vocabulary: " + query);
    auto qv = model.embedding(*q);
    double qn = std::sqrt(sum_squares(qv));
    if (!(qn > 0)) throw ValidationError("cosine_similarity: zero-norm vector for " + query);
    std::vector<Neighbor> all;
    all.reserve(model.vocab_size());
    for (std::uint32_t w = 0; w < model.vocab_size(); ++w) {
        if (w == *q) continue;
        auto v = model.embedding(w);
        double n = std::sqrt(sum_squares(v));
        if (!(n > 0)) continue;
        all.push_back({model.vocab.words[w], cosine_from_parts(dot(qv, v), qn, n)});
    }
    auto cmp = [](const Neighbor& a, const Neighbor& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.word < b.word;
    };
    std::size_t n = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), cmp);
    all.resize(n);
    return all;
}

// ---------------------------------------------------------------------------

std::vector<GoldPair> load_gold(const std::filesystem::path& path) {
    std::vector<GoldPair> out;
    std::size_t lineno = 0;
    for (const auto& line : read_lines(path)) {
        ++lineno;
        if (trim(line).empty() || line.front() == '#') continue;
        auto parts = split(line, '\t');
        if (parts.size() != 3) throw ValidationError(fmt::format("gold file line {}: expected 3 fields", lineno));
        auto score = parse_double(parts[2]);
        if (!score) {
            if (lineno == 1) continue;  // header
            throw ValidationError(fmt::format("gold file line {}: invalid score", lineno));
        }
        out.push_back({std::string(trim(parts[0])), std::string(trim(parts[1])), *score});
    }
    return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("pearson: need two equal-length samples, n >= 2");
    double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0 || syy == 0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

GoldEval evaluate_gold(const CbowModel& model, std::span<const GoldPair> gold) {
    if (gold.empty()) throw ValidationError("gold standard is empty");
    GoldEval ev;
    std::vector<double> model_sims, human;
    for (const auto& g : gold) {
        auto a = model.vocab.find(g.a);
        auto b = model.vocab.find(g.b);
        if (!a || !b) continue;
        model_sims.push_back(cosine_similarity(model.embedding(*a), model.embedding(*b)));
        human.push_back(g.score);
    }
    ev.n_pairs = model_sims.size();
    ev.coverage = static_cast<double>(ev.n_pairs) / static_cast<double>(gold.size());
    if (ev.n_pairs >= 2) {
        double r = pearson(model_sims, human);
        if (std::isfinite(r)) ev.pearson_r = r;
    }
    return ev;
}

TuneResult tune_hyperparams(std::span<const ProcessedDoc> docs, std::span<const GoldPair> gold, const TuneGrid& grid,
                            const TrainConfig& base) {
    if (gold.empty()) throw ValidationError("tune: gold pairs are empty");
    if (grid.c.empty() || grid.min_count.empty() || grid.d.empty()) throw ValidationError("tune: grid is empty");
    TuneResult res;
    for (auto c : grid.c) {
        for (auto mc : grid.min_count) {
            for (auto d : grid.d) {
                TuneRow row{c, mc, d, {}, {}};
                TrainConfig cfg = base;
                cfg.c = c;
                cfg.min_count = mc;
                cfg.d = d;
                try {
                    auto model = train_cbow(docs, cfg);
                    row.eval = evaluate_gold(model, gold);
                } catch (const Error& e) {
                    row.error = e.what();
                }
                res.rows.push_back(std::move(row));
            }
        }
    }
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
        const auto& r = res.rows[i].eval.pearson_r;
        if (r && (!res.best || *r > *res.rows[*res.best].eval.pearson_r)) res.best = i;
    }
    return res;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kModelMagic[7] = {'G', 'L', 'W', '2', 'V', '1', '\0'};

class ByteWriter {
public:
    void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
    std::string take() { return std::move(buf_); }

private:
    std::string buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view b) : b_(b) {}
    std::string_view bytes(std::size_t n) {
        if (b_.size() - pos_ < n) throw ValidationError("model file: unexpected EOF");
        auto s = b_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint64_t uint(int width) {
        auto s = bytes(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
        return v;
    }
    std::uint32_t u32() { return static_cast<std::uint32_t>(uint(4)); }
    std::uint64_t u64() { return uint(8); }
    float f32() { return std::bit_cast<float>(u32()); }
    bool done() const { return pos_ == b_.size(); }

private:
    std::string_view b_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_model(const CbowModel& model) {
    ByteWriter w;
    w.bytes(kModelMagic, sizeof(kModelMagic));
    auto V = static_cast<std::uint32_t>(model.vocab_size());
    auto d = static_cast<std::uint32_t>(model.dim());
    w.u32(V);
    w.u32(d);
    for (std::size_t i = 0; i < V; ++i) {
        const auto& word = model.vocab.words[i];
        w.u32(static_cast<std::uint32_t>(word.size()));
        w.bytes(word.data(), word.size());
        w.u64(model.vocab.counts[i]);
    }
    for (std::uint32_t i = 0; i < V; ++i)
        for (std::uint32_t k = 0; k < d; ++k) w.f32(static_cast<float>(model.w_in(i, k)));
    for (std::uint32_t k = 0; k < d; ++k)
        for (std::uint32_t j = 0; j < V; ++j) w.f32(static_cast<float>(model.w_out(k, j)));
    return w.take();
}

CbowModel deserialize_model(std::string_view bytes) {
    ByteReader r(bytes);
    if (bytes.size() < sizeof(kModelMagic))
        throw ValidationError("model file: unexpected EOF");
    auto magic = r.bytes(sizeof(kModelMagic));
    if (magic != std::string_view(kModelMagic, sizeof(kModelMagic)))
        throw ValidationError("model file: bad magic or unsupported version (expected GLW2V1)");
    std::uint32_t V = r.u32();
    std::uint32_t d = r.u32();
    if (V == 0 || d == 0) throw ValidationError("model file: empty dimensions");
    std::vector<std::pair<std::string, std::uint64_t>> words;
    words.reserve(V);
    for (std::uint32_t i = 0; i < V; ++i) {
        auto len = r.u32();
        std::string w(r.bytes(len));
        words.emplace_back(std::move(w), r.u64());
    }
    CbowModel m;
    std::uint64_t min_count = words[0].second;
    for (const auto& [w, n] : words) min_count = std::min(min_count, n);
    m.vocab.min_count = min_count;
    for (auto& [w, n] : words) {
        if (!m.vocab.index.emplace(w, static_cast<std::uint32_t>(m.vocab.words.size())).second)
            throw ValidationError("model file: duplicate vocabulary word " + w);
        m.vocab.words.push_back(std::move(w));
        m.vocab.counts.push_back(n);
    }
    m.w_in.resize(V, d);
    m.w_out.resize(d, V);
    for (std::uint32_t i = 0; i < V; ++i)
        for (std::uint32_t k = 0; k < d; ++k) m.w_in(i, k) = r.f32();
    for (std::uint32_t k = 0; k < d; ++k)
        for (std::uint32_t j = 0; j < V; ++j) m.w_out(k, j) = r.f32();
    if (!r.done()) throw ValidationError("model file: trailing bytes");
    if (!m.w_in.allFinite() || !m.w_out.allFinite()) throw ValidationError("model file: non-finite weights");
    m.config.d = d;
    m.config.min_count = min_count;
    return m;
}

void save_model(const CbowModel& model, const std::filesystem::path& path) { write_file(path, serialize_model(model)); }

CbowModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

}  // namespace greenpat
