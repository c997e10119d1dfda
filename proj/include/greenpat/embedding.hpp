#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "greenpat/corpus.hpp"
#include "greenpat/error.hpp"

namespace greenpat {

struct Vocabulary {
    std::vector<std::string> words;
    std::unordered_map<std::string, std::uint32_t> index;
    std::vector<std::uint64_t> counts;  // parallel to words
    std::uint64_t min_count = 1;

    std::size_t size() const { return words.size(); }
    std::optional<std::uint32_t> find(const std::string& w) const {
        auto it = index.find(w);
        if (it == index.end()) return std::nullopt;
        return it->second;
    }
};

// Descending count, then lexicographic. Throws when nothing meets min_count.
Vocabulary build_vocab(std::span<const ProcessedDoc> docs, std::uint64_t min_count);
Vocabulary vocab_from_counts(std::vector<std::pair<std::string, std::uint64_t>> counts, std::uint64_t min_count);

enum class LossKind { FullSoftmax, NegativeSampling };

struct TrainConfig {
    std::size_t d = 450;
    std::size_t c = 2;
    std::uint64_t min_count = 40;
    std::size_t epochs = 5;
    double learning_rate = 0.025;
    double min_learning_rate = 1e-4;
    std::uint64_t seed = 1;
    LossKind loss = LossKind::FullSoftmax;
    std::size_t negatives = 5;
    std::size_t workers = 1;
    bool track_loss = true;

    void validate() const;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct CbowModel {
    Vocabulary vocab;
    RowMatrix w_in;         // V x d, row w is the input embedding of w
    Eigen::MatrixXd w_out;  // d x V, column w is the output vector of w
    TrainConfig config;

    std::size_t vocab_size() const { return vocab.size(); }
    std::size_t dim() const { return static_cast<std::size_t>(w_in.cols()); }
    std::span<const double> embedding(std::uint32_t w) const {
        return {w_in.data() + static_cast<std::ptrdiff_t>(w) * w_in.cols(), static_cast<std::size_t>(w_in.cols())};
    }
};

// w_in ~ U(-0.5/d, 0.5/d) from the seeded generator, w_out = 0.
CbowModel init_model(Vocabulary vocab, const TrainConfig& config);

// One training example: a target word and its (window-truncated) context.
struct CbowExample {
    std::uint32_t target;
    std::vector<std::uint32_t> context;
};

// Out-of-vocabulary tokens are removed before windows are formed; targets
// with no surviving context are skipped.
std::vector<CbowExample> make_examples(const ProcessedDoc& doc, const Vocabulary& vocab, std::size_t window);
std::vector<CbowExample> make_examples(std::span<const ProcessedDoc> docs, const Vocabulary& vocab, std::size_t window);

struct ForwardPass {
    Eigen::VectorXd h;       // mean of context input rows
    Eigen::VectorXd scores;  // W_out^T h
};

ForwardPass cbow_forward(const CbowModel& model, std::span<const std::uint32_t> context_ids);

// Softmax over scores, computed with max-shift.
Eigen::VectorXd softmax(const Eigen::VectorXd& scores);

// -log p(target | context) under full softmax.
double example_loss(const CbowModel& model, const CbowExample& ex);
// Mean of example_loss over all examples.
double corpus_loss(const CbowModel& model, std::span<const CbowExample> examples);

struct Gradient {
    RowMatrix d_in;
    Eigen::MatrixXd d_out;
};

// Analytic gradient of mean full-softmax loss over the examples.
Gradient loss_gradient(const CbowModel& model, std::span<const CbowExample> examples);

struct TrainReport {
    std::vector<double> epoch_loss;  // one entry per epoch
    std::size_t steps = 0;
};

class TrainingDiverged : public RuntimeError {
public:
    TrainingDiverged(std::size_t epoch, std::size_t step, double lr);
    std::size_t epoch, step;
    double learning_rate;
};

// workers == 1: bit-reproducible for a fixed seed. workers > 1: lock-free
// concurrent updates over document shards, not reproducible.
CbowModel train_cbow(std::span<const ProcessedDoc> docs, const TrainConfig& config, TrainReport* report = nullptr);
CbowModel train_cbow(Vocabulary vocab, std::span<const ProcessedDoc> docs, const TrainConfig& config,
                     TrainReport* report = nullptr);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct Neighbor {
    std::string word;
    double similarity;
};

std::vector<Neighbor> top_k_neighbors(const CbowModel& model, const std::string& query, std::size_t k);

struct GoldPair {
    std::string a, b;
    double score;
};

std::vector<GoldPair> load_gold(const std::filesystem::path& path);

double pearson(std::span<const double> x, std::span<const double> y);

struct GoldEval {
    std::optional<double> pearson_r;  // missing when fewer than two in-vocab pairs or zero variance
    double coverage = 0.0;
    std::size_t n_pairs = 0;
};

GoldEval evaluate_gold(const CbowModel& model, std::span<const GoldPair> gold);

struct TuneGrid {
    std::vector<std::size_t> c;
    std::vector<std::uint64_t> min_count;
    std::vector<std::size_t> d;
};

struct TuneRow {
    std::size_t c;
    std::uint64_t min_count;
    std::size_t d;
    GoldEval eval;
    std::string error;  // set when the combination could not be trained
};

struct TuneResult {
    std::vector<TuneRow> rows;
    std::optional<std::size_t> best;  // index into rows
};

TuneResult tune_hyperparams(std::span<const ProcessedDoc> docs, std::span<const GoldPair> gold, const TuneGrid& grid,
                            const TrainConfig& base);

void save_model(const CbowModel& model, const std::filesystem::path& path);
CbowModel load_model(const std::filesystem::path& path);
std::string serialize_model(const CbowModel& model);
CbowModel deserialize_model(std::string_view bytes);

}  // namespace greenpat
