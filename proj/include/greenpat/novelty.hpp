#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "greenpat/corpus.hpp"

namespace greenpat {

inline constexpr int kDefaultCutoffYear = 1980;

// N-grams are stored as their tokens joined by a single space; tokens never
// contain spaces. Pairs are unordered: "a b" with a < b.
struct BaselineLexicon {
    std::unordered_set<std::string> unigrams, bigrams, trigrams, pairs;
    int cutoff_year = kDefaultCutoffYear;

    bool empty() const { return unigrams.empty(); }
    bool operator==(const BaselineLexicon&) const = default;
};

struct DatedDoc {
    ProcessedDoc doc;
    int priority_year = 0;
};

struct DocGrams {
    std::vector<std::string> unigrams, bigrams, trigrams, pairs;  // distinct, sorted
};

DocGrams extract_grams(const std::vector<std::string>& tokens);
void add_grams(BaselineLexicon& lex, const DocGrams& grams);

struct BaselineBuild {
    BaselineLexicon lexicon;
    std::size_t n_docs = 0;
    std::vector<std::string> warnings;
};

// Only docs with priority_year < cutoff_year contribute.
BaselineBuild build_baseline(std::span<const DatedDoc> docs, int cutoff_year = kDefaultCutoffYear);

struct NoveltyProfile {
    std::string patent_id;
    int priority_year = 0;
    std::size_t new_unigrams = 0, new_bigrams = 0, new_trigrams = 0, new_pairs = 0;
    bool high_novelty = false;

    bool operator==(const NoveltyProfile&) const = default;
};

// Strict first-appearance scoring: each doc is scored against everything
// before it, then its own n-grams join the running lexicon. Docs must arrive
// strictly ordered by (priority_year, patent_id), across calls too.
class NoveltyScorer {
public:
    explicit NoveltyScorer(BaselineLexicon baseline);

    NoveltyProfile score(const DatedDoc& doc);
    const BaselineLexicon& lexicon() const { return lex_; }

private:
    BaselineLexicon lex_;
    bool started_ = false;
    int last_year_ = 0;
    std::string last_id_;
};

enum class NoveltyMode {
    Strict,      // per-document updates
    YearCohort,  // score a year against the lexicon frozen at year start, then merge
};

std::vector<NoveltyProfile> score_novelty(std::span<const DatedDoc> docs, const BaselineLexicon& baseline,
                                          NoveltyMode mode = NoveltyMode::Strict, std::size_t workers = 1);

struct HighNoveltyRule {
    enum class Kind { TopQuantile, MinNewPairs } kind = Kind::TopQuantile;
    double q = 0.25;
    std::size_t min_pairs = 1;
};

// Linear-interpolation sample quantile (type 7).
double quantile(std::vector<double> values, double p);

void flag_high_novelty(std::vector<NoveltyProfile>& profiles, const HighNoveltyRule& rule);

std::string profiles_to_csv(const std::vector<NoveltyProfile>& profiles);

std::string serialize_lexicon(const BaselineLexicon& lex);
BaselineLexicon deserialize_lexicon(std::string_view bytes);
void save_lexicon(const BaselineLexicon& lex, const std::filesystem::path& path);
BaselineLexicon load_lexicon(const std::filesystem::path& path);

}  // namespace greenpat
