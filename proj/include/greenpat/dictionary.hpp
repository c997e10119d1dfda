#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "greenpat/corpus.hpp"
#include "greenpat/embedding.hpp"

namespace greenpat {

using Phrase = std::vector<std::string>;

struct SeedList {
    std::vector<std::string> seeds;  // raw expressions, 1-3 words
};

SeedList load_seeds(const std::filesystem::path& path);
std::unordered_set<std::string> load_word_set(const std::filesystem::path& path);

enum class RuleKind { Single, Cooc };

inline constexpr std::size_t kDefaultWindow = 20;

struct DictRule {
    RuleKind kind = RuleKind::Single;
    Phrase phrase;                     // Single: the expression; Cooc: the keyword
    std::vector<Phrase> alternatives;  // Cooc only
    std::size_t window = kDefaultWindow;

    std::string label() const;
    bool operator==(const DictRule&) const = default;
};

enum class Origin { Seed, Expanded, Manual };

struct Provenance {
    Origin origin = Origin::Manual;
    std::string source_seed;  // Expanded only
    std::size_t rank = 0;     // 1-based neighbor rank
    double similarity = 0.0;
};

struct GreenDictionary {
    std::vector<DictRule> rules;
    std::vector<Provenance> provenance;  // parallel to rules

    // Appends unless an identical rule exists; returns false for duplicates.
    bool add(DictRule rule, Provenance prov);
};

struct Expansion {
    GreenDictionary dictionary;
    std::vector<std::string> skipped_seeds;
};

// Each seed is normalized; every constituent word and its joined collocation
// forms ("a_b" and "ab") are queried when present in the vocabulary.
// Exclusions apply to neighbors only; seeds are always kept.
Expansion expand_seeds(const CbowModel& model, const SeedList& seeds, std::size_t k,
                       const std::unordered_set<std::string>& exclusions, const Normalizer& normalizer);

// Rule file, one rule per line:
//   S<TAB>phrase
//   C<TAB>keyword<TAB>alt1 OR alt2 ...[<TAB>window]
GreenDictionary compile_dictionary(const std::filesystem::path& path, const Normalizer& normalizer);
GreenDictionary compile_dictionary_text(std::string_view content, const Normalizer& normalizer);
std::string dictionary_to_rules_text(const GreenDictionary& dict);

struct FiredRule {
    std::size_t rule;  // index into GreenDictionary::rules
    // Single: every start position; Cooc: {keyword start, alternative start} of the closest pair.
    std::vector<std::size_t> positions;
};

struct MatchOutcome {
    std::string patent_id;
    bool matched = false;
    std::vector<FiredRule> fired_rules;  // ascending rule index
};

class Matcher {
public:
    explicit Matcher(const GreenDictionary& dict) : dict_(dict) {}
    MatchOutcome match(const ProcessedDoc& doc) const;

private:
    const GreenDictionary& dict_;
};

MatchOutcome match_document(const ProcessedDoc& doc, const GreenDictionary& dict);
bool classify_true_green(const PatentRecord& patent, const ProcessedDoc& doc, const GreenDictionary& dict);

std::string outcome_to_json(const MatchOutcome& outcome, bool true_green, const GreenDictionary& dict);

}  // namespace greenpat
