#include "greenpat/dictionary.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "greenpat/error.hpp"
#include "greenpat/textio.hpp"

namespace greenpat {

namespace {

std::string join(const Phrase& p, std::string_view sep = " ") {
    std::string out;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) out += sep;
        out += p[i];
    }
    return out;
}

bool is_reserved_tag(std::string_view w) { return w == kNumTag || w == kMeasureTag; }

}  // namespace

std::string DictRule::label() const {
    if (kind == RuleKind::Single) return join(phrase);
    std::string alts;
    for (std::size_t i = 0; i < alternatives.size(); ++i) {
        if (i) alts += " OR ";
        alts += join(alternatives[i]);
    }
    return fmt::format("{} & {} [{}]", join(phrase), alts, window);
}

bool GreenDictionary::add(DictRule rule, Provenance prov) {
    if (std::find(rules.begin(), rules.end(), rule) != rules.end()) return false;
    rules.push_back(std::move(rule));
    provenance.push_back(std::move(prov));
    return true;
}

SeedList load_seeds(const std::filesystem::path& path) {
    SeedList s;
    std::unordered_set<std::string> seen;
    for (const auto& line : read_lines(path)) {
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        if (seen.insert(std::string(t)).second) s.seeds.emplace_back(t);
    }
    if (s.seeds.empty()) throw ValidationError("seed list is empty: " + path.string());
    return s;
}

std::unordered_set<std::string> load_word_set(const std::filesystem::path& path) {
    std::unordered_set<std::string> out;
    for (const auto& line : read_lines(path)) {
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        out.emplace(t);
    }
    return out;
}

Expansion expand_seeds(const CbowModel& model, const SeedList& seeds, std::size_t k,
                       const std::unordered_set<std::string>& exclusions, const Normalizer& normalizer) {
    if (k < 1) throw ValidationError("expand_seeds: k must be >= 1");
    if (seeds.seeds.empty()) throw ValidationError("expand_seeds: seed list is empty");

    Expansion out;
    std::vector<Phrase> seed_phrases;
    for (const auto& raw : seeds.seeds) {
        Phrase p = normalizer.tokens(raw);
        if (p.empty()) {
            out.skipped_seeds.push_back(raw);
            continue;
        }
        if (out.dictionary.add({RuleKind::Single, p, {}, kDefaultWindow}, {Origin::Seed, raw, 0, 1.0}))
            seed_phrases.push_back(p);
    }

    struct Candidate {
        std::string seed;
        std::size_t rank;
        double similarity;
    };
    std::map<Phrase, Candidate> candidates;
    std::set<Phrase> seed_set(seed_phrases.begin(), seed_phrases.end());

    for (const auto& raw : seeds.seeds) {
        Phrase p = normalizer.tokens(raw);
        if (p.empty()) continue;
        std::vector<std::string> queries;
        for (const auto& t : p)
            if (model.vocab.find(t)) queries.push_back(t);
        if (p.size() > 1) {
            for (auto joined : {join(p, "_"), join(p, "")})
                if (model.vocab.find(joined)) queries.push_back(joined);
        }
        if (queries.empty()) {
            out.skipped_seeds.push_back(raw);
            continue;
        }
        for (const auto& q : queries) {
            auto neighbors = top_k_neighbors(model, q, k);
            for (std::size_t r = 0; r < neighbors.size(); ++r) {
                const auto& nb = neighbors[r];
                if (exclusions.count(nb.word) || is_reserved_tag(nb.word)) continue;
                Phrase phrase = split(nb.word, '_');
                std::erase_if(phrase, [](const std::string& s) { return s.empty(); });
                if (phrase.empty() || seed_set.count(phrase)) continue;
                auto it = candidates.find(phrase);
                if (it == candidates.end() || nb.similarity > it->second.similarity)
                    candidates[phrase] = {raw, r + 1, nb.similarity};
            }
        }
    }

    std::vector<std::pair<Phrase, Candidate>> ordered(candidates.begin(), candidates.end());
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.second.similarity != b.second.similarity) return a.second.similarity > b.second.similarity;
        return a.first < b.first;
    });
    for (auto& [phrase, c] : ordered)
        out.dictionary.add({RuleKind::Single, phrase, {}, kDefaultWindow}, {Origin::Expanded, c.seed, c.rank, c.similarity});
    return out;
}

GreenDictionary compile_dictionary_text(std::string_view content, const Normalizer& normalizer) {
    GreenDictionary dict;
    std::istringstream in{std::string(content)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || trim(line).front() == '#') continue;
        auto f = split(line, '\t');
        auto where = fmt::format("rule line {} '{}'", lineno, line);
        auto kind = trim(f[0]);
        DictRule rule;
        if (kind == "S") {
            if (f.size() != 2) throw ValidationError(where + ": expected S<TAB>phrase");
            rule.kind = RuleKind::Single;
            rule.phrase = normalizer.tokens(f[1]);
            if (rule.phrase.empty()) throw ValidationError(where + ": phrase normalizes to no tokens");
        } else if (kind == "C") {
            if (f.size() != 3 && f.size() != 4) throw ValidationError(where + ": expected C<TAB>keyword<TAB>alternatives[<TAB>window]");
            rule.kind = RuleKind::Cooc;
            rule.phrase = normalizer.tokens(f[1]);
            if (rule.phrase.empty()) throw ValidationError(where + ": keyword normalizes to no tokens");
            std::istringstream words(f[2]);
            std::vector<std::string> groups(1);
            std::string w;
            while (words >> w) {
                if (w == "OR") groups.emplace_back();
                else groups.back() += (groups.back().empty() ? "" : " ") + w;
            }
            for (const auto& g : groups) {
                Phrase alt = normalizer.tokens(g);
                if (!alt.empty() && std::find(rule.alternatives.begin(), rule.alternatives.end(), alt) == rule.alternatives.end())
                    rule.alternatives.push_back(std::move(alt));
            }
            if (rule.alternatives.empty()) throw ValidationError(where + ": no alternative survives normalization");
            if (f.size() == 4 && !trim(f[3]).empty()) {
                auto win = parse_int(f[3]);
                if (!win || *win < 1) throw ValidationError(where + ": window must be an integer >= 1");
                rule.window = static_cast<std::size_t>(*win);
            }
        } else {
            throw ValidationError(where + ": unknown rule kind (expected S or C)");
        }
        dict.add(std::move(rule), {Origin::Manual, {}, 0, 0.0});
    }
    return dict;
}

GreenDictionary compile_dictionary(const std::filesystem::path& path, const Normalizer& normalizer) {
    return compile_dictionary_text(read_file(path), normalizer);
}

std::string dictionary_to_rules_text(const GreenDictionary& dict) {
    std::string out;
    for (const auto& r : dict.rules) {
        if (r.kind == RuleKind::Single) {
            out += "S\t" + join(r.phrase) + "\n";
        } else {
            std::string alts;
            for (std::size_t i = 0; i < r.alternatives.size(); ++i) {
                if (i) alts += " OR ";
                alts += join(r.alternatives[i]);
            }
            out += fmt::format("C\t{}\t{}\t{}\n", join(r.phrase), alts, r.window);
        }
    }
    return out;
}

namespace {

using TokenIndex = std::unordered_map<std::string_view, std::vector<std::size_t>>;

std::vector<std::size_t> occurrences(const Phrase& phrase, const ProcessedDoc& doc, const TokenIndex& index) {
    std::vector<std::size_t> out;
    auto it = index.find(phrase.front());
    if (it == index.end()) return out;
    for (auto p : it->second) {
        if (p + phrase.size() > doc.tokens.size()) continue;
        bool ok = true;
        for (std::size_t i = 1; i < phrase.size() && ok; ++i) ok = doc.tokens[p + i] == phrase[i];
        if (ok) out.push_back(p);
    }
    return out;
}

std::size_t distance(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

}  // namespace

MatchOutcome Matcher::match(const ProcessedDoc& doc) const {
    MatchOutcome out;
    out.patent_id = doc.patent_id;
    if (doc.tokens.empty()) return out;
    TokenIndex index;
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) index[doc.tokens[i]].push_back(i);

    for (std::size_t r = 0; r < dict_.rules.size(); ++r) {
        const auto& rule = dict_.rules[r];
        auto kpos = occurrences(rule.phrase, doc, index);
        if (kpos.empty()) continue;
        if (rule.kind == RuleKind::Single) {
            out.fired_rules.push_back({r, std::move(kpos)});
            continue;
        }
        std::vector<std::size_t> apos;
        for (const auto& alt : rule.alternatives) {
            auto o = occurrences(alt, doc, index);
            apos.insert(apos.end(), o.begin(), o.end());
        }
        if (apos.empty()) continue;
        std::sort(apos.begin(), apos.end());
        std::size_t best_k = 0, best_a = 0, best_d = SIZE_MAX;
        for (auto k : kpos) {
            auto it = std::lower_bound(apos.begin(), apos.end(), k);
            if (it != apos.begin()) {
                auto a = *std::prev(it);
                if (distance(k, a) < best_d) best_d = distance(k, a), best_k = k, best_a = a;
            }
            if (it != apos.end() && distance(k, *it) < best_d) best_d = distance(k, *it), best_k = k, best_a = *it;
        }
        if (best_d <= rule.window) out.fired_rules.push_back({r, {best_k, best_a}});
    }
    out.matched = !out.fired_rules.empty();
    return out;
}

MatchOutcome match_document(const ProcessedDoc& doc, const GreenDictionary& dict) { return Matcher(dict).match(doc); }

bool classify_true_green(const PatentRecord& patent, const ProcessedDoc& doc, const GreenDictionary& dict) {
    if (!patent.baseline_green) return false;
    return match_document(doc, dict).matched;
}

std::string outcome_to_json(const MatchOutcome& outcome, bool true_green, const GreenDictionary& dict) {
    nlohmann::ordered_json j;
    j["patent_id"] = outcome.patent_id;
    j["true_green"] = true_green;
    auto fired = nlohmann::ordered_json::array();
    for (const auto& f : outcome.fired_rules) {
        nlohmann::ordered_json e;
        e["rule"] = dict.rules[f.rule].label();
        e["kind"] = dict.rules[f.rule].kind == RuleKind::Single ? "single" : "cooc";
        e["positions"] = f.positions;
        fired.push_back(std::move(e));
    }
    j["fired_rules"] = std::move(fired);
    return j.dump();
}

}  // namespace greenpat
