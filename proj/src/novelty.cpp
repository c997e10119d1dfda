#include "greenpat/novelty.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

#include <fmt/format.h>

#include "greenpat/error.hpp"
#include "greenpat/textio.hpp"

namespace greenpat {

namespace {

void sort_unique(std::vector<std::string>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

std::size_t count_new(const std::vector<std::string>& grams, const std::unordered_set<std::string>& known) {
    std::size_t n = 0;
    for (const auto& g : grams) n += known.count(g) == 0;
    return n;
}

}  // namespace

DocGrams extract_grams(const std::vector<std::string>& tokens) {
    DocGrams g;
    const auto n = tokens.size();
    g.unigrams = tokens;
    for (std::size_t i = 0; i + 1 < n; ++i) g.bigrams.push_back(tokens[i] + ' ' + tokens[i + 1]);
    for (std::size_t i = 0; i + 2 < n; ++i) g.trigrams.push_back(tokens[i] + ' ' + tokens[i + 1] + ' ' + tokens[i + 2]);
    sort_unique(g.unigrams);
    sort_unique(g.bigrams);
    sort_unique(g.trigrams);
    const auto& u = g.unigrams;  // sorted, distinct: u[i] < u[j] for i < j
    if (!u.empty()) g.pairs.reserve(u.size() * (u.size() - 1) / 2);
    for (std::size_t i = 0; i < u.size(); ++i)
        for (std::size_t j = i + 1; j < u.size(); ++j) g.pairs.push_back(u[i] + ' ' + u[j]);
    return g;
}

void add_grams(BaselineLexicon& lex, const DocGrams& grams) {
    lex.unigrams.insert(grams.unigrams.begin(), grams.unigrams.end());
    lex.bigrams.insert(grams.bigrams.begin(), grams.bigrams.end());
    lex.trigrams.insert(grams.trigrams.begin(), grams.trigrams.end());
    lex.pairs.insert(grams.pairs.begin(), grams.pairs.end());
}

BaselineBuild build_baseline(std::span<const DatedDoc> docs, int cutoff_year) {
    BaselineBuild out;
    out.lexicon.cutoff_year = cutoff_year;
    for (const auto& d : docs) {
        if (d.priority_year >= cutoff_year) continue;
        add_grams(out.lexicon, extract_grams(d.doc.tokens));
        ++out.n_docs;
    }
    if (out.n_docs == 0)
        out.warnings.push_back(fmt::format("baseline lexicon is empty: no documents before {}; every later n-gram counts as new",
                                           cutoff_year));
    return out;
}

NoveltyScorer::NoveltyScorer(BaselineLexicon baseline) : lex_(std::move(baseline)) {}

namespace {

void check_order(bool started, int last_year, const std::string& last_id, const DatedDoc& d, int cutoff) {
    if (d.priority_year < cutoff)
        throw ValidationError(fmt::format("novelty: {} has priority year {} before the baseline cutoff {}",
                                          d.doc.patent_id, d.priority_year, cutoff));
    if (started && std::tie(d.priority_year, d.doc.patent_id) <= std::tie(last_year, last_id))
        throw ValidationError(fmt::format("novelty: documents out of order at {} ({}) after {} ({})", d.doc.patent_id,
                                          d.priority_year, last_id, last_year));
}

NoveltyProfile profile_for(const DatedDoc& d, const DocGrams& g, const BaselineLexicon& lex) {
    NoveltyProfile p;
    p.patent_id = d.doc.patent_id;
    p.priority_year = d.priority_year;
    p.new_unigrams = count_new(g.unigrams, lex.unigrams);
    p.new_bigrams = count_new(g.bigrams, lex.bigrams);
    p.new_trigrams = count_new(g.trigrams, lex.trigrams);
    p.new_pairs = count_new(g.pairs, lex.pairs);
    return p;
}

}  // namespace

NoveltyProfile NoveltyScorer::score(const DatedDoc& d) {
    check_order(started_, last_year_, last_id_, d, lex_.cutoff_year);
    started_ = true;
    last_year_ = d.priority_year;
    last_id_ = d.doc.patent_id;
    auto grams = extract_grams(d.doc.tokens);
    auto p = profile_for(d, grams, lex_);
    add_grams(lex_, grams);
    return p;
}

std::vector<NoveltyProfile> score_novelty(std::span<const DatedDoc> docs, const BaselineLexicon& baseline,
                                          NoveltyMode mode, std::size_t workers) {
    std::vector<NoveltyProfile> out;
    out.reserve(docs.size());
    if (mode == NoveltyMode::Strict) {
        NoveltyScorer scorer(baseline);
        for (const auto& d : docs) out.push_back(scorer.score(d));
        return out;
    }

    for (std::size_t i = 0; i < docs.size(); ++i)
        check_order(i > 0, i ? docs[i - 1].priority_year : 0, i ? docs[i - 1].doc.patent_id : std::string(), docs[i],
                    baseline.cutoff_year);
    BaselineLexicon lex = baseline;
    workers = std::max<std::size_t>(1, workers);
    std::size_t begin = 0;
    while (begin < docs.size()) {
        std::size_t end = begin;
        while (end < docs.size() && docs[end].priority_year == docs[begin].priority_year) ++end;
        std::size_t n = end - begin;
        std::vector<DocGrams> grams(n);
        std::vector<NoveltyProfile> profiles(n);
        auto work = [&](std::size_t w) {
            for (std::size_t i = w; i < n; i += workers) {
                grams[i] = extract_grams(docs[begin + i].doc.tokens);
                profiles[i] = profile_for(docs[begin + i], grams[i], lex);
            }
        };
        if (workers == 1) {
            work(0);
        } else {
            std::vector<std::jthread> threads;
            for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work, w);
        }
        for (const auto& g : grams) add_grams(lex, g);
        out.insert(out.end(), profiles.begin(), profiles.end());
        begin = end;
    }
    return out;
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw ValidationError("quantile of empty sample");
    std::sort(values.begin(), values.end());
    double h = (static_cast<double>(values.size()) - 1.0) * p;
    auto lo = static_cast<std::size_t>(std::floor(h));
    auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

void flag_high_novelty(std::vector<NoveltyProfile>& profiles, const HighNoveltyRule& rule) {
    if (rule.kind == HighNoveltyRule::Kind::MinNewPairs) {
        for (auto& p : profiles) p.high_novelty = p.new_pairs >= rule.min_pairs;
        return;
    }
    if (!(rule.q > 0.0 && rule.q < 1.0)) throw ValidationError("top_quantile: q must lie in (0, 1)");
    std::map<int, std::vector<double>> cohorts;
    for (const auto& p : profiles) cohorts[p.priority_year].push_back(static_cast<double>(p.new_pairs));
    std::map<int, double> threshold;
    for (auto& [year, vals] : cohorts) threshold[year] = quantile(std::move(vals), 1.0 - rule.q);
    for (auto& p : profiles) p.high_novelty = static_cast<double>(p.new_pairs) >= threshold[p.priority_year];
}

std::string profiles_to_csv(const std::vector<NoveltyProfile>& profiles) {
    std::string out = "patent_id,new_unigrams,new_bigrams,new_trigrams,new_pairs,high_novelty\n";
    for (const auto& p : profiles)
        out += fmt::format("{},{},{},{},{},{}\n", csv_escape(p.patent_id), p.new_unigrams, p.new_bigrams,
                           p.new_trigrams, p.new_pairs, p.high_novelty ? 1 : 0);
    return out;
}

namespace {

constexpr char kLexMagic[6] = {'G', 'L', 'N', 'V', '1', '\0'};

void put_u32(std::string& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& b, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_section(std::string& b, const std::unordered_set<std::string>& set) {
    std::vector<std::string> sorted(set.begin(), set.end());
    std::sort(sorted.begin(), sorted.end());
    put_u64(b, sorted.size());
    for (const auto& s : sorted) {
        put_u32(b, static_cast<std::uint32_t>(s.size()));
        b += s;
    }
}

struct Cursor {
    std::string_view b;
    std::size_t pos = 0;
    std::string_view take(std::size_t n) {
        if (b.size() - pos < n) throw ValidationError("lexicon file: unexpected EOF");
        auto s = b.substr(pos, n);
        pos += n;
        return s;
    }
    std::uint64_t uint(int w) {
        auto s = take(static_cast<std::size_t>(w));
        std::uint64_t v = 0;
        for (int i = 0; i < w; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
        return v;
    }
};

void get_section(Cursor& c, std::unordered_set<std::string>& set) {
    auto n = c.uint(8);
    std::string prev;
    for (std::uint64_t i = 0; i < n; ++i) {
        auto len = static_cast<std::size_t>(c.uint(4));
        std::string s(c.take(len));
        if (i > 0 && s <= prev) throw ValidationError("lexicon file: section not sorted");
        set.insert(s);
        prev = std::move(s);
    }
}

}  // namespace

std::string serialize_lexicon(const BaselineLexicon& lex) {
    std::string b(kLexMagic, sizeof(kLexMagic));
    put_u32(b, static_cast<std::uint32_t>(lex.cutoff_year));
    put_section(b, lex.unigrams);
    put_section(b, lex.bigrams);
    put_section(b, lex.trigrams);
    put_section(b, lex.pairs);
    return b;
}

BaselineLexicon deserialize_lexicon(std::string_view bytes) {
    Cursor c{bytes};
    if (c.take(sizeof(kLexMagic)) != std::string_view(kLexMagic, sizeof(kLexMagic)))
        throw ValidationError("lexicon file: bad magic or unsupported version (expected GLNV1)");
    BaselineLexicon lex;
    lex.cutoff_year = static_cast<int>(static_cast<std::int32_t>(c.uint(4)));
    get_section(c, lex.unigrams);
    get_section(c, lex.bigrams);
    get_section(c, lex.trigrams);
    get_section(c, lex.pairs);
    if (c.pos != bytes.size()) throw ValidationError("lexicon file: trailing bytes");
    return lex;
}

void save_lexicon(const BaselineLexicon& lex, const std::filesystem::path& path) {
    write_file(path, serialize_lexicon(lex));
}

BaselineLexicon load_lexicon(const std::filesystem::path& path) { return deserialize_lexicon(read_file(path)); }

}  // namespace greenpat
