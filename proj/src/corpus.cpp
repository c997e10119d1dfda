#include "greenpat/corpus.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "greenpat/error.hpp"
#include "greenpat/textio.hpp"

namespace greenpat {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 10> kPatentFields = {
    "patent_id",      "family_id",   "title",          "abstract",    "cpc_codes",
    "priority_year",  "grant_year",  "citation_count", "family_size", "baseline_green",
};

struct RowError {
    std::string reason;
};

std::optional<int> json_opt_int(const json& obj, std::string_view key) {
    const auto& v = obj.at(std::string(key));
    if (v.is_null()) return std::nullopt;
    if (!v.is_number_integer()) throw RowError{"invalid field: " + std::string(key)};
    return v.get<int>();
}

void check_record(const PatentRecord& r) {
    if (r.patent_id.empty()) throw RowError{"empty field: patent_id"};
    if (r.priority_year && r.grant_year && *r.priority_year > *r.grant_year)
        throw RowError{"invariant violated: priority_year > grant_year"};
    if (r.citation_count && *r.citation_count < 0) throw RowError{"invariant violated: citation_count < 0"};
    if (r.family_size < 1) throw RowError{"invariant violated: family_size < 1"};
}

PatentRecord record_from_json(const json& obj) {
    if (!obj.is_object()) throw RowError{"row is not a JSON object"};
    for (auto key : kPatentFields) {
        if (!obj.contains(std::string(key))) throw RowError{"missing field: " + std::string(key)};
    }
    PatentRecord r;
    auto str = [&](std::string_view key) {
        const auto& v = obj.at(std::string(key));
        if (!v.is_string()) throw RowError{"invalid field: " + std::string(key)};
        return v.get<std::string>();
    };
    r.patent_id = str("patent_id");
    r.family_id = str("family_id");
    r.title = str("title");
    r.abstract = str("abstract");
    const auto& codes = obj.at("cpc_codes");
    if (!codes.is_array()) throw RowError{"invalid field: cpc_codes"};
    for (const auto& c : codes) {
        if (!c.is_string()) throw RowError{"invalid field: cpc_codes"};
        r.cpc_codes.push_back(c.get<std::string>());
    }
    r.priority_year = json_opt_int(obj, "priority_year");
    r.grant_year = json_opt_int(obj, "grant_year");
    const auto& cites = obj.at("citation_count");
    if (cites.is_null()) {
        r.citation_count = std::nullopt;
    } else if (cites.is_number_integer()) {
        r.citation_count = cites.get<std::int64_t>();
    } else {
        throw RowError{"invalid field: citation_count"};
    }
    const auto& fam = obj.at("family_size");
    if (!fam.is_number_integer()) throw RowError{"invalid field: family_size"};
    r.family_size = fam.get<std::int64_t>();
    const auto& green = obj.at("baseline_green");
    if (!green.is_boolean()) throw RowError{"invalid field: baseline_green"};
    r.baseline_green = green.get<bool>();
    check_record(r);
    return r;
}

std::optional<bool> parse_bool(std::string_view s) {
    s = trim(s);
    if (s == "true" || s == "1" || s == "TRUE" || s == "True") return true;
    if (s == "false" || s == "0" || s == "FALSE" || s == "False") return false;
    return std::nullopt;
}

void check_unique_ids(const std::vector<PatentRecord>& records) {
    std::map<std::string, int> seen;
    for (const auto& r : records) ++seen[r.patent_id];
    std::vector<std::string> dups;
    for (const auto& [id, n] : seen)
        if (n > 1) dups.push_back(id);
    if (!dups.empty()) {
        std::string msg = "duplicate patent_id:";
        for (const auto& d : dups) msg += " " + d;
        throw ValidationError(msg);
    }
}

}  // namespace

PatentFormat patent_format_from_path(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    if (ext == ".csv") return PatentFormat::Csv;
    return PatentFormat::Jsonl;
}

PatentLoad parse_patents_jsonl(std::string_view content) {
    PatentLoad out;
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start <= content.size()) {
        auto end = content.find('\n', start);
        if (end == std::string_view::npos) end = content.size();
        std::string_view line = content.substr(start, end - start);
        ++lineno;
        start = end + 1;
        if (trim(line).empty()) {
            if (end == content.size()) break;
            continue;
        }
        try {
            json obj = json::parse(line);
            out.records.push_back(record_from_json(obj));
        } catch (const RowError& e) {
            out.rejects.push_back({lineno, e.reason, std::string(line)});
        } catch (const json::exception& e) {
            out.rejects.push_back({lineno, std::string("invalid JSON: ") + e.what(), std::string(line)});
        }
        if (end == content.size()) break;
    }
    check_unique_ids(out.records);
    return out;
}

PatentLoad parse_patents_csv(std::string_view content) {
    PatentLoad out;
    std::istringstream in{std::string(content)};
    CsvReader reader(in);
    std::vector<std::string> header;
    if (!reader.next(header)) return out;
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[std::string(trim(header[i]))] = i;
    for (auto key : kPatentFields) {
        if (!col.count(std::string(key))) throw ValidationError("patent CSV header lacks column: " + std::string(key));
    }
    std::vector<std::string> row;
    while (reader.next(row)) {
        if (row.size() == 1 && trim(row[0]).empty()) continue;
        try {
            if (row.size() != header.size())
                throw RowError{"expected " + std::to_string(header.size()) + " fields, got " +
                               std::to_string(row.size())};
            auto cell = [&](std::string_view key) -> const std::string& { return row[col.at(std::string(key))]; };
            PatentRecord r;
            r.patent_id = cell("patent_id");
            r.family_id = cell("family_id");
            r.title = cell("title");
            r.abstract = cell("abstract");
            if (!cell("cpc_codes").empty()) r.cpc_codes = split(cell("cpc_codes"), ';');
            auto opt_int = [&](std::string_view key) -> std::optional<long long> {
                const auto& c = cell(key);
                if (trim(c).empty()) return std::nullopt;
                auto v = parse_int(c);
                if (!v) throw RowError{"invalid field: " + std::string(key)};
                return v;
            };
            if (auto v = opt_int("priority_year")) r.priority_year = static_cast<int>(*v);
            if (auto v = opt_int("grant_year")) r.grant_year = static_cast<int>(*v);
            if (auto v = opt_int("citation_count")) r.citation_count = *v;
            auto fam = opt_int("family_size");
            if (!fam) throw RowError{"missing field: family_size"};
            r.family_size = *fam;
            auto green = parse_bool(cell("baseline_green"));
            if (!green) throw RowError{"invalid field: baseline_green"};
            r.baseline_green = *green;
            check_record(r);
            out.records.push_back(std::move(r));
        } catch (const RowError& e) {
            out.rejects.push_back({reader.line(), e.reason, csv_join(row)});
        }
    }
    check_unique_ids(out.records);
    return out;
}

PatentLoad load_patents(const std::filesystem::path& path, PatentFormat format) {
    std::string content = read_file(path);
    return format == PatentFormat::Csv ? parse_patents_csv(content) : parse_patents_jsonl(content);
}

std::string patents_to_jsonl(const std::vector<PatentRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        ordered_json j;
        j["patent_id"] = r.patent_id;
        j["family_id"] = r.family_id;
        j["title"] = r.title;
        j["abstract"] = r.abstract;
        j["cpc_codes"] = r.cpc_codes;
        j["priority_year"] = r.priority_year ? ordered_json(*r.priority_year) : ordered_json(nullptr);
        j["grant_year"] = r.grant_year ? ordered_json(*r.grant_year) : ordered_json(nullptr);
        j["citation_count"] = r.citation_count ? ordered_json(*r.citation_count) : ordered_json(nullptr);
        j["family_size"] = r.family_size;
        j["baseline_green"] = r.baseline_green;
        out += j.dump();
        out.push_back('\n');
    }
    return out;
}

std::string patents_to_csv(const std::vector<PatentRecord>& records) {
    std::vector<std::string> header(kPatentFields.begin(), kPatentFields.end());
    std::string out = csv_join(header) + "\n";
    auto opt = [](const auto& v) { return v ? std::to_string(*v) : std::string(); };
    for (const auto& r : records) {
        std::string codes;
        for (std::size_t i = 0; i < r.cpc_codes.size(); ++i) {
            if (i) codes.push_back(';');
            codes += r.cpc_codes[i];
        }
        out += csv_join({r.patent_id, r.family_id, r.title, r.abstract, codes, opt(r.priority_year),
                         opt(r.grant_year), opt(r.citation_count), std::to_string(r.family_size),
                         r.baseline_green ? "true" : "false"});
        out.push_back('\n');
    }
    return out;
}

void save_patents(const std::filesystem::path& path, const std::vector<PatentRecord>& records, PatentFormat format) {
    write_file(path, format == PatentFormat::Csv ? patents_to_csv(records) : patents_to_jsonl(records));
}

std::filesystem::path write_rejects(const std::filesystem::path& input, const std::vector<Reject>& rejects) {
    std::filesystem::path out = input;
    out += ".rejects.jsonl";
    std::string body;
    for (const auto& r : rejects) {
        ordered_json j;
        j["line"] = r.line;
        j["reason"] = r.reason;
        j["raw"] = r.raw;
        body += j.dump(-1, ' ', false, json::error_handler_t::replace);
        body.push_back('\n');
    }
    write_file(out, body);
    return out;
}

// ---------------------------------------------------------------------------

std::optional<PosTag> parse_pos_tag(std::string_view tag) {
    tag = trim(tag);
    if (tag == "NOUN") return PosTag::Noun;
    if (tag == "ADJ") return PosTag::Adj;
    if (tag == "VERB") return PosTag::Verb;
    if (tag == "ADV") return PosTag::Adv;
    if (tag == "PROPN") return PosTag::Propn;
    if (tag == "OTHER") return PosTag::Other;
    return std::nullopt;
}

namespace {

bool is_ascii_alnum(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string lowercase(std::string_view in) {
    std::string s(in);
    for (std::size_t i = 0; i < s.size(); ++i) {
        auto c = static_cast<unsigned char>(s[i]);
        if (c >= 'A' && c <= 'Z') {
            s[i] = static_cast<char>(c + 32);
        } else if (c == 0xC3 && i + 1 < s.size()) {
            // Latin-1 supplement capitals U+00C0..U+00DE, except U+00D7 (multiplication sign)
            auto d = static_cast<unsigned char>(s[i + 1]);
            if (d >= 0x80 && d <= 0x9E && d != 0x97) s[i + 1] = static_cast<char>(d + 0x20);
            ++i;
        }
    }
    return s;
}

bool is_times_sign(std::string_view s, std::size_t i) {
    return i + 1 < s.size() && static_cast<unsigned char>(s[i]) == 0xC3 && static_cast<unsigned char>(s[i + 1]) == 0x97;
}

const std::set<std::string, std::less<>>& units() {
    static const std::set<std::string, std::less<>> u = {
        "nm",  "um",  "mm",  "cm",  "dm",  "m",   "km",  "ft",  "inch", "g",   "mg",  "kg",  "l",
        "ml",  "w",   "kw",  "mw",  "gw",  "wh",  "kwh", "mwh", "gwh",  "v",   "kv",  "mv",  "ma",
        "ah",  "mah", "hz",  "khz", "mhz", "ghz", "pa",  "kpa", "mpa",  "gpa", "bar", "mbar", "psi",
        "ms",  "rpm", "db",  "mol", "ppm", "wt",  "vol", "nm3", "m2",   "m3",  "cm2", "cm3", "mm2",
        "kj",  "mj",  "kcal", "lm", "lx",
    };
    return u;
}

// NUM := digits ([.,] digits)*
std::size_t scan_number(std::string_view s, std::size_t i) {
    std::size_t j = i;
    if (j >= s.size() || !is_digit(s[j])) return i;
    while (j < s.size() && is_digit(s[j])) ++j;
    while (j + 1 < s.size() && (s[j] == '.' || s[j] == ',') && is_digit(s[j + 1])) {
        ++j;
        while (j < s.size() && is_digit(s[j])) ++j;
    }
    return j;
}

bool is_number(std::string_view s) { return !s.empty() && scan_number(s, 0) == s.size(); }

// term := NUM unit?
std::size_t scan_term(std::string_view s, std::size_t i) {
    std::size_t j = scan_number(s, i);
    if (j == i) return i;
    std::size_t k = j;
    while (k < s.size() && s[k] >= 'a' && s[k] <= 'z' && s[k] != 'x') ++k;
    while (k < s.size() && is_digit(s[k]) && k > j) ++k;  // m2, cm3
    if (k > j && units().count(s.substr(j, k - j))) return k;
    return j;
}

// Single alphanumeric run that is itself a measure: "10mm", "10x20", "3cmx4cm".
bool is_attached_measure(std::string_view s) {
    std::size_t j = scan_term(s, 0);
    if (j == 0) return false;
    bool has_unit = j > scan_number(s, 0);
    int terms = 1;
    while (j < s.size() && s[j] == 'x') {
        std::size_t k = scan_term(s, j + 1);
        if (k == j + 1) return false;
        if (k > scan_number(s, j + 1)) has_unit = true;
        j = k;
        ++terms;
    }
    return j == s.size() && (terms >= 2 || has_unit);
}

enum class LexKind { Word, Number, Measure, Times, Tag };

struct Lexeme {
    LexKind kind;
    std::string text;
};

std::vector<Lexeme> lex(std::string_view raw) {
    std::string s = lowercase(raw);
    std::vector<Lexeme> out;
    std::size_t i = 0;
    while (i < s.size()) {
        auto c = static_cast<unsigned char>(s[i]);
        if (c == '<') {
            std::string_view rest = std::string_view(s).substr(i);
            if (rest.starts_with(kNumTag)) {
                out.push_back({LexKind::Tag, std::string(kNumTag)});
                i += kNumTag.size();
                continue;
            }
            if (rest.starts_with(kMeasureTag)) {
                out.push_back({LexKind::Tag, std::string(kMeasureTag)});
                i += kMeasureTag.size();
                continue;
            }
        }
        if (is_times_sign(s, i)) {
            out.push_back({LexKind::Times, "x"});
            i += 2;
            continue;
        }
        if (c == '*') {
            out.push_back({LexKind::Times, "x"});
            ++i;
            continue;
        }
        if (is_ascii_alnum(c) || c >= 0x80) {
            std::size_t j = i;
            while (j < s.size()) {
                auto d = static_cast<unsigned char>(s[j]);
                if (is_times_sign(s, j)) break;
                if (is_ascii_alnum(d) || d >= 0x80) {
                    ++j;
                } else if ((d == '.' || d == ',') && j > i && is_digit(s[j - 1]) && j + 1 < s.size() &&
                           is_digit(s[j + 1])) {
                    ++j;
                } else {
                    break;
                }
            }
            std::string run = s.substr(i, j - i);
            LexKind kind = LexKind::Word;
            if (is_number(run)) kind = LexKind::Number;
            else if (is_attached_measure(run)) kind = LexKind::Measure;
            out.push_back({kind, std::move(run)});
            i = j;
            continue;
        }
        ++i;  // special character
    }
    return out;
}

bool is_unit_word(const Lexeme& l) { return l.kind == LexKind::Word && units().count(l.text); }
bool is_times(const Lexeme& l) { return l.kind == LexKind::Times || (l.kind == LexKind::Word && l.text == "x"); }

struct Piece {
    bool tag;
    std::string text;
};

// Folds number/measure sequences into tags.
std::vector<Piece> fold_measures(const std::vector<Lexeme>& lx) {
    std::vector<Piece> out;
    std::size_t i = 0;
    auto term_at = [&](std::size_t k, bool& has_unit) -> std::size_t {
        // returns lexemes consumed by a term at k, 0 if none
        if (k >= lx.size()) return 0;
        if (lx[k].kind == LexKind::Measure) {
            has_unit = true;
            return 1;
        }
        if (lx[k].kind != LexKind::Number) return 0;
        if (k + 1 < lx.size() && is_unit_word(lx[k + 1])) {
            has_unit = true;
            return 2;
        }
        return 1;
    };
    while (i < lx.size()) {
        const auto& l = lx[i];
        if (l.kind == LexKind::Number || l.kind == LexKind::Measure) {
            bool has_unit = false;
            std::size_t j = i + term_at(i, has_unit);
            int terms = 1;
            while (j + 1 < lx.size() && is_times(lx[j])) {
                bool u = false;
                std::size_t n = term_at(j + 1, u);
                if (n == 0) break;
                has_unit = has_unit || u;
                j += 1 + n;
                ++terms;
            }
            bool measure = terms >= 2 || has_unit;
            out.push_back({true, std::string(measure ? kMeasureTag : kNumTag)});
            i = j;
            continue;
        }
        if (l.kind == LexKind::Tag) out.push_back({true, l.text});
        else if (l.kind == LexKind::Word) out.push_back({false, l.text});
        ++i;  // stray times sign is a special character
    }
    return out;
}

bool is_single_word(const std::string& s) {
    auto lx = lex(s);
    return lx.size() == 1 && lx[0].kind == LexKind::Word && lx[0].text == s;
}

}  // namespace

NormalizerResources NormalizerResources::load(const std::filesystem::path& stopwords,
                                              const std::filesystem::path& lemmas,
                                              const std::filesystem::path& pos_lexicon) {
    NormalizerResources r;
    for (const auto& line : read_lines(stopwords)) {
        auto w = trim(line);
        if (w.empty() || w.front() == '#') continue;
        r.stopwords.insert(lowercase(w));
    }
    for (const auto& line : read_lines(lemmas)) {
        if (trim(line).empty() || line.front() == '#') continue;
        auto parts = split(line, '\t');
        if (parts.size() != 2) throw ValidationError("lemma map: malformed line: " + line);
        r.lemmas[lowercase(trim(parts[0]))] = lowercase(trim(parts[1]));
    }
    for (const auto& line : read_lines(pos_lexicon)) {
        if (trim(line).empty() || line.front() == '#') continue;
        auto parts = split(line, '\t');
        if (parts.size() != 2) throw ValidationError("POS lexicon: malformed line: " + line);
        auto tag = parse_pos_tag(parts[1]);
        if (!tag) throw ValidationError("POS lexicon: unknown tag '" + parts[1] + "'");
        r.pos_lexicon[lowercase(trim(parts[0]))] = *tag;
    }
    return r;
}

Normalizer::Normalizer(NormalizerResources resources) : res_(std::move(resources)) {
    // Drop lemma entries that would not survive re-tokenization, then resolve
    // chains so that lemma(lemma(w)) == lemma(w).
    std::unordered_map<std::string, std::string> clean;
    for (auto& [surface, lemma] : res_.lemmas) {
        if (is_single_word(surface) && is_single_word(lemma)) clean.emplace(surface, lemma);
    }
    std::unordered_map<std::string, std::string> resolved;
    for (const auto& [surface, lemma] : clean) {
        std::string cur = lemma;
        std::set<std::string> seen{surface};
        for (;;) {
            auto it = clean.find(cur);
            if (it == clean.end() || seen.count(cur)) break;
            seen.insert(cur);
            cur = it->second;
        }
        resolved.emplace(surface, cur);
    }
    // A lemma that maps elsewhere through a cycle is treated as a fixed point.
    for (auto& [surface, lemma] : resolved) {
        auto it = resolved.find(lemma);
        if (it != resolved.end() && it->second != lemma) it->second = lemma;
    }
    res_.lemmas = std::move(resolved);
}

bool Normalizer::keep(const std::string& surface, const std::string& lemma) const {
    if (res_.stopwords.count(surface) || res_.stopwords.count(lemma)) return false;
    auto pos_ok = [&](const std::string& w) {
        auto it = res_.pos_lexicon.find(w);
        return it == res_.pos_lexicon.end() || res_.retained_pos.count(it->second) > 0;
    };
    return pos_ok(surface) && pos_ok(lemma);
}

std::vector<std::string> Normalizer::tokens(std::string_view text) const {
    std::vector<std::string> out;
    for (auto& piece : fold_measures(lex(text))) {
        if (piece.tag) {
            out.push_back(std::move(piece.text));
            continue;
        }
        auto it = res_.lemmas.find(piece.text);
        const std::string& lemma = it == res_.lemmas.end() ? piece.text : it->second;
        if (keep(piece.text, lemma)) out.push_back(lemma);
    }
    return out;
}

ProcessedDoc Normalizer::normalize(std::string_view patent_id, std::string_view title,
                                   std::string_view abstract) const {
    ProcessedDoc doc;
    doc.patent_id = std::string(patent_id);
    doc.tokens = tokens(title);
    auto rest = tokens(abstract);
    doc.tokens.insert(doc.tokens.end(), std::make_move_iterator(rest.begin()), std::make_move_iterator(rest.end()));
    return doc;
}

ProcessedDoc normalize_text(std::string_view title, std::string_view abstract, const Normalizer& normalizer) {
    return normalizer.normalize("", title, abstract);
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::array<std::string_view, kFirmFieldCount> kFirmFieldNames = {
    "employees", "age_years", "sales", "market_share", "labor_productivity", "capital_intensity",
    "roce",      "ebit",      "tfp",
};

}  // namespace

std::string_view firm_field_name(FirmField f) { return kFirmFieldNames[static_cast<std::size_t>(f)]; }

std::vector<FirmYear> parse_firm_panel(std::string_view content) {
    std::istringstream in{std::string(content)};
    CsvReader reader(in);
    std::vector<std::string> header;
    if (!reader.next(header)) throw ValidationError("firm panel: empty file");
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[std::string(trim(header[i]))] = i;
    std::vector<std::string> required = {"firm_id", "year", "country", "nace2", "granted_patent",
                                         "granted_true_green", "granted_high_novelty"};
    for (auto name : kFirmFieldNames) required.emplace_back(name);
    for (const auto& r : required) {
        if (!col.count(r)) throw ValidationError("firm panel: header lacks column: " + r);
    }

    std::vector<FirmYear> panel;
    std::vector<std::string> row;
    while (reader.next(row)) {
        if (row.size() == 1 && trim(row[0]).empty()) continue;
        auto where = "firm panel line " + std::to_string(reader.line()) + ": ";
        if (row.size() != header.size()) throw ValidationError(where + "wrong field count");
        auto cell = [&](const std::string& key) { return std::string(trim(row[col.at(key)])); };
        FirmYear fy;
        fy.firm_id = cell("firm_id");
        if (fy.firm_id.empty()) throw ValidationError(where + "empty firm_id");
        auto year = parse_int(cell("year"));
        if (!year) throw ValidationError(where + "invalid year");
        fy.year = static_cast<int>(*year);
        fy.country = cell("country");
        fy.nace2 = cell("nace2");
        for (std::size_t f = 0; f < kFirmFieldCount; ++f) {
            std::string name(kFirmFieldNames[f]);
            auto raw = cell(name);
            if (raw.empty()) {
                fy.set(static_cast<FirmField>(f), std::nullopt);
                continue;
            }
            auto v = parse_double(raw);
            if (!v || !std::isfinite(*v)) throw ValidationError(where + "invalid " + name + " '" + raw + "'");
            fy.set(static_cast<FirmField>(f), v);
        }
        auto nonneg = [&](FirmField f) {
            auto v = fy.get(f);
            if (v && *v < 0) throw ValidationError(where + std::string(firm_field_name(f)) + " must be >= 0");
        };
        nonneg(FirmField::Employees);
        nonneg(FirmField::AgeYears);
        nonneg(FirmField::Sales);
        if (auto ms = fy.get(FirmField::MarketShare); ms && (*ms < 0.0 || *ms > 1.0))
            throw ValidationError(where + "market_share outside [0,1]");
        auto flag = [&](const std::string& key) {
            auto raw = cell(key);
            if (raw.empty()) return false;
            auto b = parse_bool(raw);
            if (!b) throw ValidationError(where + "invalid " + key);
            return *b;
        };
        fy.granted_patent = flag("granted_patent");
        fy.granted_true_green = flag("granted_true_green");
        fy.granted_high_novelty = flag("granted_high_novelty");
        panel.push_back(std::move(fy));
    }
    std::sort(panel.begin(), panel.end(),
              [](const FirmYear& a, const FirmYear& b) { return std::tie(a.firm_id, a.year) < std::tie(b.firm_id, b.year); });
    for (std::size_t i = 1; i < panel.size(); ++i) {
        if (panel[i].firm_id == panel[i - 1].firm_id && panel[i].year == panel[i - 1].year)
            throw ValidationError("firm panel: duplicate (firm_id, year): (" + panel[i].firm_id + ", " +
                                  std::to_string(panel[i].year) + ")");
    }
    return panel;
}

std::vector<FirmYear> load_firm_panel(const std::filesystem::path& path) { return parse_firm_panel(read_file(path)); }

std::string firm_panel_to_csv(const std::vector<FirmYear>& panel) {
    std::vector<std::string> header = {"firm_id", "year", "country", "nace2"};
    for (auto n : kFirmFieldNames) header.emplace_back(n);
    header.insert(header.end(), {"granted_patent", "granted_true_green", "granted_high_novelty"});
    std::string out = csv_join(header) + "\n";
    for (const auto& fy : panel) {
        std::vector<std::string> row = {fy.firm_id, std::to_string(fy.year), fy.country, fy.nace2};
        for (std::size_t f = 0; f < kFirmFieldCount; ++f) row.push_back(format_optional(fy.get(static_cast<FirmField>(f))));
        row.push_back(fy.granted_patent ? "1" : "0");
        row.push_back(fy.granted_true_green ? "1" : "0");
        row.push_back(fy.granted_high_novelty ? "1" : "0");
        out += csv_join(row) + "\n";
    }
    return out;
}

}  // namespace greenpat
