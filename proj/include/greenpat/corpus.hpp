#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace greenpat {

struct PatentRecord {
    std::string patent_id;
    std::string family_id;
    std::string title;
    std::string abstract;
    std::vector<std::string> cpc_codes;
    std::optional<int> priority_year;
    std::optional<int> grant_year;
    std::optional<std::int64_t> citation_count;
    std::int64_t family_size = 1;
    bool baseline_green = false;
};

struct ProcessedDoc {
    std::string patent_id;
    std::vector<std::string> tokens;
};

enum class PatentFormat { Jsonl, Csv };

struct Reject {
    std::size_t line = 0;
    std::string reason;
    std::string raw;
};

struct PatentLoad {
    std::vector<PatentRecord> records;
    std::vector<Reject> rejects;
};

PatentFormat patent_format_from_path(const std::filesystem::path& path);

// Malformed rows become rejects; duplicate patent ids raise ValidationError.
PatentLoad load_patents(const std::filesystem::path& path, PatentFormat format);
PatentLoad parse_patents_jsonl(std::string_view content);
PatentLoad parse_patents_csv(std::string_view content);

std::string patents_to_jsonl(const std::vector<PatentRecord>& records);
std::string patents_to_csv(const std::vector<PatentRecord>& records);
void save_patents(const std::filesystem::path& path, const std::vector<PatentRecord>& records, PatentFormat format);

// Writes `<input>.rejects.jsonl`; returns the path written.
std::filesystem::path write_rejects(const std::filesystem::path& input, const std::vector<Reject>& rejects);

// ---------------------------------------------------------------------------
// Text normalization

enum class PosTag { Noun, Adj, Verb, Adv, Propn, Other };

std::optional<PosTag> parse_pos_tag(std::string_view tag);

inline constexpr std::string_view kNumTag = "<num>";
inline constexpr std::string_view kMeasureTag = "<measure>";

struct NormalizerResources {
    std::unordered_set<std::string> stopwords;
    std::unordered_map<std::string, std::string> lemmas;
    std::unordered_map<std::string, PosTag> pos_lexicon;
    std::unordered_set<PosTag> retained_pos{PosTag::Noun, PosTag::Adj, PosTag::Verb, PosTag::Adv, PosTag::Propn};

    static NormalizerResources load(const std::filesystem::path& stopwords, const std::filesystem::path& lemmas,
                                    const std::filesystem::path& pos_lexicon);
};

// Lowercases, splits on non-alphanumerics, folds numbers to <num> and
// dimension/unit patterns to <measure>, drops stopwords and non-content POS,
// and lemmatizes. Words missing from the POS lexicon are kept.
//
// Measures: a number carrying a unit suffix ("10mm", "5 kg"), or two or more
// numbers (each with an optional unit) joined by x, X, × or * ("10 x 20",
// "10x20x5", "3 cm × 4 cm"). Numbers: digit runs with optional internal
// '.' or ',' groups.
class Normalizer {
public:
    explicit Normalizer(NormalizerResources resources);

    ProcessedDoc normalize(std::string_view patent_id, std::string_view title, std::string_view abstract) const;
    std::vector<std::string> tokens(std::string_view text) const;

    const NormalizerResources& resources() const { return res_; }

private:
    bool keep(const std::string& surface, const std::string& lemma) const;

    NormalizerResources res_;
};

ProcessedDoc normalize_text(std::string_view title, std::string_view abstract, const Normalizer& normalizer);

// ---------------------------------------------------------------------------
// Firm panel

enum class FirmField : std::size_t {
    Employees,
    AgeYears,
    Sales,
    MarketShare,
    LaborProductivity,
    CapitalIntensity,
    Roce,
    Ebit,
    Tfp,
};
inline constexpr std::size_t kFirmFieldCount = 9;

std::string_view firm_field_name(FirmField f);

struct FirmYear {
    std::string firm_id;
    int year = 0;
    std::string country;
    std::string nace2;
    std::array<double, kFirmFieldCount> values{};
    std::bitset<kFirmFieldCount> missing;
    bool granted_patent = false;
    bool granted_true_green = false;
    bool granted_high_novelty = false;

    std::optional<double> get(FirmField f) const {
        auto i = static_cast<std::size_t>(f);
        if (missing[i]) return std::nullopt;
        return values[i];
    }
    void set(FirmField f, std::optional<double> v) {
        auto i = static_cast<std::size_t>(f);
        missing[i] = !v.has_value();
        values[i] = v.value_or(0.0);
    }
};

// Rows come back sorted by (firm_id, year).
std::vector<FirmYear> load_firm_panel(const std::filesystem::path& path);
std::vector<FirmYear> parse_firm_panel(std::string_view content);
std::string firm_panel_to_csv(const std::vector<FirmYear>& panel);

}  // namespace greenpat
