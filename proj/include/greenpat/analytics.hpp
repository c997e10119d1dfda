#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "greenpat/corpus.hpp"
#include "greenpat/econometrics.hpp"

namespace greenpat {

struct ClassCounts {
    std::string class_code;
    std::size_t n_total = 0, n_green = 0, n_true_green = 0;
};

// One row per class prefix of `level` characters, sorted by code. A patent
// counts once in every class it touches (multiple counting across classes).
// true_green is parallel to patents.
std::vector<ClassCounts> class_counts(std::span<const PatentRecord> patents, const std::vector<bool>& true_green,
                                      std::size_t level);

enum class RcaBasis { TrueGreen, Green };

struct RcaRow {
    std::string class_code;
    std::optional<double> rca;  // nullopt when N_c = 0 or the rest has no greens
};

// RCA_c = (G_c / N_c) / (sum_{c' != c} G_c' / sum_{c' != c} N_c'), N = non-green count.
std::vector<RcaRow> rca_index(std::span<const ClassCounts> counts, RcaBasis basis = RcaBasis::TrueGreen);

enum class YearBasis { GrantYear, PriorityYear };
std::optional<YearBasis> parse_year_basis(std::string_view s);

struct ShareRow {
    int year = 0;
    std::size_t n_granted = 0, n_green = 0, n_true_green = 0;
    double share_green = 0, share_true_green = 0;
};

// Granted patents only; years without patents are absent.
std::vector<ShareRow> share_over_time(std::span<const PatentRecord> patents, const std::vector<bool>& true_green,
                                      YearBasis basis = YearBasis::GrantYear);

struct CitationDesign {
    Design design;
    std::vector<std::size_t> patent_rows;  // design row -> patent index
    std::size_t dropped_missing_citations = 0;
    std::size_t dropped_missing_dates = 0;
    std::size_t dropped_missing_class = 0;
    int reference_year = 0;
};

// y = log(citations + 1); X = true_green, age, family_size; groups = primary
// 3-character class x priority year; clusters = family_id. Age is measured in
// years from grant to reference_year (default: latest grant year in the data).
CitationDesign citation_design(std::span<const PatentRecord> patents, const std::vector<bool>& true_green,
                               std::optional<int> reference_year = std::nullopt);

std::string class_counts_to_csv(std::span<const ClassCounts> counts);
std::string rca_to_csv(std::span<const ClassCounts> counts);
std::string shares_to_csv(std::span<const ShareRow> rows);
// class_code,share with share = true green / green, classes without greens omitted.
std::string density_to_csv(std::span<const ClassCounts> counts);

}  // namespace greenpat
