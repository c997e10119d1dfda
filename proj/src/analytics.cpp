#include "greenpat/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "greenpat/error.hpp"
#include "greenpat/textio.hpp"

namespace greenpat {

namespace {

std::string class_prefix(std::string_view code, std::size_t level) {
    auto t = trim(code);
    if (t.size() < level) return {};
    std::string out(t.substr(0, level));
    for (auto& c : out)
        if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    return out;
}

void check_flags(std::span<const PatentRecord> patents, const std::vector<bool>& true_green) {
    if (patents.size() != true_green.size()) throw ValidationError("true-green flags do not match the patent count");
}

}  // namespace

std::vector<ClassCounts> class_counts(std::span<const PatentRecord> patents, const std::vector<bool>& true_green,
                                      std::size_t level) {
    check_flags(patents, true_green);
    if (level < 1) throw ValidationError("class level must be >= 1");
    std::map<std::string, ClassCounts> by;
    for (std::size_t i = 0; i < patents.size(); ++i) {
        std::set<std::string> seen;
        for (const auto& code : patents[i].cpc_codes) {
            auto p = class_prefix(code, level);
            if (p.empty() || !seen.insert(p).second) continue;
            auto& c = by[p];
            c.class_code = p;
            ++c.n_total;
            c.n_green += patents[i].baseline_green;
            c.n_true_green += true_green[i];
        }
    }
    std::vector<ClassCounts> out;
    out.reserve(by.size());
    for (auto& [k, v] : by) out.push_back(std::move(v));
    return out;
}

std::vector<RcaRow> rca_index(std::span<const ClassCounts> counts, RcaBasis basis) {
    if (counts.size() < 2) throw ValidationError("rca_index needs at least 2 classes");
    auto g_of = [&](const ClassCounts& c) {
        return static_cast<double>(basis == RcaBasis::TrueGreen ? c.n_true_green : c.n_green);
    };
    double g_all = 0, n_all = 0;
    for (const auto& c : counts) {
        g_all += g_of(c);
        n_all += static_cast<double>(c.n_total) - g_of(c);
    }
    std::vector<RcaRow> out;
    for (const auto& c : counts) {
        double g = g_of(c), n = static_cast<double>(c.n_total) - g;
        double g_rest = g_all - g, n_rest = n_all - n;
        RcaRow row{c.class_code, std::nullopt};
        if (n > 0 && g_rest > 0 && n_rest > 0) row.rca = (g / n) / (g_rest / n_rest);
        out.push_back(std::move(row));
    }
    return out;
}

std::optional<YearBasis> parse_year_basis(std::string_view s) {
    if (s == "grant_year") return YearBasis::GrantYear;
    if (s == "priority_year") return YearBasis::PriorityYear;
    return std::nullopt;
}

std::vector<ShareRow> share_over_time(std::span<const PatentRecord> patents, const std::vector<bool>& true_green,
                                      YearBasis basis) {
    check_flags(patents, true_green);
    std::map<int, ShareRow> by;
    for (std::size_t i = 0; i < patents.size(); ++i) {
        const auto& p = patents[i];
        if (!p.grant_year) continue;
        auto year = basis == YearBasis::GrantYear ? p.grant_year : p.priority_year;
        if (!year) continue;
        auto& r = by[*year];
        r.year = *year;
        ++r.n_granted;
        r.n_green += p.baseline_green;
        r.n_true_green += true_green[i];
    }
    std::vector<ShareRow> out;
    for (auto& [y, r] : by) {
        r.share_green = static_cast<double>(r.n_green) / static_cast<double>(r.n_granted);
        r.share_true_green = static_cast<double>(r.n_true_green) / static_cast<double>(r.n_granted);
        out.push_back(r);
    }
    return out;
}

CitationDesign citation_design(std::span<const PatentRecord> patents, const std::vector<bool>& true_green,
                               std::optional<int> reference_year) {
    check_flags(patents, true_green);
    CitationDesign out;
    std::vector<std::size_t> rows;
    std::vector<std::string> klass;
    for (std::size_t i = 0; i < patents.size(); ++i) {
        const auto& p = patents[i];
        if (!p.citation_count) {
            ++out.dropped_missing_citations;
            continue;
        }
        if (!p.priority_year || !p.grant_year) {
            ++out.dropped_missing_dates;
            continue;
        }
        std::string k;
        for (const auto& code : p.cpc_codes) {
            k = class_prefix(code, 3);
            if (!k.empty()) break;
        }
        if (k.empty()) {
            ++out.dropped_missing_class;
            continue;
        }
        rows.push_back(i);
        klass.push_back(std::move(k));
    }
    int ref = 0;
    if (reference_year) ref = *reference_year;
    else
        for (auto i : rows) ref = std::max(ref, *patents[i].grant_year);
    out.reference_year = ref;

    Design& d = out.design;
    const auto n = static_cast<Eigen::Index>(rows.size());
    d.y.resize(n);
    d.X.resize(n, 3);
    d.names = {"true_green", "age", "family_size"};
    for (Eigen::Index r = 0; r < n; ++r) {
        auto i = rows[static_cast<std::size_t>(r)];
        const auto& p = patents[i];
        d.y[r] = std::log(static_cast<double>(*p.citation_count) + 1.0);
        d.X(r, 0) = true_green[i] ? 1.0 : 0.0;
        d.X(r, 1) = static_cast<double>(ref - *p.grant_year);
        d.X(r, 2) = static_cast<double>(p.family_size);
        d.row_ids.push_back(p.patent_id);
        d.group_labels.push_back(klass[static_cast<std::size_t>(r)] + "*" + std::to_string(*p.priority_year));
        d.cluster_labels.push_back(p.family_id);
    }
    out.patent_rows = std::move(rows);
    return out;
}

std::string class_counts_to_csv(std::span<const ClassCounts> counts) {
    std::string out = "class_code,patents,green_patents,true_green_patents,true_green_pct\n";
    for (const auto& c : counts) {
        std::optional<double> pct;
        if (c.n_green > 0) pct = 100.0 * static_cast<double>(c.n_true_green) / static_cast<double>(c.n_green);
        out += fmt::format("{},{},{},{},{}\n", csv_escape(c.class_code), c.n_total, c.n_green, c.n_true_green,
                           format_optional(pct));
    }
    return out;
}

std::string rca_to_csv(std::span<const ClassCounts> counts) {
    std::string out = "class_code,rca_green,rca_true_green\n";
    if (counts.size() < 2) return out;
    auto green = rca_index(counts, RcaBasis::Green);
    auto tg = rca_index(counts, RcaBasis::TrueGreen);
    for (std::size_t i = 0; i < counts.size(); ++i)
        out += fmt::format("{},{},{}\n", csv_escape(counts[i].class_code), format_optional(green[i].rca),
                           format_optional(tg[i].rca));
    return out;
}

std::string shares_to_csv(std::span<const ShareRow> rows) {
    std::string out = "year,n_granted,n_green,n_true_green,share_green,share_true_green\n";
    for (const auto& r : rows)
        out += fmt::format("{},{},{},{},{},{}\n", r.year, r.n_granted, r.n_green, r.n_true_green,
                           format_double(r.share_green), format_double(r.share_true_green));
    return out;
}

std::string density_to_csv(std::span<const ClassCounts> counts) {
    std::string out = "class_code,share\n";
    for (const auto& c : counts) {
        if (c.n_green == 0) continue;
        out += fmt::format("{},{}\n", csv_escape(c.class_code),
                           format_double(static_cast<double>(c.n_true_green) / static_cast<double>(c.n_green)));
    }
    return out;
}

}  // namespace greenpat
