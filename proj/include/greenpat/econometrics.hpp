#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "greenpat/corpus.hpp"

namespace greenpat {

struct Design {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;
    std::vector<std::string> names;         // one per column of X
    std::vector<std::string> row_ids;       // optional, one per row
    std::vector<std::string> group_labels;  // absorbed fixed effect; empty = none
    std::vector<std::string> cluster_labels;  // empty = heteroskedasticity-robust
    // The trailing n_nuisance columns are fixed-effect dummies; when collinear
    // they are dropped instead of raising.
    std::size_t n_nuisance = 0;

    std::size_t rows() const { return static_cast<std::size_t>(y.size()); }
    void validate() const;
};

// Appends one dummy column per non-reference level (reference = smallest label).
void add_dummies(Design& d, std::span<const std::string> labels, const std::string& prefix, bool nuisance);

struct OlsResult {
    std::vector<std::string> names;
    Eigen::VectorXd coef, se, t, p;
    Eigen::VectorXd residuals;  // within residuals, equal to dummy-regression residuals
    std::size_t n_obs = 0;
    std::size_t n_groups = 0;    // absorbed levels
    std::size_t n_clusters = 0;  // 0 when not clustered
    std::size_t df_resid = 0;
    double r2 = 0, adj_r2 = 0;
    bool degenerate = false;  // outcome has zero variation
    std::vector<std::string> dropped;  // collinear nuisance columns
    Eigen::MatrixXd vcov;
};

// Within-group demeaning over group_labels, least squares by pivoted QR, CR1
// cluster-robust or HC1 covariance. Absorbed levels count as parameters.
OlsResult ols_fixed_effects(const Design& design);

// y and every column of X demeaned within the labels.
Eigen::MatrixXd demean(const Eigen::MatrixXd& m, std::span<const std::string> labels);

struct LogitResult {
    std::vector<std::string> names;
    Eigen::VectorXd coef;
    Eigen::VectorXd fitted;  // P(y = 1 | x)
    std::size_t iterations = 0;
    double log_likelihood = 0;
};

// IRLS; stops when max |score| < tol or after max_iter iterations.
LogitResult logit_fit(const Design& design, double tol = 1e-8, std::size_t max_iter = 100);

double ihs(double x);

// ---------------------------------------------------------------------------
// Firm outcomes

enum class Outcome { Sales, MarketShare, LaborProductivity, CapitalIntensity, Roce, Ebit, Tfp };
inline constexpr Outcome kAllOutcomes[] = {Outcome::Sales, Outcome::MarketShare, Outcome::LaborProductivity,
                                           Outcome::CapitalIntensity, Outcome::Roce, Outcome::Ebit, Outcome::Tfp};

std::string_view outcome_name(Outcome o);
std::optional<Outcome> parse_outcome(std::string_view name);

// Logs for sales, labor productivity, capital intensity and TFP; IHS for
// ROCE; levels for market share and EBIT. Missing or non-positive log inputs
// yield nullopt.
std::optional<double> transformed_outcome(const FirmYear& fy, Outcome o);

enum class Treatment { TrueGreen, HighNoveltyTrueGreen };
enum class ControlPool {
    Patenting,    // untreated firm-years with a grant of any technology
    HighNovelty,  // untreated firm-years with a high-novelty grant
    All,          // every untreated firm-year
};

bool is_treated(const FirmYear& fy, Treatment t);

struct PropensityOptions {
    Treatment treatment = Treatment::TrueGreen;
    ControlPool pool = ControlPool::Patenting;
    bool drop_constant_fe = true;
};

struct PropensityDesign {
    Design design;                      // y = treated, X = covariates + FE dummies
    std::vector<std::size_t> panel_rows;  // design row -> panel index
    std::size_t dropped_pool = 0;       // neither treated nor in the control pool
    std::size_t dropped_no_lag = 0;
    std::size_t dropped_missing = 0;
    std::size_t dropped_constant_fe = 0;  // rows in FE levels with no treatment variation
};

// Covariates: lagged log capital intensity, its yearly log change, lagged
// ROCE, its yearly change, log(1 + age), then country, NACE-2 and year
// dummies. A lag is the same firm's row for year - 1.
PropensityDesign propensity_design(std::span<const FirmYear> panel, const PropensityOptions& opts = {});

struct MatchedPair {
    std::size_t treated;
    std::size_t control;
    double distance;
};

struct MatchResult {
    std::vector<MatchedPair> pairs;
    std::size_t n_treated = 0;
    std::size_t n_untreated = 0;
    std::size_t n_dropped_support = 0;
    std::vector<std::size_t> unmatched_treated;
    double support_lo = 0, support_hi = 0;
};

// Nearest neighbour without replacement inside the common support. Treated
// units go in descending score order (ties by id); each takes the closest
// unmatched control (ties by id).
MatchResult match_nn(std::span<const double> scores, const std::vector<bool>& treated,
                     std::span<const std::string> ids);

struct AtetEstimate {
    double atet = 0, se = 0, t_stat = 0;
    std::size_t n_pairs = 0;
};

// Paired differences: mean, sd/sqrt(n), mean/se.
AtetEstimate atet(std::span<const double> treated_outcomes, std::span<const double> control_outcomes);

struct PsmOutcome {
    Outcome outcome;
    std::optional<AtetEstimate> estimate;
    std::string error;
};

struct PairAudit {
    std::string treated_id, control_id;
    double score_t, score_c;
};

struct PsmResult {
    std::vector<PsmOutcome> outcomes;
    std::vector<PairAudit> pairs;
    std::size_t n_treated = 0, n_untreated = 0, n_dropped_support = 0, n_unmatched_treated = 0;
    std::size_t n_design_rows = 0, n_dropped_design = 0;
};

struct PsmOptions {
    PropensityOptions propensity;
    std::vector<Outcome> outcomes{std::begin(kAllOutcomes), std::end(kAllOutcomes)};
    bool match_within_year = true;
};

PsmResult run_psm(std::span<const FirmYear> panel, const PsmOptions& opts = {});

enum class Split { SizeMedian, EuAccession, Novelty };
std::optional<Split> parse_split(std::string_view name);

struct SubgroupResult {
    std::string name;
    std::optional<PsmResult> result;
    std::string skipped;  // reason when result is empty
};

// Countries that joined the EU before 2000, ISO-2 codes (Greece as GR or EL).
bool is_old_eu_member(std::string_view iso2);
bool is_new_eu_member(std::string_view iso2);

std::vector<SubgroupResult> subgroup_atet(std::span<const FirmYear> panel, Split split, const PsmOptions& opts = {});

struct PremiaRow {
    Outcome outcome;
    std::optional<OlsResult> result;
    std::string error;
};

// One regression per outcome on true-green, patenting and employees with
// NACE-2 absorbed, country and year dummies, firm clusters.
std::vector<PremiaRow> premia_regressions(std::span<const FirmYear> panel,
                                          std::span<const Outcome> outcomes = kAllOutcomes);

Design premia_design(std::span<const FirmYear> panel, Outcome outcome);

}  // namespace greenpat
