#include "greenpat/econometrics.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "greenpat/error.hpp"

namespace greenpat {

void Design::validate() const {
    const auto n = static_cast<Eigen::Index>(y.size());
    if (X.rows() != n) throw ValidationError(fmt::format("design: y has {} rows but X has {}", n, X.rows()));
    if (names.size() != static_cast<std::size_t>(X.cols()))
        throw ValidationError("design: column names do not match X");
    if (!row_ids.empty() && row_ids.size() != rows()) throw ValidationError("design: row_ids length mismatch");
    if (!group_labels.empty() && group_labels.size() != rows())
        throw ValidationError("design: group_labels length mismatch");
    if (!cluster_labels.empty() && cluster_labels.size() != rows())
        throw ValidationError("design: cluster_labels length mismatch");
    if (!y.allFinite() || !X.allFinite()) throw ValidationError("design: non-finite cells");
    if (n_nuisance > names.size()) throw ValidationError("design: n_nuisance exceeds column count");
}

void add_dummies(Design& d, std::span<const std::string> labels, const std::string& prefix, bool nuisance) {
    if (labels.size() != d.rows()) throw ValidationError("add_dummies: label count mismatch");
    if (!nuisance && d.n_nuisance > 0) throw ValidationError("add_dummies: non-nuisance columns must precede nuisance");
    std::set<std::string> levels(labels.begin(), labels.end());
    if (levels.size() < 2) return;
    std::vector<std::string> kept(std::next(levels.begin()), levels.end());
    std::unordered_map<std::string, Eigen::Index> col;
    auto base = d.X.cols();
    d.X.conservativeResize(Eigen::NoChange, base + static_cast<Eigen::Index>(kept.size()));
    for (std::size_t i = 0; i < kept.size(); ++i) {
        col[kept[i]] = base + static_cast<Eigen::Index>(i);
        d.X.col(base + static_cast<Eigen::Index>(i)).setZero();
        d.names.push_back(prefix + kept[i]);
    }
    for (std::size_t r = 0; r < labels.size(); ++r) {
        auto it = col.find(labels[r]);
        if (it != col.end()) d.X(static_cast<Eigen::Index>(r), it->second) = 1.0;
    }
    if (nuisance) d.n_nuisance += kept.size();
}

namespace {

std::vector<std::size_t> level_index(std::span<const std::string> labels, std::size_t* n_levels) {
    std::map<std::string, std::size_t> ids;
    for (const auto& l : labels) ids.emplace(l, 0);
    std::size_t k = 0;
    for (auto& [l, id] : ids) id = k++;
    std::vector<std::size_t> out;
    out.reserve(labels.size());
    for (const auto& l : labels) out.push_back(ids.at(l));
    if (n_levels) *n_levels = k;
    return out;
}

// Sequential independence test: column j is dropped when its component
// orthogonal to the previously kept columns is negligible.
std::vector<Eigen::Index> independent_columns(const Eigen::MatrixXd& X, const std::vector<std::string>& names,
                                              std::size_t n_nuisance, std::vector<std::string>& dropped) {
    const auto p = X.cols();
    std::vector<Eigen::Index> kept;
    if (p == 0) return kept;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
    Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
    std::vector<std::string> bad;
    for (Eigen::Index j = 0; j < p; ++j) {
        double norm = X.col(j).norm();
        double rjj = j < R.rows() ? std::abs(R(j, j)) : 0.0;
        bool dependent = !(norm > 0) || rjj <= 1e-9 * norm;
        if (!dependent) {
            kept.push_back(j);
            continue;
        }
        if (static_cast<std::size_t>(j) >= static_cast<std::size_t>(p) - n_nuisance) dropped.push_back(names[static_cast<std::size_t>(j)]);
        else bad.push_back(names[static_cast<std::size_t>(j)]);
    }
    if (!bad.empty()) {
        std::string msg = "rank deficient design; collinear columns:";
        for (const auto& b : bad) msg += " " + b;
        throw ValidationError(msg);
    }
    return kept;
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& cols) {
    Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = X.col(cols[i]);
    return out;
}

double two_sided_p(double t, double df) {
    if (!std::isfinite(t) || !(df > 0)) return std::numeric_limits<double>::quiet_NaN();
    boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

}  // namespace

Eigen::MatrixXd demean(const Eigen::MatrixXd& m, std::span<const std::string> labels) {
    std::size_t G = 0;
    auto idx = level_index(labels, &G);
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(G), m.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(G));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        auto g = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r)]);
        sums.row(g) += m.row(r);
        counts[g] += 1.0;
    }
    Eigen::MatrixXd out = m;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        auto g = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r)]);
        out.row(r) -= sums.row(g) / counts[g];
    }
    return out;
}

OlsResult ols_fixed_effects(const Design& design) {
    design.validate();
    const std::size_t n = design.rows();
    if (n == 0) throw ValidationError("ols: empty design");

    Eigen::MatrixXd X = design.X;
    Eigen::VectorXd y = design.y;
    OlsResult res;
    if (!design.group_labels.empty()) {
        X = demean(X, design.group_labels);
        y = demean(Eigen::MatrixXd(y), design.group_labels).col(0);
        level_index(design.group_labels, &res.n_groups);
    }

    auto kept = independent_columns(X, design.names, design.n_nuisance, res.dropped);
    X = select_columns(X, kept);
    for (auto j : kept) res.names.push_back(design.names[static_cast<std::size_t>(j)]);
    const auto p = static_cast<std::size_t>(X.cols());
    const std::size_t K = p + res.n_groups;
    if (n <= K) throw ValidationError(fmt::format("ols: {} observations for {} parameters", n, K));
    res.n_obs = n;
    res.df_resid = n - K;

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
    Eigen::MatrixXd R = qr.matrixQR().topLeftCorner(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p))
                            .triangularView<Eigen::Upper>();
    Eigen::VectorXd qty = (qr.householderQ().transpose() * y).head(static_cast<Eigen::Index>(p));
    res.coef = R.triangularView<Eigen::Upper>().solve(qty);
    res.residuals = y - X * res.coef;
    Eigen::MatrixXd Rinv = R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)));
    Eigen::MatrixXd bread = Rinv * Rinv.transpose();

    const Eigen::VectorXd& u = res.residuals;
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    double scale = 1.0;
    double df_t = static_cast<double>(res.df_resid);
    if (!design.cluster_labels.empty()) {
        std::size_t G = 0;
        auto cl = level_index(design.cluster_labels, &G);
        if (G < 2) throw ValidationError("ols: need at least 2 clusters");
        Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(G), static_cast<Eigen::Index>(p));
        for (std::size_t i = 0; i < n; ++i)
            scores.row(static_cast<Eigen::Index>(cl[i])) += u[static_cast<Eigen::Index>(i)] * X.row(static_cast<Eigen::Index>(i));
        meat = scores.transpose() * scores;
        res.n_clusters = G;
        double g = static_cast<double>(G);
        scale = g / (g - 1.0) * (static_cast<double>(n) - 1.0) / static_cast<double>(n - K);
        df_t = g - 1.0;
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            auto r = static_cast<Eigen::Index>(i);
            meat.noalias() += (u[r] * u[r]) * X.row(r).transpose() * X.row(r);
        }
        scale = static_cast<double>(n) / static_cast<double>(n - K);
    }
    res.vcov = scale * bread * meat * bread;
    res.se = res.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();

    double ybar = design.y.mean();
    double tss = (design.y.array() - ybar).square().sum();
    double rss = u.squaredNorm();
    res.degenerate = !(tss > 0);
    res.t.resize(static_cast<Eigen::Index>(p));
    res.p.resize(static_cast<Eigen::Index>(p));
    for (std::size_t j = 0; j < p; ++j) {
        auto jj = static_cast<Eigen::Index>(j);
        double t = res.se[jj] > 0 ? res.coef[jj] / res.se[jj] : std::numeric_limits<double>::quiet_NaN();
        res.t[jj] = t;
        res.p[jj] = two_sided_p(t, df_t);
    }
    if (res.degenerate) {
        res.r2 = res.adj_r2 = std::numeric_limits<double>::quiet_NaN();
    } else {
        res.r2 = 1.0 - rss / tss;
        res.adj_r2 = 1.0 - (rss / static_cast<double>(n - K)) / (tss / (static_cast<double>(n) - 1.0));
    }
    return res;
}

LogitResult logit_fit(const Design& design, double tol, std::size_t max_iter) {
    design.validate();
    const auto n = design.y.size();
    if (n == 0) throw ValidationError("logit: empty design");
    double ones = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double v = design.y[i];
        if (v != 0.0 && v != 1.0) throw ValidationError("logit: outcome must be 0/1");
        ones += v;
    }
    if (ones == 0 || ones == static_cast<double>(n))
        throw RuntimeError("logit: perfect separation (outcome is constant); review covariates");

    std::vector<std::string> dropped;
    auto kept = independent_columns(design.X, design.names, design.n_nuisance, dropped);
    Eigen::MatrixXd X = select_columns(design.X, kept);
    const auto& y = design.y;

    LogitResult res;
    for (auto j : kept) res.names.push_back(design.names[static_cast<std::size_t>(j)]);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
    Eigen::VectorXd p(n);
    bool converged = false;
    for (std::size_t it = 0; it <= max_iter; ++it) {
        Eigen::VectorXd eta = X * beta;
        for (Eigen::Index i = 0; i < n; ++i) p[i] = 1.0 / (1.0 + std::exp(-eta[i]));
        Eigen::VectorXd score = X.transpose() * (y - p);
        res.iterations = it;
        if (score.cwiseAbs().maxCoeff() < tol) {
            converged = true;
            break;
        }
        if (it == max_iter) break;
        if (eta.cwiseAbs().maxCoeff() > 36.0)
            throw RuntimeError("logit: perfect separation detected (diverging linear predictor); review covariates");
        Eigen::VectorXd w = (p.array() * (1.0 - p.array())).matrix();
        Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
            throw RuntimeError("logit: singular information matrix; review covariates");
        beta += ldlt.solve(score);
        if (!beta.allFinite()) throw RuntimeError("logit: non-finite coefficients; review covariates");
    }
    if (!converged)
        throw RuntimeError(fmt::format("logit: no convergence after {} iterations (possible separation); review covariates",
                                       max_iter));
    res.coef = beta;
    res.fitted = p;
    double ll = 0;
    for (Eigen::Index i = 0; i < n; ++i) ll += y[i] > 0 ? std::log(p[i]) : std::log1p(-p[i]);
    res.log_likelihood = ll;
    return res;
}

double ihs(double x) { return std::asinh(x); }

// ---------------------------------------------------------------------------

std::string_view outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Sales: return "sales";
        case Outcome::MarketShare: return "market_share";
        case Outcome::LaborProductivity: return "labor_productivity";
        case Outcome::CapitalIntensity: return "capital_intensity";
        case Outcome::Roce: return "roce";
        case Outcome::Ebit: return "ebit";
        case Outcome::Tfp: return "tfp";
    }
    return "?";
}

std::optional<Outcome> parse_outcome(std::string_view name) {
    for (auto o : kAllOutcomes)
        if (outcome_name(o) == name) return o;
    return std::nullopt;
}

std::optional<double> transformed_outcome(const FirmYear& fy, Outcome o) {
    auto log_of = [](std::optional<double> v) -> std::optional<double> {
        if (!v || !(*v > 0)) return std::nullopt;
        return std::log(*v);
    };
    switch (o) {
        case Outcome::Sales: return log_of(fy.get(FirmField::Sales));
        case Outcome::MarketShare: return fy.get(FirmField::MarketShare);
        case Outcome::LaborProductivity: return log_of(fy.get(FirmField::LaborProductivity));
        case Outcome::CapitalIntensity: return log_of(fy.get(FirmField::CapitalIntensity));
        case Outcome::Roce: {
            auto v = fy.get(FirmField::Roce);
            if (!v) return std::nullopt;
            return ihs(*v);
        }
        case Outcome::Ebit: return fy.get(FirmField::Ebit);
        case Outcome::Tfp: return log_of(fy.get(FirmField::Tfp));
    }
    return std::nullopt;
}

bool is_treated(const FirmYear& fy, Treatment t) {
    if (t == Treatment::TrueGreen) return fy.granted_true_green;
    return fy.granted_true_green && fy.granted_high_novelty;
}

namespace {

bool in_pool(const FirmYear& fy, ControlPool pool) {
    switch (pool) {
        case ControlPool::Patenting: return fy.granted_patent;
        case ControlPool::HighNovelty: return fy.granted_high_novelty;
        case ControlPool::All: return true;
    }
    return false;
}

std::string row_id(const FirmYear& fy) { return fy.firm_id + "@" + std::to_string(fy.year); }

}  // namespace

PropensityDesign propensity_design(std::span<const FirmYear> panel, const PropensityOptions& opts) {
    for (std::size_t i = 1; i < panel.size(); ++i) {
        if (std::tie(panel[i - 1].firm_id, panel[i - 1].year) >= std::tie(panel[i].firm_id, panel[i].year))
            throw ValidationError("propensity_design: panel must be sorted by (firm_id, year) without duplicates");
    }
    PropensityDesign out;
    struct Row {
        std::size_t idx;
        bool treated;
        double cov[5];
    };
    std::vector<Row> rows;
    for (std::size_t i = 0; i < panel.size(); ++i) {
        const auto& fy = panel[i];
        bool treated = is_treated(fy, opts.treatment);
        if (!treated && !in_pool(fy, opts.pool)) {
            ++out.dropped_pool;
            continue;
        }
        if (i == 0 || panel[i - 1].firm_id != fy.firm_id || panel[i - 1].year != fy.year - 1) {
            ++out.dropped_no_lag;
            continue;
        }
        const auto& prev = panel[i - 1];
        auto ci = fy.get(FirmField::CapitalIntensity), ci_lag = prev.get(FirmField::CapitalIntensity);
        auto roce = fy.get(FirmField::Roce), roce_lag = prev.get(FirmField::Roce);
        auto age = fy.get(FirmField::AgeYears);
        if (!ci || !ci_lag || !(*ci > 0) || !(*ci_lag > 0) || !roce || !roce_lag || !age) {
            ++out.dropped_missing;
            continue;
        }
        double lag_log_ci = std::log(*ci_lag);
        rows.push_back({i, treated, {lag_log_ci, std::log(*ci) - lag_log_ci, *roce_lag, *roce - *roce_lag, std::log1p(*age)}});
    }

    if (opts.drop_constant_fe) {
        for (bool changed = true; changed;) {
            changed = false;
            for (int dim = 0; dim < 3; ++dim) {
                auto key = [&](const Row& r) {
                    const auto& fy = panel[r.idx];
                    return dim == 0 ? fy.country : dim == 1 ? fy.nace2 : std::to_string(fy.year);
                };
                std::map<std::string, std::pair<std::size_t, std::size_t>> tally;  // treated, total
                for (const auto& r : rows) {
                    auto& t = tally[key(r)];
                    t.first += r.treated;
                    ++t.second;
                }
                auto before = rows.size();
                std::erase_if(rows, [&](const Row& r) {
                    const auto& t = tally[key(r)];
                    return t.first == 0 || t.first == t.second;
                });
                if (rows.size() != before) {
                    out.dropped_constant_fe += before - rows.size();
                    changed = true;
                }
            }
        }
    }
    std::size_t n_treated = 0;
    for (const auto& r : rows) n_treated += r.treated;
    if (n_treated == 0) throw ValidationError("propensity_design: no treated rows");

    const auto n = static_cast<Eigen::Index>(rows.size());
    Design& d = out.design;
    d.y.resize(n);
    d.X.resize(n, 6);
    d.names = {"const", "lag_log_capital_intensity", "d_log_capital_intensity", "lag_roce", "d_roce", "log_age"};
    std::vector<std::string> country, nace, year;
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        const auto& fy = panel[row.idx];
        d.y[r] = row.treated ? 1.0 : 0.0;
        d.X(r, 0) = 1.0;
        for (int k = 0; k < 5; ++k) d.X(r, k + 1) = row.cov[k];
        d.row_ids.push_back(row_id(fy));
        out.panel_rows.push_back(row.idx);
        country.push_back(fy.country);
        nace.push_back(fy.nace2);
        year.push_back(std::to_string(fy.year));
    }
    add_dummies(d, country, "country_", true);
    add_dummies(d, nace, "nace2_", true);
    add_dummies(d, year, "year_", true);
    return out;
}

MatchResult match_nn(std::span<const double> scores, const std::vector<bool>& treated,
                     std::span<const std::string> ids) {
    const std::size_t n = scores.size();
    if (treated.size() != n || ids.size() != n) throw ValidationError("match_nn: input length mismatch");
    for (double s : scores)
        if (!(s > 0.0 && s < 1.0)) throw ValidationError("match_nn: scores must lie in (0, 1)");

    MatchResult res;
    double min_t = 2, max_t = -1, min_c = 2, max_c = -1;
    for (std::size_t i = 0; i < n; ++i) {
        if (treated[i]) {
            ++res.n_treated;
            min_t = std::min(min_t, scores[i]);
            max_t = std::max(max_t, scores[i]);
        } else {
            ++res.n_untreated;
            min_c = std::min(min_c, scores[i]);
            max_c = std::max(max_c, scores[i]);
        }
    }
    if (res.n_treated == 0 || res.n_untreated == 0) throw ValidationError("match_nn: need treated and control units");
    res.support_lo = std::max(min_t, min_c);
    res.support_hi = std::min(max_t, max_c);
    if (res.support_lo > res.support_hi) throw ValidationError("match_nn: empty common support");

    std::vector<std::size_t> tr, ctl;
    for (std::size_t i = 0; i < n; ++i) {
        if (scores[i] < res.support_lo || scores[i] > res.support_hi) {
            ++res.n_dropped_support;
            continue;
        }
        (treated[i] ? tr : ctl).push_back(i);
    }
    std::sort(tr.begin(), tr.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return ids[a] < ids[b];
    });
    std::sort(ctl.begin(), ctl.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] < scores[b];
        return ids[a] < ids[b];
    });
    std::set<std::size_t> avail;  // positions into ctl
    for (std::size_t i = 0; i < ctl.size(); ++i) avail.insert(avail.end(), i);
    auto first_pos_with_score_at_least = [&](double s) {
        return static_cast<std::size_t>(std::lower_bound(ctl.begin(), ctl.end(), s,
                                                         [&](std::size_t c, double v) { return scores[c] < v; }) -
                                        ctl.begin());
    };

    for (auto t : tr) {
        if (avail.empty()) {
            res.unmatched_treated.push_back(t);
            continue;
        }
        double s = scores[t];
        std::optional<std::size_t> best;
        double best_d = 0;
        auto consider = [&](std::size_t pos) {
            std::size_t c = ctl[pos];
            double d = std::abs(s - scores[c]);
            if (!best || d < best_d || (d == best_d && ids[c] < ids[ctl[*best]])) {
                best = pos;
                best_d = d;
            }
        };
        auto succ = avail.lower_bound(first_pos_with_score_at_least(s));
        if (succ != avail.end()) consider(*succ);
        if (succ != avail.begin()) {
            // smallest-id available control sharing the predecessor's score
            double ps = scores[ctl[*std::prev(succ)]];
            consider(*avail.lower_bound(first_pos_with_score_at_least(ps)));
        }
        avail.erase(*best);
        res.pairs.push_back({t, ctl[*best], best_d});
    }
    return res;
}

AtetEstimate atet(std::span<const double> treated_outcomes, std::span<const double> control_outcomes) {
    if (treated_outcomes.size() != control_outcomes.size()) throw ValidationError("atet: length mismatch");
    const std::size_t n = treated_outcomes.size();
    if (n < 2) throw ValidationError("atet: need at least 2 matched pairs");
    AtetEstimate e;
    e.n_pairs = n;
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = treated_outcomes[i] - control_outcomes[i];
    double mean = std::accumulate(diff.begin(), diff.end(), 0.0) / static_cast<double>(n);
    double ss = 0;
    for (double d : diff) ss += (d - mean) * (d - mean);
    double sd = std::sqrt(ss / static_cast<double>(n - 1));
    e.atet = mean;
    e.se = sd / std::sqrt(static_cast<double>(n));
    if (e.se > 0) e.t_stat = mean / e.se;
    else e.t_stat = mean == 0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), mean);
    return e;
}

PsmResult run_psm(std::span<const FirmYear> panel, const PsmOptions& opts) {
    auto pd = propensity_design(panel, opts.propensity);
    auto fit = logit_fit(pd.design);
    PsmResult res;
    res.n_design_rows = pd.design.rows();
    res.n_dropped_design = pd.dropped_pool + pd.dropped_no_lag + pd.dropped_missing + pd.dropped_constant_fe;

    const std::size_t n = pd.design.rows();
    std::vector<double> scores(fit.fitted.data(), fit.fitted.data() + n);
    std::vector<bool> treated(n);
    for (std::size_t i = 0; i < n; ++i) treated[i] = pd.design.y[static_cast<Eigen::Index>(i)] > 0.5;

    std::vector<MatchedPair> pairs;
    auto run_match = [&](const std::vector<std::size_t>& subset) {
        std::vector<double> s;
        std::vector<bool> t;
        std::vector<std::string> ids;
        std::size_t nt = 0, nc = 0;
        for (auto i : subset) {
            s.push_back(scores[i]);
            t.push_back(treated[i]);
            ids.push_back(pd.design.row_ids[i]);
            (treated[i] ? nt : nc)++;
        }
        res.n_treated += nt;
        res.n_untreated += nc;
        if (nt == 0 || nc == 0) {
            if (opts.match_within_year) {
                res.n_unmatched_treated += nt;
                return;
            }
            throw ValidationError("psm: need treated and control units");
        }
        MatchResult m;
        try {
            m = match_nn(s, t, ids);
        } catch (const ValidationError&) {
            if (!opts.match_within_year) throw;
            res.n_dropped_support += subset.size();
            return;
        }
        res.n_dropped_support += m.n_dropped_support;
        res.n_unmatched_treated += m.unmatched_treated.size();
        for (const auto& p : m.pairs) pairs.push_back({subset[p.treated], subset[p.control], p.distance});
    };
    if (opts.match_within_year) {
        std::map<int, std::vector<std::size_t>> by_year;
        for (std::size_t i = 0; i < n; ++i) by_year[panel[pd.panel_rows[i]].year].push_back(i);
        for (const auto& [year, subset] : by_year) run_match(subset);
    } else {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        run_match(all);
    }
    if (pairs.empty()) throw ValidationError("psm: no matched pairs");

    for (const auto& p : pairs)
        res.pairs.push_back({pd.design.row_ids[p.treated], pd.design.row_ids[p.control], scores[p.treated], scores[p.control]});

    for (auto o : opts.outcomes) {
        PsmOutcome po{o, std::nullopt, {}};
        std::vector<double> yt, yc;
        for (const auto& p : pairs) {
            auto a = transformed_outcome(panel[pd.panel_rows[p.treated]], o);
            auto b = transformed_outcome(panel[pd.panel_rows[p.control]], o);
            if (!a || !b) continue;
            yt.push_back(*a);
            yc.push_back(*b);
        }
        try {
            po.estimate = atet(yt, yc);
        } catch (const Error& e) {
            po.error = e.what();
        }
        res.outcomes.push_back(std::move(po));
    }
    return res;
}

std::optional<Split> parse_split(std::string_view name) {
    if (name == "size_median") return Split::SizeMedian;
    if (name == "eu_accession") return Split::EuAccession;
    if (name == "novelty") return Split::Novelty;
    return std::nullopt;
}

bool is_old_eu_member(std::string_view c) {
    static const std::set<std::string, std::less<>> old = {"AT", "BE", "DK", "FI", "FR", "DE", "GR", "EL",
                                                           "IE", "IT", "LU", "NL", "PT", "ES", "SE"};
    return old.count(c) > 0;
}

bool is_new_eu_member(std::string_view c) {
    static const std::set<std::string, std::less<>> fresh = {"BG", "HR", "CY", "CZ", "EE", "HU", "LV",
                                                             "LT", "MT", "PL", "RO", "SK", "SI"};
    return fresh.count(c) > 0;
}

std::vector<SubgroupResult> subgroup_atet(std::span<const FirmYear> panel, Split split, const PsmOptions& opts) {
    std::vector<std::pair<std::string, std::vector<FirmYear>>> groups;
    PsmOptions o = opts;
    if (split == Split::SizeMedian) {
        std::map<std::string, std::pair<double, std::size_t>> emp;
        for (const auto& fy : panel) {
            if (auto e = fy.get(FirmField::Employees)) {
                emp[fy.firm_id].first += *e;
                ++emp[fy.firm_id].second;
            }
        }
        std::map<std::string, double> avg;
        std::vector<double> avgs;
        for (const auto& [f, s] : emp) {
            avg[f] = s.first / static_cast<double>(s.second);
            avgs.push_back(avg[f]);
        }
        groups = {{"small", {}}, {"large", {}}};
        if (!avgs.empty()) {
            std::sort(avgs.begin(), avgs.end());
            std::size_t m = avgs.size();
            double median = m % 2 ? avgs[m / 2] : 0.5 * (avgs[m / 2 - 1] + avgs[m / 2]);
            for (const auto& fy : panel) {
                auto it = avg.find(fy.firm_id);
                if (it == avg.end()) continue;
                groups[it->second <= median ? 0 : 1].second.push_back(fy);
            }
        }
    } else if (split == Split::EuAccession) {
        groups = {{"old_eu", {}}, {"new_eu", {}}};
        for (const auto& fy : panel) {
            if (is_old_eu_member(fy.country)) groups[0].second.push_back(fy);
            else if (is_new_eu_member(fy.country)) groups[1].second.push_back(fy);
        }
    } else {
        o.propensity.treatment = Treatment::HighNoveltyTrueGreen;
        o.propensity.pool = ControlPool::HighNovelty;
        groups = {{"high_novelty", std::vector<FirmYear>(panel.begin(), panel.end())}};
    }

    std::vector<SubgroupResult> out;
    for (auto& [name, rows] : groups) {
        SubgroupResult sr{name, std::nullopt, {}};
        bool any_treated = std::any_of(rows.begin(), rows.end(),
                                       [&](const FirmYear& fy) { return is_treated(fy, o.propensity.treatment); });
        if (!any_treated) {
            sr.skipped = "no treated firm-years";
        } else {
            try {
                sr.result = run_psm(rows, o);
            } catch (const Error& e) {
                sr.skipped = e.what();
            }
        }
        out.push_back(std::move(sr));
    }
    return out;
}

Design premia_design(std::span<const FirmYear> panel, Outcome outcome) {
    std::vector<const FirmYear*> rows;
    std::vector<double> ys;
    for (const auto& fy : panel) {
        auto y = transformed_outcome(fy, outcome);
        if (!y || !fy.get(FirmField::Employees)) continue;
        rows.push_back(&fy);
        ys.push_back(*y);
    }
    if (rows.empty()) throw ValidationError(fmt::format("premia: no usable rows for {}", outcome_name(outcome)));
    Design d;
    const auto n = static_cast<Eigen::Index>(rows.size());
    d.y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
    d.X.resize(n, 3);
    d.names = {"true_green", "patenting", "firm_size"};
    std::vector<std::string> country, year;
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& fy = *rows[static_cast<std::size_t>(r)];
        d.X(r, 0) = fy.granted_true_green ? 1.0 : 0.0;
        d.X(r, 1) = fy.granted_patent ? 1.0 : 0.0;
        d.X(r, 2) = *fy.get(FirmField::Employees);
        d.row_ids.push_back(row_id(fy));
        d.group_labels.push_back(fy.nace2);
        d.cluster_labels.push_back(fy.firm_id);
        country.push_back(fy.country);
        year.push_back(std::to_string(fy.year));
    }
    add_dummies(d, country, "country_", true);
    add_dummies(d, year, "year_", true);
    return d;
}

std::vector<PremiaRow> premia_regressions(std::span<const FirmYear> panel, std::span<const Outcome> outcomes) {
    std::vector<PremiaRow> out;
    for (auto o : outcomes) {
        PremiaRow row{o, std::nullopt, {}};
        try {
            row.result = ols_fixed_effects(premia_design(panel, o));
        } catch (const Error& e) {
            row.error = e.what();
        }
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace greenpat
