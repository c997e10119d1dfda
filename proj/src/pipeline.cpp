#include "greenpat/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "greenpat/corpus.hpp"
#include "greenpat/dictionary.hpp"
#include "greenpat/error.hpp"
#include "greenpat/textio.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace greenpat {

std::string sha256_hex(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw RuntimeError("sha256 digest failed");
    std::string out;
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
    return out;
}

std::uint64_t stage_seed(std::uint64_t root, std::string_view stage) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : stage) h = (h ^ c) * 1099511628211ull;
    std::uint64_t z = root ^ h;
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Config

namespace {

std::string unquote(std::string v) {
    auto t = std::string(trim(v));
    if (t.size() >= 2 && (t.front() == '"' || t.front() == '\'') && t.back() == t.front())
        return t.substr(1, t.size() - 2);
    return t;
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
    if constexpr (std::is_floating_point_v<T>) {
        auto d = parse_double(v);
        if (!d) throw ValidationError(fmt::format("config {}: '{}' is not a number", key, v));
        return static_cast<T>(*d);
    } else {
        auto i = parse_int(v);
        if (!i || (std::is_unsigned_v<T> && *i < 0))
            throw ValidationError(fmt::format("config {}: '{}' is not a valid integer", key, v));
        return static_cast<T>(*i);
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError(fmt::format("config {}: '{}' is not a boolean", key, v));
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& v) {
    std::vector<T> out;
    for (auto& part : split(v, ',')) {
        auto t = std::string(trim(part));
        if (!t.empty()) out.push_back(parse_number<T>(key, t));
    }
    if (out.empty()) throw ValidationError(fmt::format("config {}: empty list", key));
    return out;
}

std::vector<std::string> parse_words(const std::string& v) {
    std::vector<std::string> out;
    for (auto& part : split(v, ',')) {
        auto t = std::string(trim(part));
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

std::string path_str(const fs::path& p, const fs::path& base) {
    if (p.empty()) return {};
    auto rel = p.lexically_relative(base);
    return (rel.empty() ? p : rel).generic_string();
}

std::string_view pool_name(ControlPool p) {
    switch (p) {
        case ControlPool::Patenting: return "patenting";
        case ControlPool::HighNovelty: return "high_novelty";
        case ControlPool::All: return "all";
    }
    return "?";
}

std::string_view split_name(Split s) {
    switch (s) {
        case Split::SizeMedian: return "size_median";
        case Split::EuAccession: return "eu_accession";
        case Split::Novelty: return "novelty";
    }
    return "?";
}

}  // namespace

PipelineConfig parse_config(std::string_view text, const fs::path& base_dir) {
    static const std::set<std::string> kSections = {"paths",      "run",     "embedding", "tune",
                                                    "dictionary", "novelty", "stats",     "psm"};
    // read_ini drops sections with no keys, so check headers on the raw text too
    {
        std::istringstream lines{std::string(text)};
        std::string line;
        while (std::getline(lines, line)) {
            auto b = line.find_first_not_of(" \t\r");
            auto e = line.find_last_not_of(" \t\r");
            if (b == std::string::npos || line[b] != '[' || line[e] != ']') continue;
            auto name = line.substr(b + 1, e - b - 1);
            if (!kSections.count(name)) throw ValidationError("config: unknown section [" + name + "]");
        }
    }
    boost::property_tree::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ValidationError(fmt::format("config parse error at line {}: {}", e.line(), e.message()));
    }

    PipelineConfig cfg;
    cfg.base_dir = fs::absolute(base_dir).lexically_normal();
    auto resolve = [&](const std::string& v) -> fs::path {
        if (v.empty()) return {};
        fs::path p(v);
        return (p.is_absolute() ? p : cfg.base_dir / p).lexically_normal();
    };

    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ValidationError(fmt::format("config: key '{}' outside any section", section));
        if (!kSections.count(section)) throw ValidationError("config: unknown section [" + section + "]");
        for (const auto& [key, node] : body) {
            std::string v = unquote(node.data());
            std::string where = section + "." + key;
            auto& e = cfg.embedding;
            if (section == "paths") {
                auto p = resolve(v);
                if (key == "corpus") cfg.paths.corpus = p;
                else if (key == "firms") cfg.paths.firms = p;
                else if (key == "stopwords") cfg.paths.stopwords = p;
                else if (key == "lemmas") cfg.paths.lemmas = p;
                else if (key == "pos") cfg.paths.pos = p;
                else if (key == "seeds") cfg.paths.seeds = p;
                else if (key == "rules") cfg.paths.rules = p;
                else if (key == "exclusions") cfg.paths.exclusions = p;
                else if (key == "gold") cfg.paths.gold = p;
                else if (key == "model") cfg.paths.model = p;
                else if (key == "out") cfg.paths.out = p;
                else throw ValidationError("config: unknown key " + where);
            } else if (section == "run") {
                if (key == "seed") cfg.seed = parse_number<std::uint64_t>(where, v);
                else if (key == "workers") cfg.workers = parse_number<std::size_t>(where, v);
                else throw ValidationError("config: unknown key " + where);
            } else if (section == "embedding") {
                if (key == "d") e.d = parse_number<std::size_t>(where, v);
                else if (key == "c") e.c = parse_number<std::size_t>(where, v);
                else if (key == "min_count") e.min_count = parse_number<std::uint64_t>(where, v);
                else if (key == "epochs") e.epochs = parse_number<std::size_t>(where, v);
                else if (key == "learning_rate") e.learning_rate = parse_number<double>(where, v);
                else if (key == "min_learning_rate") e.min_learning_rate = parse_number<double>(where, v);
                else if (key == "negatives") e.negatives = parse_number<std::size_t>(where, v);
                else if (key == "loss") {
                    if (v == "full_softmax") e.loss = LossKind::FullSoftmax;
                    else if (v == "negative_sampling") e.loss = LossKind::NegativeSampling;
                    else throw ValidationError(fmt::format("config {}: expected full_softmax or negative_sampling", where));
                } else throw ValidationError("config: unknown key " + where);
            } else if (section == "tune") {
                if (key == "c") cfg.tune.c = parse_list<std::size_t>(where, v);
                else if (key == "min_count") cfg.tune.min_count = parse_list<std::uint64_t>(where, v);
                else if (key == "d") cfg.tune.d = parse_list<std::size_t>(where, v);
                else throw ValidationError("config: unknown key " + where);
            } else if (section == "dictionary") {
                if (key == "k") cfg.expand_k = parse_number<std::size_t>(where, v);
                else if (key == "include_expanded") cfg.include_expanded = parse_bool(where, v);
                else throw ValidationError("config: unknown key " + where);
            } else if (section == "novelty") {
                if (key == "cutoff_year") cfg.cutoff_year = parse_number<int>(where, v);
                else if (key == "q") cfg.high_novelty.q = parse_number<double>(where, v);
                else if (key == "min_pairs") cfg.high_novelty.min_pairs = parse_number<std::size_t>(where, v);
                else if (key == "rule") {
                    if (v == "top_quantile") cfg.high_novelty.kind = HighNoveltyRule::Kind::TopQuantile;
                    else if (v == "min_new_pairs") cfg.high_novelty.kind = HighNoveltyRule::Kind::MinNewPairs;
                    else throw ValidationError(fmt::format("config {}: expected top_quantile or min_new_pairs", where));
                } else if (key == "mode") {
                    if (v == "strict") cfg.novelty_mode = NoveltyMode::Strict;
                    else if (v == "year_cohort") cfg.novelty_mode = NoveltyMode::YearCohort;
                    else throw ValidationError(fmt::format("config {}: expected strict or year_cohort", where));
                } else throw ValidationError("config: unknown key " + where);
            } else if (section == "stats") {
                if (key == "class_level") {
                    cfg.class_level = parse_number<std::size_t>(where, v);
                    if (cfg.class_level != 1 && cfg.class_level != 3)
                        throw ValidationError(fmt::format("config {}: expected 1 or 3", where));
                } else if (key == "year_basis") {
                    auto b = parse_year_basis(v);
                    if (!b) throw ValidationError(fmt::format("config {}: expected grant_year or priority_year", where));
                    cfg.year_basis = *b;
                } else throw ValidationError("config: unknown key " + where);
            } else if (section == "psm") {
                if (key == "pool") {
                    if (v == "patenting") cfg.pool = ControlPool::Patenting;
                    else if (v == "high_novelty") cfg.pool = ControlPool::HighNovelty;
                    else if (v == "all") cfg.pool = ControlPool::All;
                    else throw ValidationError(fmt::format("config {}: expected patenting, high_novelty or all", where));
                } else if (key == "match_within_year") cfg.match_within_year = parse_bool(where, v);
                else if (key == "splits") {
                    cfg.splits.clear();
                    for (const auto& w : parse_words(v)) {
                        auto s = parse_split(w);
                        if (!s) throw ValidationError(fmt::format("config {}: unknown split '{}'", where, w));
                        cfg.splits.push_back(*s);
                    }
                } else if (key == "outcomes") {
                    cfg.outcomes.clear();
                    for (const auto& w : parse_words(v)) {
                        auto o = parse_outcome(w);
                        if (!o) throw ValidationError(fmt::format("config {}: unknown outcome '{}'", where, w));
                        cfg.outcomes.push_back(*o);
                    }
                    if (cfg.outcomes.empty()) throw ValidationError(fmt::format("config {}: empty list", where));
                } else throw ValidationError("config: unknown key " + where);
            } else {
                throw ValidationError("config: unknown section [" + section + "]");
            }
        }
    }
    if (cfg.workers < 1) throw ValidationError("config run.workers must be >= 1");
    cfg.embedding.validate();
    if (cfg.expand_k < 1) throw ValidationError("config dictionary.k must be >= 1");
    return cfg;
}

PipelineConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw ValidationError("config file not found: " + path.string());
    return parse_config(read_file(path), fs::absolute(path).parent_path());
}

std::string config_to_json(const PipelineConfig& cfg) {
    const auto& b = cfg.base_dir;
    ojson j;
    const auto& p = cfg.paths;
    j["paths"] = {{"corpus", path_str(p.corpus, b)},       {"firms", path_str(p.firms, b)},
                  {"stopwords", path_str(p.stopwords, b)}, {"lemmas", path_str(p.lemmas, b)},
                  {"pos", path_str(p.pos, b)},             {"seeds", path_str(p.seeds, b)},
                  {"rules", path_str(p.rules, b)},         {"exclusions", path_str(p.exclusions, b)},
                  {"gold", path_str(p.gold, b)},           {"model", path_str(p.model, b)}};
    const auto& e = cfg.embedding;
    j["embedding"] = {{"d", e.d},
                      {"c", e.c},
                      {"min_count", e.min_count},
                      {"epochs", e.epochs},
                      {"learning_rate", e.learning_rate},
                      {"min_learning_rate", e.min_learning_rate},
                      {"loss", e.loss == LossKind::FullSoftmax ? "full_softmax" : "negative_sampling"},
                      {"negatives", e.negatives}};
    j["tune"] = {{"c", cfg.tune.c}, {"min_count", cfg.tune.min_count}, {"d", cfg.tune.d}};
    j["dictionary"] = {{"k", cfg.expand_k}, {"include_expanded", cfg.include_expanded}};
    j["novelty"] = {{"cutoff_year", cfg.cutoff_year},
                    {"rule", cfg.high_novelty.kind == HighNoveltyRule::Kind::TopQuantile ? "top_quantile" : "min_new_pairs"},
                    {"q", cfg.high_novelty.q},
                    {"min_pairs", cfg.high_novelty.min_pairs},
                    {"mode", cfg.novelty_mode == NoveltyMode::Strict ? "strict" : "year_cohort"}};
    j["stats"] = {{"class_level", cfg.class_level},
                  {"year_basis", cfg.year_basis == YearBasis::GrantYear ? "grant_year" : "priority_year"}};
    std::vector<std::string> splits, outcomes;
    for (auto s : cfg.splits) splits.emplace_back(split_name(s));
    for (auto o : cfg.outcomes) outcomes.emplace_back(outcome_name(o));
    j["psm"] = {{"pool", pool_name(cfg.pool)},
                {"match_within_year", cfg.match_within_year},
                {"splits", splits},
                {"outcomes", outcomes}};
    j["run"] = {{"seed", cfg.seed}, {"workers", cfg.workers}};
    return j.dump();
}

const std::vector<std::string>& subcommand_names() {
    static const std::vector<std::string> names = {"ingest", "train",    "tune",    "expand", "classify", "novelty",
                                                   "stats",  "cite-reg", "premia", "psm",    "demo"};
    return names;
}

// ---------------------------------------------------------------------------
// Stages

namespace {

std::string num(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

class Run {
public:
    Run(const PipelineConfig& cfg, std::string name) : cfg_(cfg), name_(std::move(name)) {}

    const PipelineConfig& cfg() const { return cfg_; }

    const fs::path& require(const fs::path& p, std::string_view key) {
        if (p.empty()) throw ValidationError(fmt::format("{}: config paths.{} is required", name_, key));
        if (!fs::exists(p)) throw ValidationError(fmt::format("{}: paths.{} does not exist: {}", name_, key, p.string()));
        return p;
    }

    // Records the hash of an input file.
    void input(const fs::path& p) {
        auto key = path_str(p, cfg_.base_dir);
        if (!inputs_.contains(key)) inputs_[key] = sha256_hex(read_file(p));
    }

    fs::path out_dir() const { return cfg_.paths.out; }

    void output(const fs::path& rel, std::string_view content) { output_abs(out_dir() / rel, content); }

    void output_abs(const fs::path& p, std::string_view content) {
        write_file(p, content);
        auto rel = p.lexically_relative(out_dir());
        auto key = (rel.empty() || *rel.begin() == "..") ? path_str(p, cfg_.base_dir) : rel.generic_string();
        outputs_[key] = sha256_hex(content);
        summary_.outputs.push_back(key);
    }

    void warn(std::string w) { summary_.warnings.push_back(std::move(w)); }

    ojson counts = ojson::object();

    StageSummary finish() {
        std::string config_json = config_to_json(cfg_);
        ojson m;
        m["tool"] = kToolName;
        m["version"] = kToolVersion;
        m["subcommand"] = name_;
        m["config_sha256"] = sha256_hex(config_json);
        m["config"] = ojson::parse(config_json);
        ojson in = ojson::array(), out = ojson::array();
        for (const auto& [k, v] : inputs_) in.push_back({{"path", k}, {"sha256", v}});
        for (const auto& [k, v] : outputs_) out.push_back({{"path", k}, {"sha256", v}});
        m["inputs"] = std::move(in);
        m["outputs"] = std::move(out);
        m["counts"] = counts;
        m["warnings"] = summary_.warnings;
        write_file(out_dir() / (name_ + ".manifest.json"), m.dump(2) + "\n");
        return summary_;
    }

private:
    const PipelineConfig& cfg_;
    std::string name_;
    std::map<std::string, std::string> inputs_, outputs_;
    StageSummary summary_;
};

Normalizer load_normalizer(Run& run) {
    const auto& p = run.cfg().paths;
    run.require(p.stopwords, "stopwords");
    run.require(p.lemmas, "lemmas");
    run.require(p.pos, "pos");
    run.input(p.stopwords);
    run.input(p.lemmas);
    run.input(p.pos);
    return Normalizer(NormalizerResources::load(p.stopwords, p.lemmas, p.pos));
}

struct Corpus {
    std::vector<PatentRecord> patents;  // sorted by patent_id
    std::vector<ProcessedDoc> docs;     // title + abstract, parallel to patents
};

template <class F>
void parallel_for(std::size_t n, std::size_t workers, F&& f) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < workers; ++w)
        threads.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) f(i);
        });
}

Corpus load_corpus(Run& run, const Normalizer& norm, bool write_rejects_file) {
    const auto& path = run.require(run.cfg().paths.corpus, "corpus");
    run.input(path);
    auto load = load_patents(path, patent_format_from_path(path));
    if (!load.rejects.empty()) run.warn(fmt::format("{} malformed corpus rows rejected", load.rejects.size()));
    run.counts["patents"] = load.records.size();
    run.counts["rejects"] = load.rejects.size();
    if (write_rejects_file) {
        std::string body;
        for (const auto& r : load.rejects) {
            ojson j;
            j["line"] = r.line;
            j["reason"] = r.reason;
            j["raw"] = r.raw;
            body += j.dump() + "\n";
        }
        run.output(path.filename().string() + ".rejects.jsonl", body);
    }
    Corpus c;
    c.patents = std::move(load.records);
    std::sort(c.patents.begin(), c.patents.end(),
              [](const PatentRecord& a, const PatentRecord& b) { return a.patent_id < b.patent_id; });
    c.docs.resize(c.patents.size());
    parallel_for(c.patents.size(), run.cfg().workers, [&](std::size_t i) {
        const auto& p = c.patents[i];
        c.docs[i] = norm.normalize(p.patent_id, p.title, p.abstract);
    });
    return c;
}

TrainConfig train_config(const PipelineConfig& cfg, std::string_view stage) {
    TrainConfig t = cfg.embedding;
    t.seed = stage_seed(cfg.seed, stage);
    t.workers = cfg.workers;
    return t;
}

fs::path model_path(const PipelineConfig& cfg) {
    return cfg.paths.model.empty() ? cfg.paths.out / "model.bin" : cfg.paths.model;
}

std::string docs_to_jsonl(const std::vector<ProcessedDoc>& docs) {
    std::string out;
    for (const auto& d : docs) {
        ojson j;
        j["patent_id"] = d.patent_id;
        j["tokens"] = d.tokens;
        out += j.dump() + "\n";
    }
    return out;
}

void stage_ingest(Run& run) {
    auto norm = load_normalizer(run);
    auto c = load_corpus(run, norm, true);
    run.output("patents.jsonl", patents_to_jsonl(c.patents));
    run.output("processed.jsonl", docs_to_jsonl(c.docs));
}

void stage_train(Run& run) {
    auto norm = load_normalizer(run);
    auto c = load_corpus(run, norm, false);
    TrainReport report;
    auto model = train_cbow(c.docs, train_config(run.cfg(), "train"), &report);
    run.output_abs(model_path(run.cfg()), serialize_model(model));
    std::string loss = "epoch,loss\n";
    for (std::size_t e = 0; e < report.epoch_loss.size(); ++e)
        loss += fmt::format("{},{}\n", e + 1, num(report.epoch_loss[e]));
    run.output("train_loss.csv", loss);
    run.counts["vocab_size"] = model.vocab_size();
    run.counts["sgd_steps"] = report.steps;
}

void stage_tune(Run& run) {
    auto norm = load_normalizer(run);
    auto c = load_corpus(run, norm, false);
    const auto& gold_path = run.require(run.cfg().paths.gold, "gold");
    run.input(gold_path);
    auto gold = load_gold(gold_path);
    auto res = tune_hyperparams(c.docs, gold, run.cfg().tune, train_config(run.cfg(), "tune"));
    std::string out = "c,min_count,d,pearson_r,coverage,n_pairs,best,error\n";
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
        const auto& r = res.rows[i];
        out += fmt::format("{},{},{},{},{},{},{},{}\n", r.c, r.min_count, r.d, format_optional(r.eval.pearson_r),
                           num(r.eval.coverage), r.eval.n_pairs, res.best == i ? 1 : 0, csv_escape(r.error));
        if (!r.error.empty()) run.warn(fmt::format("tune c={} min_count={} d={}: {}", r.c, r.min_count, r.d, r.error));
    }
    run.output("tune.csv", out);
    run.counts["combinations"] = res.rows.size();
}

GreenDictionary expanded_dictionary(Run& run, const Normalizer& norm, const CbowModel& model,
                                    std::vector<std::string>* skipped = nullptr) {
    const auto& p = run.cfg().paths;
    run.require(p.seeds, "seeds");
    run.input(p.seeds);
    std::unordered_set<std::string> excl;
    if (!p.exclusions.empty()) {
        run.require(p.exclusions, "exclusions");
        run.input(p.exclusions);
        excl = load_word_set(p.exclusions);
    }
    auto ex = expand_seeds(model, load_seeds(p.seeds), run.cfg().expand_k, excl, norm);
    if (!ex.skipped_seeds.empty()) {
        std::string list;
        for (const auto& s : ex.skipped_seeds) list += (list.empty() ? "" : "; ") + s;
        run.warn(fmt::format("{} seeds without vocabulary words skipped: {}", ex.skipped_seeds.size(), list));
    }
    run.counts["skipped_seeds"] = ex.skipped_seeds.size();
    if (skipped) *skipped = ex.skipped_seeds;
    return ex.dictionary;
}

CbowModel load_required_model(Run& run) {
    auto mp = model_path(run.cfg());
    if (!fs::exists(mp)) throw ValidationError("model file not found: " + mp.string() + " (run `train` first)");
    run.input(mp);
    return load_model(mp);
}

void stage_expand(Run& run) {
    auto norm = load_normalizer(run);
    auto model = load_required_model(run);
    auto dict = expanded_dictionary(run, norm, model);
    std::string table = "phrase,origin,source_seed,rank,similarity\n";
    for (std::size_t i = 0; i < dict.rules.size(); ++i) {
        const auto& pr = dict.provenance[i];
        table += fmt::format("{},{},{},{},{}\n", csv_escape(dict.rules[i].label()),
                             pr.origin == Origin::Seed ? "seed" : "expanded", csv_escape(pr.source_seed), pr.rank,
                             num(pr.similarity));
    }
    run.output("expansion.csv", table);
    run.output("expanded_rules.tsv", dictionary_to_rules_text(dict));
    run.counts["rules"] = dict.rules.size();
}

struct Classification {
    Corpus corpus;
    GreenDictionary dict;
    std::vector<MatchOutcome> outcomes;
    std::vector<bool> true_green;
};

Classification classify_corpus(Run& run, bool require_model) {
    const auto& cfg = run.cfg();
    std::optional<CbowModel> model;
    if (require_model || cfg.include_expanded) model = load_required_model(run);
    auto norm = load_normalizer(run);
    Classification out;
    out.corpus = load_corpus(run, norm, false);
    run.require(cfg.paths.rules, "rules");
    run.input(cfg.paths.rules);
    out.dict = compile_dictionary(cfg.paths.rules, norm);
    if (cfg.include_expanded) {
        auto ex = expanded_dictionary(run, norm, *model);
        for (std::size_t i = 0; i < ex.rules.size(); ++i) out.dict.add(ex.rules[i], ex.provenance[i]);
    }
    Matcher matcher(out.dict);
    const auto n = out.corpus.patents.size();
    out.outcomes.resize(n);
    parallel_for(n, cfg.workers, [&](std::size_t i) { out.outcomes[i] = matcher.match(out.corpus.docs[i]); });
    out.true_green.resize(n);
    std::size_t green = 0, tg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        out.true_green[i] = out.corpus.patents[i].baseline_green && out.outcomes[i].matched;
        green += out.corpus.patents[i].baseline_green;
        tg += out.true_green[i];
    }
    run.counts["rules"] = out.dict.rules.size();
    run.counts["baseline_green"] = green;
    run.counts["true_green"] = tg;
    return out;
}

void stage_classify(Run& run) {
    auto cl = classify_corpus(run, true);
    std::string body;
    for (std::size_t i = 0; i < cl.outcomes.size(); ++i)
        body += outcome_to_json(cl.outcomes[i], cl.true_green[i], cl.dict) + "\n";
    run.output("classified.jsonl", body);
}

void stage_novelty(Run& run) {
    const auto& cfg = run.cfg();
    auto norm = load_normalizer(run);
    auto c = load_corpus(run, norm, false);
    std::vector<DatedDoc> base, later;
    std::size_t no_year = 0;
    for (std::size_t i = 0; i < c.patents.size(); ++i) {
        const auto& p = c.patents[i];
        if (!p.priority_year) {
            ++no_year;
            continue;
        }
        if (*p.priority_year < cfg.cutoff_year) base.push_back({norm.normalize(p.patent_id, "", p.abstract), *p.priority_year});
        else later.push_back({c.docs[i], *p.priority_year});
    }
    if (no_year) run.warn(fmt::format("{} patents without priority_year skipped", no_year));
    std::sort(later.begin(), later.end(), [](const DatedDoc& a, const DatedDoc& b) {
        return std::tie(a.priority_year, a.doc.patent_id) < std::tie(b.priority_year, b.doc.patent_id);
    });
    auto built = build_baseline(base, cfg.cutoff_year);
    for (auto& w : built.warnings) run.warn(w);
    auto profiles = score_novelty(later, built.lexicon, cfg.novelty_mode, cfg.workers);
    if (!profiles.empty()) flag_high_novelty(profiles, cfg.high_novelty);
    run.output("baseline.glnv", serialize_lexicon(built.lexicon));
    run.output("novelty.csv", profiles_to_csv(profiles));
    run.counts["baseline_docs"] = built.n_docs;
    run.counts["scored_docs"] = profiles.size();
    run.counts["skipped_no_priority_year"] = no_year;
}

void stage_stats(Run& run) {
    const auto& cfg = run.cfg();
    auto cl = classify_corpus(run, false);
    auto counts = class_counts(cl.corpus.patents, cl.true_green, cfg.class_level);
    if (counts.size() == 1) run.warn("rca: only one class present, RCA table left empty");
    run.output("class_counts.csv", class_counts_to_csv(counts));
    run.output("rca.csv", rca_to_csv(counts));
    run.output("density.csv", density_to_csv(counts));
    run.output("shares.csv", shares_to_csv(share_over_time(cl.corpus.patents, cl.true_green, cfg.year_basis)));
    run.counts["classes"] = counts.size();
}

constexpr std::string_view kRegHeader = "outcome,term,coef,se,t,p,n_obs,adj_r2\n";

std::string regression_rows(std::string_view outcome, const OlsResult& r, std::size_t n_report) {
    std::string out;
    for (std::size_t j = 0; j < n_report && j < r.names.size(); ++j) {
        auto jj = static_cast<Eigen::Index>(j);
        out += fmt::format("{},{},{},{},{},{},{},{}\n", outcome, csv_escape(r.names[j]), num(r.coef[jj]), num(r.se[jj]),
                           num(r.t[jj]), num(r.p[jj]), r.n_obs, num(r.adj_r2));
    }
    return out;
}

void stage_cite_reg(Run& run) {
    auto cl = classify_corpus(run, false);
    auto cd = citation_design(cl.corpus.patents, cl.true_green);
    run.counts["dropped_missing_citations"] = cd.dropped_missing_citations;
    run.counts["dropped_missing_dates"] = cd.dropped_missing_dates;
    run.counts["dropped_missing_class"] = cd.dropped_missing_class;
    run.counts["reference_year"] = cd.reference_year;
    auto res = ols_fixed_effects(cd.design);
    run.counts["groups"] = res.n_groups;
    run.counts["clusters"] = res.n_clusters;
    run.output("cite_reg.csv", std::string(kRegHeader) + regression_rows("log_citations", res, res.names.size()));
}

std::vector<FirmYear> load_panel(Run& run) {
    const auto& p = run.require(run.cfg().paths.firms, "firms");
    run.input(p);
    auto panel = load_firm_panel(p);
    run.counts["firm_years"] = panel.size();
    return panel;
}

void stage_premia(Run& run) {
    auto panel = load_panel(run);
    auto rows = premia_regressions(panel, run.cfg().outcomes);
    std::string out(kRegHeader);
    for (const auto& row : rows) {
        if (!row.result) {
            run.warn(fmt::format("premia {}: {}", outcome_name(row.outcome), row.error));
            continue;
        }
        if (row.result->degenerate) run.warn(fmt::format("premia {}: outcome has no variation", outcome_name(row.outcome)));
        // only the three regressors; nuisance dummies stay out of the table
        out += regression_rows(outcome_name(row.outcome), *row.result, 3);
    }
    run.output("premia.csv", out);
}

void write_psm(Run& run, const std::string& stem, const PsmResult& r) {
    std::string table = "outcome,atet,se,t,n_treated,n_untreated,n_dropped_support\n";
    for (const auto& o : r.outcomes) {
        if (!o.estimate) {
            run.warn(fmt::format("{} {}: {}", stem, outcome_name(o.outcome), o.error));
            table += fmt::format("{},,,,{},{},{}\n", outcome_name(o.outcome), r.n_treated, r.n_untreated, r.n_dropped_support);
            continue;
        }
        const auto& e = *o.estimate;
        table += fmt::format("{},{},{},{},{},{},{}\n", outcome_name(o.outcome), num(e.atet), num(e.se), num(e.t_stat),
                             r.n_treated, r.n_untreated, r.n_dropped_support);
    }
    run.output(stem + ".csv", table);
    std::string pairs = "treated_id,control_id,score_t,score_c\n";
    for (const auto& p : r.pairs)
        pairs += fmt::format("{},{},{},{}\n", csv_escape(p.treated_id), csv_escape(p.control_id), num(p.score_t),
                             num(p.score_c));
    run.output(stem + "_pairs.csv", pairs);
}

void stage_psm(Run& run) {
    const auto& cfg = run.cfg();
    auto panel = load_panel(run);
    PsmOptions opts;
    opts.propensity.pool = cfg.pool;
    opts.outcomes = cfg.outcomes;
    opts.match_within_year = cfg.match_within_year;
    auto res = run_psm(panel, opts);
    write_psm(run, "psm", res);
    run.counts["matched_pairs"] = res.pairs.size();
    run.counts["unmatched_treated"] = res.n_unmatched_treated;
    run.counts["design_rows"] = res.n_design_rows;
    run.counts["dropped_design_rows"] = res.n_dropped_design;
    for (auto split : cfg.splits) {
        for (const auto& g : subgroup_atet(panel, split, opts)) {
            if (!g.result) {
                run.warn(fmt::format("psm subgroup {} skipped: {}", g.name, g.skipped));
                continue;
            }
            write_psm(run, "psm_" + g.name, *g.result);
        }
    }
}

StageSummary run_one(std::string_view name, const PipelineConfig& cfg) {
    Run run(cfg, std::string(name));
    if (name == "ingest") stage_ingest(run);
    else if (name == "train") stage_train(run);
    else if (name == "tune") stage_tune(run);
    else if (name == "expand") stage_expand(run);
    else if (name == "classify") stage_classify(run);
    else if (name == "novelty") stage_novelty(run);
    else if (name == "stats") stage_stats(run);
    else if (name == "cite-reg") stage_cite_reg(run);
    else if (name == "premia") stage_premia(run);
    else if (name == "psm") stage_psm(run);
    else throw ValidationError(fmt::format("unknown subcommand '{}'", name));
    return run.finish();
}

}  // namespace

StageSummary run_subcommand(std::string_view name, const PipelineConfig& cfg) {
    if (cfg.paths.out.empty()) throw ValidationError("no output directory configured");
    std::error_code ec;
    fs::create_directories(cfg.paths.out, ec);
    if (ec) throw ValidationError(fmt::format("output dir not writable: {} ({})", cfg.paths.out.string(), ec.message()));
    if (name != "demo") return run_one(name, cfg);

    StageSummary all;
    ojson stages = ojson::array();
    for (const auto& s : subcommand_names()) {
        if (s == "demo") continue;
        auto sum = run_one(s, cfg);
        stages.push_back({{"subcommand", s}, {"manifest", s + ".manifest.json"}, {"outputs", sum.outputs}});
        all.outputs.insert(all.outputs.end(), sum.outputs.begin(), sum.outputs.end());
        for (auto& w : sum.warnings) all.warnings.push_back(s + ": " + w);
    }
    ojson m;
    m["tool"] = kToolName;
    m["version"] = kToolVersion;
    m["subcommand"] = "demo";
    m["config_sha256"] = sha256_hex(config_to_json(cfg));
    m["stages"] = std::move(stages);
    m["warnings"] = all.warnings;
    write_file(cfg.paths.out / "demo.manifest.json", m.dump(2) + "\n");
    return all;
}

}  // namespace greenpat
