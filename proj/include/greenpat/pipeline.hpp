#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "greenpat/analytics.hpp"
#include "greenpat/econometrics.hpp"
#include "greenpat/embedding.hpp"
#include "greenpat/novelty.hpp"

namespace greenpat {

inline constexpr std::string_view kToolName = "greenpat";
inline constexpr std::string_view kToolVersion = "0.1.0";

struct PipelinePaths {
    std::filesystem::path corpus, firms, stopwords, lemmas, pos, seeds, rules, exclusions, gold, model, out;
};

struct PipelineConfig {
    PipelinePaths paths;             // absolute after loading
    std::filesystem::path base_dir;  // relative paths in the file resolve against it
    TrainConfig embedding;
    TuneGrid tune{{1, 2}, {40}, {450}};
    std::size_t expand_k = 15;
    bool include_expanded = false;
    int cutoff_year = kDefaultCutoffYear;
    HighNoveltyRule high_novelty;
    NoveltyMode novelty_mode = NoveltyMode::Strict;
    std::size_t class_level = 3;
    YearBasis year_basis = YearBasis::GrantYear;
    ControlPool pool = ControlPool::Patenting;
    bool match_within_year = true;
    std::vector<Split> splits;
    std::vector<Outcome> outcomes{std::begin(kAllOutcomes), std::end(kAllOutcomes)};
    std::uint64_t seed = 1;
    std::size_t workers = 1;
};

// INI-style: [section] headers, key = value lines, '#' or ';' comments.
// Unknown sections or keys are validation errors.
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

// Stable JSON rendering of the effective configuration, paths relative to base_dir.
std::string config_to_json(const PipelineConfig& cfg);

std::uint64_t stage_seed(std::uint64_t root, std::string_view stage);
std::string sha256_hex(std::string_view bytes);

const std::vector<std::string>& subcommand_names();

struct StageSummary {
    std::vector<std::filesystem::path> outputs;  // relative to the output dir
    std::vector<std::string> warnings;
};

// Runs one subcommand and writes `<out>/<subcommand>.manifest.json`.
// Throws greenpat::Error on failure.
StageSummary run_subcommand(std::string_view name, const PipelineConfig& cfg);

}  // namespace greenpat
