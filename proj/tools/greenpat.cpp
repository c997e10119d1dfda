#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "greenpat/error.hpp"
#include "greenpat/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

int report(std::string_view subcommand, std::string_view kind, std::string_view message, int code) {
    nlohmann::ordered_json j;
    j["error"] = {{"kind", kind}, {"message", message}};
    j["subcommand"] = subcommand;
    j["exit_code"] = code;
    std::cerr << j.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Green patent text mining and firm-level econometrics"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(greenpat::kToolVersion));

    std::string config_path;
    std::optional<std::size_t> workers;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    app.add_option("--config", config_path, "pipeline config file (INI sections)");
    app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "root random seed");
    app.add_option("--out", out_dir, "output directory (overrides paths.out)");

    const std::map<std::string, std::string> help = {
        {"ingest", "load and normalize the patent corpus"},
        {"train", "train the CBOW embedding"},
        {"tune", "grid search over C, MC and d against a gold similarity set"},
        {"expand", "expand seed expressions through embedding neighbours"},
        {"classify", "label true-green patents (JSONL)"},
        {"novelty", "first-appearance novelty profiles"},
        {"stats", "class shares, RCA and time series"},
        {"cite-reg", "citation premium regression"},
        {"premia", "firm outcome premia regressions"},
        {"psm", "propensity score matching and ATET"},
        {"demo", "run every stage on the shipped synthetic fixtures"},
    };
    for (const auto& name : greenpat::subcommand_names()) app.add_subcommand(name, help.at(name));

    std::string sub = "greenpat";
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report(sub, "validation", e.what(), kExitValidation);
    }
    sub = app.get_subcommands().front()->get_name();

    try {
        if (config_path.empty()) {
#ifdef GREENPAT_DEMO_CONFIG
            if (sub == "demo") config_path = GREENPAT_DEMO_CONFIG;
#endif
            if (config_path.empty()) throw greenpat::ValidationError("--config is required");
        }
        auto cfg = greenpat::load_config(config_path);
        if (workers) cfg.workers = *workers;
        if (seed) cfg.seed = *seed;
        if (!out_dir.empty()) cfg.paths.out = fs::absolute(out_dir).lexically_normal();
        if (cfg.paths.out.empty()) cfg.paths.out = fs::current_path() / "greenpat_out";
        auto summary = greenpat::run_subcommand(sub, cfg);
        for (const auto& w : summary.warnings) std::cerr << "warning: " << w << "\n";
        for (const auto& o : summary.outputs) std::cout << (cfg.paths.out / o).string() << "\n";
        return 0;
    } catch (const greenpat::Error& e) {
        bool validation = e.kind() == greenpat::ErrorKind::Validation;
        return report(sub, validation ? "validation" : e.kind() == greenpat::ErrorKind::Io ? "io" : "runtime", e.what(),
                      validation ? kExitValidation : kExitRuntime);
    } catch (const std::exception& e) {
        return report(sub, "runtime", e.what(), kExitRuntime);
    }
}
