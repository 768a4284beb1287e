// Experiment runner for the one-sided dyadic operator library: characteristic,
// norm and testing queries, corona and distribution reports, sharpness sweeps,
// extremal search, and the weighted one-sided maximal probe.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "osmt/errors.hpp"
#include "osmt/experiments.hpp"

namespace {

struct CommonFlags {
    std::optional<std::string> config_path;
    std::optional<int> depth;
    std::optional<double> p;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> mode;
    std::optional<std::string> out;
    bool check = false;
};

void attach_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "key=value config file");
    cmd->add_option("--depth", flags.depth, "grid depth N (cells 2^N)");
    cmd->add_option("--p", flags.p, "Lebesgue exponent p in (1,inf)");
    cmd->add_option("--seed", flags.seed, "master seed");
    cmd->add_option("--threads", flags.threads, "worker threads (1 = strictly sequential)");
    cmd->add_option("--mode", flags.mode, "interval family: dyadic|sliding")
        ->check(CLI::IsMember({"dyadic", "sliding"}));
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_flag("--check", flags.check, "recompute a sample of rows and verify");
}

osmt::ExperimentConfig make_config(const CommonFlags& flags) {
    osmt::ExperimentConfig cfg;
    if (flags.config_path) cfg = osmt::parse_config_file(*flags.config_path);
    if (flags.depth) cfg.depth = *flags.depth;
    if (flags.p) cfg.p = *flags.p;
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.threads) cfg.threads = *flags.threads;
    if (flags.mode)
        cfg.mode = *flags.mode == "sliding" ? osmt::IntervalFamily::sliding
                                            : osmt::IntervalFamily::dyadic;
    if (flags.out) cfg.out_dir = *flags.out;
    if (flags.check) cfg.check = true;
    if (cfg.depth < 2 || cfg.depth > 14)
        throw osmt::ResourceError("depth " + std::to_string(cfg.depth) +
                                  " outside the supported experiment range [2, 14]");
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"one-sided dyadic operator experiments"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string subcommand;
    for (const char* name : {"characteristic", "norm", "testing", "corona", "distribution",
                             "sweep", "search", "probe-maximal"}) {
        auto* cmd = app.add_subcommand(name);
        attach_common(cmd, flags);
        cmd->callback([&subcommand, name] { subcommand = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        const osmt::ExperimentConfig cfg = make_config(flags);
        osmt::json summary;
        if (subcommand == "characteristic") {
            summary = osmt::run_characteristic(cfg);
        } else if (subcommand == "norm") {
            summary = osmt::run_norm(cfg);
        } else if (subcommand == "testing") {
            summary = osmt::run_testing(cfg);
        } else if (subcommand == "corona") {
            summary = osmt::run_corona(cfg);
        } else if (subcommand == "distribution") {
            summary = osmt::run_distribution(cfg);
        } else if (subcommand == "sweep") {
            const auto rows = osmt::run_sweep(cfg);
            summary = osmt::json{{"rows", rows.size()},
                                 {"summary", osmt::summarize_sweep(rows)}};
        } else if (subcommand == "search") {
            const auto res = osmt::run_search(cfg);
            summary = osmt::json{{"best_ratio", res.best_ratio},
                                 {"best_ap_plus", res.best_ap}};
        } else if (subcommand == "probe-maximal") {
            const auto rows = osmt::probe_weighted_maximal(cfg);
            summary = osmt::json{{"rows", rows.size()},
                                 {"note", "evidence, not proof"}};
        }
        std::cout << summary.dump(2) << '\n';
        return 0;
    } catch (const osmt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const osmt::ResourceError& e) {
        std::cerr << "resource guard: " << e.what() << '\n';
        return 3;
    } catch (const osmt::CheckError& e) {
        std::cerr << "check failed: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
