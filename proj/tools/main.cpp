#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "speclab/errors.hpp"
#include "speclab/runner.hpp"

namespace {

int do_list() {
    for (const auto& [kind, what] : speclab::experiment_catalog()) {
        std::cout << kind;
        for (std::size_t pad = kind.size(); pad < 16; ++pad) std::cout << ' ';
        std::cout << what << "\n";
    }
    return 0;
}

int do_validate(const std::string& path) {
    const speclab::ExperimentConfig cfg = speclab::load_config(path);
    std::cout << "ok: " << cfg.experiments.size() << " experiment(s), digest "
              << cfg.digest << "\n";
    return 0;
}

int do_run(const std::string& path, const std::string& out_cli, int jobs,
           const std::uint64_t* seed_override) {
    speclab::ExperimentConfig cfg = speclab::load_config(path);
    if (seed_override) cfg.seed = *seed_override;
    const std::string out_dir = speclab::resolve_out_dir(out_cli, cfg);
    const speclab::RunReport report = speclab::run_experiments(cfg, out_dir, jobs);
    for (const speclab::ExperimentOutcome& o : report.outcomes) {
        std::cout << (o.ok ? "[ ok ] " : "[FAIL] ") << o.name << " (" << o.kind << ") "
                  << o.seconds << "s";
        if (!o.message.empty()) std::cout << ": " << o.message;
        std::cout << "\n";
    }
    std::cout << "manifest: " << report.manifest_path << "\n";
    return report.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for spectral inequalities and null control on flat tori"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int jobs = 1;
    std::uint64_t seed = 0;

    CLI::App* run = app.add_subcommand("run", "execute every experiment in a config");
    run->add_option("config", config_path, "JSON config file")->required();
    run->add_option("--out", out_dir, "output directory (beats config \"output\" and SPECLAB_OUT)");
    run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    CLI::Option* seed_opt = run->add_option("--seed", seed, "override the config seed");

    CLI::App* validate = app.add_subcommand("validate", "parse and check a config; writes nothing");
    validate->add_option("config", config_path, "JSON config file")->required();

    CLI::App* list = app.add_subcommand("list-experiments", "print the experiment kinds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (list->parsed()) return do_list();
        if (validate->parsed()) return do_validate(config_path);
        return do_run(config_path, out_dir, jobs, seed_opt->count() ? &seed : nullptr);
    } catch (const speclab::ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return 2;
    } catch (const speclab::IoError& err) {
        std::cerr << "io error: " << err.what() << "\n";
        return 3;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}
