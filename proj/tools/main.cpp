// eflab: semiclassical eigenfunction laboratory
//
// Subcommands:
//   run <config.toml> [-o outdir]   execute the pipelines requested in the config
//   verify <artifact-dir>           re-check invariants against stored artifacts
//   plot <artifact-dir>             re-emit SVG plots from stored CSV traces
//   list-models                     show the built-in model catalogue
//
// Exit codes: 0 success (possibly with warnings), 2 config/schema errors,
// 3 numerical failures (failing stage named on stderr).

#include <CLI11.hpp>

#include <cstdio>
#include <exception>

#include "eflab/config.hpp"
#include "eflab/pipelines.hpp"

int main(int argc, char** argv) {
    CLI::App app{"eflab: semiclassical eigenfunction laboratory"};
    app.require_subcommand(1);

    std::string config_path, outdir, artifact_dir;

    auto* run = app.add_subcommand("run", "execute pipelines from a config file");
    run->add_option("config", config_path, "experiment config (TOML subset)")
        ->required();
    run->add_option("-o,--output", outdir, "artifact directory override");

    auto* verify = app.add_subcommand("verify", "re-check invariants of a run");
    verify->add_option("dir", artifact_dir, "artifact directory")->required();

    auto* plot = app.add_subcommand("plot", "re-emit SVG plots from CSV artifacts");
    plot->add_option("dir", artifact_dir, "artifact directory")->required();

    app.add_subcommand("list-models", "list built-in model families");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            auto cfg = eflab::config::Config::parse_file(config_path);
            auto res = eflab::pipelines::run(cfg, outdir);
            for (const auto& w : res.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
            if (res.exit_code == 3)
                std::fprintf(stderr, "numerical failure in stage '%s'\n",
                             res.failed_stage.c_str());
            else
                std::printf("artifacts written to %s\n", res.outdir.c_str());
            return res.exit_code;
        }
        if (verify->parsed()) {
            auto res = eflab::pipelines::verify(artifact_dir);
            for (const auto& [name, ok] : res.checks)
                std::printf("%s %s\n", ok ? "PASS" : "FAIL", name.c_str());
            for (const auto& m : res.messages) std::fprintf(stderr, "%s\n", m.c_str());
            std::printf("%s\n", res.pass ? "verify: PASS" : "verify: FAIL");
            return res.pass ? 0 : 1;
        }
        if (plot->parsed()) {
            const int made = eflab::pipelines::replot(artifact_dir);
            std::printf("re-emitted %d plot(s)\n", made);
            return 0;
        }
        std::fputs(eflab::pipelines::list_models().c_str(), stdout);
        return 0;
    } catch (const std::invalid_argument& ex) {
        std::fprintf(stderr, "%s\n", ex.what());
        return 2;
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 3;
    }
}
