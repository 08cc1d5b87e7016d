// echomem — scenario runner for the photon-echo memory simulator.
//
//   echomem --scenario path/to/scenario.json [--out-dir DIR] [--seed N]
//           [--grid-scale X] [--quiet]
//   echomem --accept [--grid-scale X] [--quiet]
//
// Exit codes: 0 success, 2 validation error, 3 numerical failure,
// 4 acceptance failure.

#include "echomem/acceptance.hpp"
#include "echomem/errors.hpp"
#include "echomem/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <string>

int main(int argc, char** argv)
{
    CLI::App app{"photon-echo quantum memory simulator"};

    std::string scenarioPath;
    std::string outDir = ".";
    std::uint64_t seed = 0;
    double gridScale = 1.0;
    bool accept = false;
    bool quiet = false;

    app.add_option("--scenario", scenarioPath, "scenario JSON file to run")
        ->check(CLI::ExistingFile);
    app.add_option("--out-dir", outDir, "output directory for artifacts");
    auto* seedOpt = app.add_option("--seed", seed, "override the scenario seed");
    app.add_option("--grid-scale", gridScale,
                   "multiply default grid resolutions (2 = twice as fine)");
    app.add_flag("--accept", accept, "run the acceptance suite");
    app.add_flag("--quiet", quiet, "suppress progress output");

    CLI11_PARSE(app, argc, argv);

    if (accept) {
        echomem::AcceptanceOptions opt;
        opt.grid_scale = gridScale;
        opt.quiet = quiet;
        return echomem::run_acceptance(opt);
    }

    if (scenarioPath.empty()) {
        std::fprintf(stderr, "echomem: provide --scenario FILE or --accept (see --help)\n");
        return echomem::kExitValidation;
    }

    echomem::RunOptions options;
    options.scenario_path = scenarioPath;
    options.out_dir = outDir;
    if (seedOpt->count() > 0)
        options.seed_override = seed;
    options.grid_scale = gridScale;
    options.quiet = quiet;

    try {
        echomem::run_scenario_file(options);
        return echomem::kExitOk;
    } catch (const echomem::NumericalFailure& e) {
        std::fprintf(stderr, "echomem: numerical failure: %s\n", e.what());
        return echomem::kExitNumerical;
    } catch (const echomem::ValidationError& e) {
        std::fprintf(stderr, "echomem: %s\n", e.what());
        return echomem::kExitValidation;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "echomem: %s\n", e.what());
        return echomem::kExitValidation;
    }
}
