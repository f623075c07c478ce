#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "nc/errors.hpp"
#include "nc/log.hpp"
#include "nc/pipeline.hpp"

namespace nc {

namespace {

struct CommandArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> budget;
    std::optional<double> tolerance;
    std::optional<std::size_t> k;
};

void add_common_options(CLI::App* sub, CommandArgs& args) {
    sub->add_option("--config", args.config_path, "run configuration JSON")->required();
    sub->add_option("--seed", args.seed, "override corpus seed");
    sub->add_option("--out", args.out, "override output directory");
    sub->add_option("--budget", args.budget, "override labeling budget per batch");
    sub->add_option("--tolerance", args.tolerance, "override error tolerance");
    sub->add_option("--k", args.k, "override neighbor count for distance aggregation");
}

RunConfig resolved_config(const CommandArgs& args) {
    RunConfig config = load_config(args.config_path);
    if (args.seed) config.seed = *args.seed;
    if (args.out) config.out_dir = *args.out;
    if (args.budget) config.budget = *args.budget;
    if (args.tolerance) config.tolerance = *args.tolerance;
    if (args.k) config.neighbor.k = *args.k;
    validate_config(config);
    return config;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"neighbor-confidence: feature-space distance as prediction confidence"};
    app.require_subcommand(1);

    struct Command {
        const char* name;
        const char* description;
        std::string (*run)(const RunConfig&);
    };
    static const Command commands[] = {
        {"generate", "write the synthetic point-cloud corpus", cmd_generate},
        {"train", "train the autoencoder on the train split", cmd_train},
        {"embed", "extract latents and reconstruction errors", cmd_embed},
        {"fit", "calibrate the distance->error model", cmd_fit},
        {"score", "issue trust/abstain verdicts for new samples", cmd_score},
        {"select", "run the batched training-set expansion", cmd_select},
        {"report", "emit the 2-PC embedding reports", cmd_report},
    };

    CommandArgs args;
    const Command* chosen = nullptr;
    for (const Command& command : commands) {
        CLI::App* sub = app.add_subcommand(command.name, command.description);
        add_common_options(sub, args);
        sub->callback([&chosen, &command]() { chosen = &command; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }

    try {
        std::cout << chosen->run(resolved_config(args)) << '\n';
        return 0;
    } catch (const TrainingDivergedError& e) {
        log::error(e.what());
        return 3;
    } catch (const IoError& e) {
        log::error(e.what());
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        log::error(e.what());
        return 2;
    } catch (const ValidationError& e) {
        log::error(e.what());
        return 1;
    } catch (const std::exception& e) {
        log::error(std::string("unexpected: ") + e.what());
        return 1;
    }
}

}  // namespace nc
