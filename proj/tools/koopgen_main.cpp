#include <CLI11.hpp>

#include "koopgen/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"koopgen: bilinear Koopman surrogate models and predictive control"};
    app.require_subcommand(1);

    std::string config;
    koopgen::cli::Overrides ov;
    std::uint64_t seed = 0;
    std::string out_dir;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "configuration file (JSON)")->required();
        sub->add_option("--seed", seed, "override the sampling seed");
        sub->add_option("--out", out_dir, "override the output directory");
        sub->add_flag("--plot-script", ov.plot_script,
                      "write a companion matplotlib script next to the CSV");
    };

    CLI::App* train = app.add_subcommand("train", "fit a model from sampled data");
    CLI::App* predict = app.add_subcommand("predict", "roll a model forward, write a CSV");
    CLI::App* mpc = app.add_subcommand("mpc", "closed-loop receding-horizon run");
    CLI::App* validate = app.add_subcommand("validate", "run model invariant checks");
    for (CLI::App* sub : {train, predict, mpc, validate}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    for (CLI::App* sub : {train, predict, mpc, validate}) {
        if (!sub->parsed()) continue;
        if (sub->count("--seed")) ov.seed = seed;
        if (sub->count("--out")) ov.out_dir = out_dir;
    }

    if (train->parsed()) return koopgen::cli::cmd_train(config, ov);
    if (predict->parsed()) return koopgen::cli::cmd_predict(config, ov);
    if (mpc->parsed()) return koopgen::cli::cmd_mpc(config, ov);
    if (validate->parsed()) return koopgen::cli::cmd_validate(config, ov);
    return 2;
}
