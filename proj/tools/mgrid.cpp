// mgrid: microgrid energy-management simulator and RL training harness.
//
// Exit codes: 0 success, 2 bad usage, 3 invalid config, 4 missing file or
// checkpoint, 5 malformed data, 1 anything else.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "microgrid/harness.hpp"

namespace {

microgrid::ExperimentConfig load_or_default(const std::string& config_path, std::uint64_t seed_override,
                                            bool seed_set, const std::string& out_override) {
    microgrid::ExperimentConfig xc;
    if (!config_path.empty()) xc = microgrid::load_config(config_path);
    if (seed_set) xc.env.seed = seed_override;
    if (!out_override.empty()) xc.output_dir = out_override;
    xc.validate();
    return xc;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"microgrid energy-management simulator and RL harness"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool quiet = false;
    app.add_option("-c,--config", config_path, "config file (key = value lines)");
    app.add_option("-o,--out", out_dir, "output directory (overrides config output_dir)");
    auto* seed_opt = app.add_option("-s,--seed", seed, "seed override");
    app.add_flag("-q,--quiet", quiet, "suppress progress output");

    std::string algo_name = "ma3c";
    auto* train = app.add_subcommand("train", "train an agent, writing checkpoints and training.csv");
    train->add_option("-a,--algo", algo_name, "ma3c|ppo|dqn|ddqn")->capture_default_str();

    std::string checkpoint;
    int eval_day = 0;
    auto* eval = app.add_subcommand("eval", "greedy 24-hour rollout of a checkpoint; writes trace.csv");
    eval->add_option("-k,--checkpoint", checkpoint, "checkpoint file")->required();
    eval->add_option("-d,--day", eval_day, "day index to evaluate")->capture_default_str();

    app.add_subcommand("compare", "train all agents and tabulate daily costs vs the retailer");
    app.add_subcommand("emit-figures", "emit plot-ready CSVs for the standard figures");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        microgrid::ExperimentConfig xc =
            load_or_default(config_path, seed, seed_opt->count() > 0, out_dir);
        const std::string& out = xc.output_dir;
        if (train->parsed()) {
            microgrid::run_train(xc, microgrid::parse_algo(algo_name), out, quiet);
        } else if (eval->parsed()) {
            microgrid::run_eval(xc, checkpoint, eval_day, out, quiet);
        } else if (app.get_subcommand("compare")->parsed()) {
            microgrid::run_compare(xc, out, quiet);
        } else if (app.get_subcommand("emit-figures")->parsed()) {
            microgrid::run_emit_figures(xc, out, quiet);
        }
        return 0;
    } catch (const microgrid::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const microgrid::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const microgrid::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
