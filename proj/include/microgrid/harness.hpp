#pragma once
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "microgrid/agents.hpp"
#include "microgrid/config.hpp"
#include "microgrid/csv.hpp"
#include "microgrid/env.hpp"
#include "microgrid/net.hpp"

namespace microgrid {

enum class Algo { MA3C, PPO, DQN, DDQN };

inline std::string algo_name(Algo a) {
    switch (a) {
        case Algo::MA3C: return "ma3c";
        case Algo::PPO: return "ppo";
        case Algo::DQN: return "dqn";
        case Algo::DDQN: return "ddqn";
    }
    return "?";
}

inline Algo parse_algo(const std::string& s) {
    if (s == "ma3c") return Algo::MA3C;
    if (s == "ppo") return Algo::PPO;
    if (s == "dqn") return Algo::DQN;
    if (s == "ddqn") return Algo::DDQN;
    throw ConfigError("unknown algorithm '" + s + "' (expected ma3c|ppo|dqn|ddqn)");
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write file: " + path);
    out << content;
}

inline void write_training_csv(const std::string& path, const std::vector<EpisodeStat>& episodes) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write file: " + path);
    out << "episode,reward,daily_cost,mean_entropy,epsilon\n";
    for (const auto& e : episodes)
        out << e.episode << "," << fmt_double(e.reward) << "," << fmt_double(e.cost) << ","
            << fmt_double(e.mean_entropy) << "," << fmt_double(e.epsilon) << "\n";
}

inline void write_trace_csv(const std::string& path, const std::vector<StepInfo>& infos) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write file: " + path);
    out << "day,hour,delta_kwh,ess_charge_kwh,ess_discharge_kwh,battery_level_kwh,"
           "tcl_kwh,tcl_forced_kwh,tcl_on_count,residential_kwh,wind_kwh,curtailed_kwh,"
           "unserved_kwh,market_price,internal_price,revenue,cost,ess_depreciation,"
           "compensation,grid_buy_cost,grid_sell_revenue,cap_penalty,reward\n";
    for (const auto& i : infos) {
        out << i.day << "," << i.hour;
        for (double v : {i.delta_kwh, i.ess_charge_kwh, i.ess_discharge_kwh, i.battery_level_kwh,
                         i.tcl_kwh, i.tcl_forced_kwh})
            out << "," << fmt_double(v);
        out << "," << i.tcl_on_count;
        for (double v : {i.residential_kwh, i.wind_kwh, i.curtailed_kwh, i.unserved_kwh,
                         i.market_price, i.internal_price, i.revenue, i.cost, i.ess_depreciation,
                         i.compensation, i.grid_buy_cost, i.grid_sell_revenue, i.cap_penalty,
                         i.reward})
            out << "," << fmt_double(v);
        out << "\n";
    }
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Sample standard deviation (n-1 denominator).
inline double stddev_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

/// Trains one algorithm on the configured scenario, writing the resolved
/// config, per-episode training CSV, periodic checkpoints and the final
/// checkpoint into `out_dir`.
inline TrainResult run_train(const ExperimentConfig& xc, Algo algo, const std::string& out_dir,
                             bool quiet = false) {
    xc.validate();
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir + "/config.resolved", serialize_config(xc));
    auto scenario = build_scenario(xc);

    auto checkpoint_sink = [&](int episodes_done, const ParameterSet& p) {
        char name[64];
        std::snprintf(name, sizeof(name), "/ckpt_ep%04d.bin", episodes_done);
        save_checkpoint(p, out_dir + name);
    };

    TrainResult result;
    switch (algo) {
        case Algo::MA3C: result = train_ma3c(scenario, xc.learner, checkpoint_sink); break;
        case Algo::PPO: result = train_ppo(scenario, xc.learner, checkpoint_sink); break;
        case Algo::DQN: result = train_dqn(scenario, xc.learner, false, checkpoint_sink); break;
        case Algo::DDQN: result = train_dqn(scenario, xc.learner, true, checkpoint_sink); break;
    }
    save_checkpoint(result.params, out_dir + "/ckpt_final.bin");
    write_training_csv(out_dir + "/training.csv", result.episodes);
    if (!quiet) {
        double final_reward = result.episodes.empty() ? 0.0 : result.episodes.back().reward;
        std::cout << algo_name(algo) << ": trained " << result.episodes.size()
                  << " episodes, final episode reward " << final_reward << "\n";
    }
    return result;
}

/// Greedy 24-hour rollout of a checkpoint; writes the hourly trace CSV.
inline EpisodeRun run_eval(const ExperimentConfig& xc, const std::string& checkpoint_path, int day,
                           const std::string& out_dir, bool quiet = false) {
    xc.validate();
    ParameterSet params = load_checkpoint(checkpoint_path);
    auto scenario = build_scenario(xc);
    Environment env(scenario);
    EpisodeRun run = run_episode_greedy(env, params, day);
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir + "/config.resolved", serialize_config(xc));
    write_trace_csv(out_dir + "/trace.csv", run.infos);
    if (!quiet)
        std::cout << "eval day " << day << ": reward " << run.reward << ", daily cost " << run.cost
                  << "\n";
    return run;
}

struct CompareResult {
    std::vector<std::string> policies;            // column order
    std::vector<std::vector<double>> daily_costs; // [policy][day]
};

/// Trains every learner on the scenario, evaluates each greedily over the
/// configured evaluation window, and adds the fixed-price retailer. Output
/// rows: one per day, then mean and standard deviation.
inline CompareResult run_compare(const ExperimentConfig& xc, const std::string& out_dir,
                                 bool quiet = false) {
    xc.validate();
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir + "/config.resolved", serialize_config(xc));
    auto scenario = build_scenario(xc);
    Environment env(scenario);

    int start = xc.learner.eval_start_day;
    int days = xc.learner.eval_days;
    if (start + days > scenario->wind.days())
        throw ConfigError("evaluation window exceeds the wind trace");

    CompareResult cr;
    auto eval_params = [&](const ParameterSet& p) {
        std::vector<double> costs;
        costs.reserve(static_cast<std::size_t>(days));
        for (int d = 0; d < days; ++d)
            costs.push_back(run_episode_greedy(env, p, start + d).cost);
        return costs;
    };

    for (Algo algo : {Algo::MA3C, Algo::PPO, Algo::DQN, Algo::DDQN}) {
        TrainResult tr;
        switch (algo) {
            case Algo::MA3C: tr = train_ma3c(scenario, xc.learner); break;
            case Algo::PPO: tr = train_ppo(scenario, xc.learner); break;
            case Algo::DQN: tr = train_dqn(scenario, xc.learner, false); break;
            case Algo::DDQN: tr = train_dqn(scenario, xc.learner, true); break;
        }
        cr.policies.push_back(algo_name(algo));
        cr.daily_costs.push_back(eval_params(tr.params));
        if (!quiet)
            std::cout << algo_name(algo) << ": mean daily cost " << mean_of(cr.daily_costs.back())
                      << "\n";
    }
    cr.policies.push_back("retailer");
    cr.daily_costs.push_back(retailer_baseline(env, start, days));
    if (!quiet)
        std::cout << "retailer: mean daily cost " << mean_of(cr.daily_costs.back()) << "\n";

    std::ofstream out(out_dir + "/compare.csv");
    if (!out) throw IoError("cannot write file: " + out_dir + "/compare.csv");
    out << "day";
    for (const auto& p : cr.policies) out << "," << p;
    out << "\n";
    for (int d = 0; d < days; ++d) {
        out << start + d;
        for (const auto& costs : cr.daily_costs) out << "," << fmt_double(costs[static_cast<std::size_t>(d)]);
        out << "\n";
    }
    out << "mean";
    for (const auto& costs : cr.daily_costs) out << "," << fmt_double(mean_of(costs));
    out << "\nstd";
    for (const auto& costs : cr.daily_costs) out << "," << fmt_double(stddev_of(costs));
    out << "\n";
    return cr;
}

/// Plot-ready CSVs: training curves, one greedy day of grid exchange, ESS
/// level, TCL allocation for the actor-critic agent, the same day's grid
/// exchange for the PPO baseline, and the per-day cost comparison.
inline void run_emit_figures(const ExperimentConfig& xc, const std::string& out_dir,
                             bool quiet = false) {
    xc.validate();
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir + "/config.resolved", serialize_config(xc));
    auto scenario = build_scenario(xc);
    Environment env(scenario);

    TrainResult ma3c = train_ma3c(scenario, xc.learner);
    TrainResult ppo = train_ppo(scenario, xc.learner);

    {
        std::ofstream out(out_dir + "/fig5_training_reward.csv");
        if (!out) throw IoError("cannot write fig5 CSV");
        out << "episode,ma3c_reward,ppo_reward\n";
        std::size_t n = std::min(ma3c.episodes.size(), ppo.episodes.size());
        for (std::size_t i = 0; i < n; ++i)
            out << i << "," << fmt_double(ma3c.episodes[i].reward) << ","
                << fmt_double(ppo.episodes[i].reward) << "\n";
    }

    int day = xc.learner.eval_start_day;
    EpisodeRun run_a3c = run_episode_greedy(env, ma3c.params, day);
    EpisodeRun run_ppo = run_episode_greedy(env, ppo.params, day);

    {
        std::ofstream out(out_dir + "/fig6_grid_exchange.csv");
        out << "hour,delta_kwh,market_price\n";
        for (const auto& i : run_a3c.infos)
            out << i.hour << "," << fmt_double(i.delta_kwh) << "," << fmt_double(i.market_price) << "\n";
    }
    {
        std::ofstream out(out_dir + "/fig8_ess_charge.csv");
        out << "hour,battery_level_kwh,ess_charge_kwh,ess_discharge_kwh\n";
        for (const auto& i : run_a3c.infos)
            out << i.hour << "," << fmt_double(i.battery_level_kwh) << ","
                << fmt_double(i.ess_charge_kwh) << "," << fmt_double(i.ess_discharge_kwh) << "\n";
    }
    {
        std::ofstream out(out_dir + "/fig9_tcl_allocation.csv");
        out << "hour,tcl_kwh,tcl_on_count,tcl_forced_kwh\n";
        for (const auto& i : run_a3c.infos)
            out << i.hour << "," << fmt_double(i.tcl_kwh) << "," << i.tcl_on_count << ","
                << fmt_double(i.tcl_forced_kwh) << "\n";
    }
    {
        std::ofstream out(out_dir + "/fig11_ppo_grid_exchange.csv");
        out << "hour,delta_kwh,market_price\n";
        for (const auto& i : run_ppo.infos)
            out << i.hour << "," << fmt_double(i.delta_kwh) << "," << fmt_double(i.market_price) << "\n";
    }
    {
        std::ofstream out(out_dir + "/fig10_cost_comparison.csv");
        out << "day,ma3c,ppo,retailer\n";
        int start = xc.learner.eval_start_day;
        std::vector<double> retail = retailer_baseline(env, start, xc.learner.eval_days);
        for (int d = 0; d < xc.learner.eval_days; ++d) {
            double ca = run_episode_greedy(env, ma3c.params, start + d).cost;
            double cp = run_episode_greedy(env, ppo.params, start + d).cost;
            out << start + d << "," << fmt_double(ca) << "," << fmt_double(cp) << ","
                << fmt_double(retail[static_cast<std::size_t>(d)]) << "\n";
        }
    }
    if (!quiet) std::cout << "figure CSVs written to " << out_dir << "\n";
}

} // namespace microgrid
