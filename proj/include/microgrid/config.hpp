#pragma once
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "microgrid/errors.hpp"

namespace microgrid {

/// Simulator parameters. Every knob of the microgrid model lives here with a
/// documented default; a config file only needs to override what it changes.
struct EnvConfig {
    std::uint64_t seed = 42;

    // Component counts.
    int tcl_count = 150;
    int household_count = 150;

    // TCL thermal model. Per-unit deadbands and leak rates get seeded uniform
    // jitter around these means; power is uniform across the cluster.
    double tcl_power_kw = 1.5;            // electrical power of one unit when on
    double tcl_temp_min_c = 18.0;         // deadband low (mean)
    double tcl_temp_max_c = 28.0;         // deadband high (mean)
    double tcl_deadband_jitter_c = 1.0;   // +/- uniform jitter on each bound
    double tcl_leak_mean = 0.10;          // fraction of indoor/outdoor gap lost per hour
    double tcl_leak_jitter = 0.04;
    double tcl_heat_gain_c_per_hour = 4.0; // indoor temp rise per hour at full power
    double outdoor_temp_mean_c = 2.0;      // cold-climate scenario
    double outdoor_temp_swing_c = 3.0;     // diurnal sinusoid amplitude

    // Battery.
    double battery_capacity_kwh = 250.0;      // S_bat,max
    double battery_capacity_min_kwh = 0.0;    // S_bat,min
    double battery_soc_min = 0.10;
    double battery_soc_max = 0.95;
    double battery_p_charge_max_kw = 60.0;
    double battery_p_discharge_max_kw = 60.0;
    double battery_efficiency = 0.95;         // applied on both directions
    double battery_depreciation_per_kwh = 0.01; // money per kWh cycled
    double battery_initial_soc = 0.5;

    // Households. Base profiles are a two-peak residential shape scaled per
    // household by seeded jitter.
    double household_base_load_kwh = 1.0;   // mean hourly load of one household
    double household_load_jitter = 0.30;    // relative scale jitter
    double household_flexibility_mean = 0.30;  // rho
    double household_flexibility_jitter = 0.10;
    double household_compensation_prob = 0.50; // alpha

    // Internal tariff.
    double price_step_width = 0.40;         // w, money/kWh per price level step
    double compensation_reference_price = 0.0; // 0 = bill shed-compensation at current market price
    double price_cap_fraction = 0.10;       // intraday mean may exceed market mean by this
    double price_cap_penalty = 500.0;       // money per unit of fractional excess, charged at day end
    bool tcl_revenue_at_internal_price = true; // false: bill TCL energy at wind_cost_per_kwh

    // Grid trade. Buy/sell prices are multiples of the market price; the
    // markup/markdown pair keeps buy strictly above sell.
    double grid_buy_markup = 1.25;     // c_b = markup * market
    double grid_sell_markdown = 0.75;  // c_s = markdown * market
    double grid_import_limit_kw = 400.0; // P_maxgrid
    double grid_export_limit_kw = 400.0; // -P_mingrid
    double unserved_penalty_per_kwh = 50.0; // ~10x peak market price
    double wind_cost_per_kwh = 0.0;    // CE term; the source never prices it
    double wind_conversion = 0.90;     // beta_wind

    // Market price curve (synthetic two-peak diurnal shape, CSV-overridable).
    double market_price_base = 2.0;
    double market_price_morning_peak = 1.5; // gaussian bump centered 09:00
    double market_price_evening_peak = 2.5; // gaussian bump centered 19:00

    // Observation min-max normalization bounds. Values are clamped to these
    // before scaling, so encoding is total.
    double obs_price_max = 8.0;
    double obs_temp_min_c = 0.0;
    double obs_temp_max_c = 40.0;
    double obs_wind_max_kwh = 400.0;
    double obs_load_max_kwh = 400.0;

    // Synthetic data generation (used when no CSV paths are given).
    int days = 30;
    double wind_mean_kwh = 150.0;
    double wind_variability = 0.35;

    void validate() const {
        auto fail = [](const std::string& m) { throw ConfigError("invalid config: " + m); };
        if (tcl_count < 0) fail("tcl_count < 0");
        if (household_count < 0) fail("household_count < 0");
        if (tcl_power_kw <= 0) fail("tcl_power_kw must be > 0");
        if (tcl_temp_min_c >= tcl_temp_max_c) fail("tcl deadband empty");
        if (tcl_leak_mean < 0 || tcl_leak_mean > 1) fail("tcl_leak_mean outside [0,1]");
        if (battery_capacity_kwh <= 0) fail("battery_capacity_kwh must be > 0");
        if (battery_capacity_min_kwh < 0 || battery_capacity_min_kwh > battery_capacity_kwh)
            fail("battery_capacity_min_kwh outside [0, capacity]");
        if (battery_soc_min < 0 || battery_soc_max > 1 || battery_soc_min >= battery_soc_max)
            fail("battery soc bounds must satisfy 0 <= min < max <= 1");
        if (battery_efficiency <= 0 || battery_efficiency > 1) fail("battery_efficiency outside (0,1]");
        if (battery_initial_soc < battery_soc_min || battery_initial_soc > battery_soc_max)
            fail("battery_initial_soc outside soc bounds");
        if (battery_p_charge_max_kw < 0 || battery_p_discharge_max_kw < 0) fail("battery rate limits < 0");
        if (household_flexibility_mean < 0 || household_flexibility_mean > 1) fail("flexibility outside [0,1]");
        if (household_compensation_prob < 0 || household_compensation_prob > 1) fail("compensation_prob outside [0,1]");
        if (price_step_width < 0) fail("price_step_width < 0");
        if (grid_buy_markup <= grid_sell_markdown) fail("grid buy price must exceed sell price");
        if (grid_import_limit_kw < 0 || grid_export_limit_kw < 0) fail("grid limits < 0");
        if (market_price_base <= 0) fail("market_price_base must be > 0");
        if (wind_conversion < 0 || wind_conversion > 1) fail("wind_conversion outside [0,1]");
        if (days < 1) fail("days < 1");
        if (obs_price_max <= 0 || obs_wind_max_kwh <= 0 || obs_load_max_kwh <= 0) fail("obs bounds must be > 0");
        if (obs_temp_min_c >= obs_temp_max_c) fail("obs temp bounds empty");
        if (unserved_penalty_per_kwh < 0) fail("unserved_penalty_per_kwh < 0");
        if (price_cap_penalty < 0) fail("price_cap_penalty < 0");
    }
};

/// Training parameters shared by all agents.
struct LearnerConfig {
    double gamma = 0.99;
    int n_steps = 8;            // t_max of the per-thread rollout
    int workers = 4;
    double learning_rate = 0.001;
    int minibatch = 200;        // replay sample size
    int update_batch = 100;     // global steps between replay updates
    double entropy_coef = 0.01;
    double epsilon_start = 1.0;
    double epsilon_decay = 0.00005; // linear per env step
    double epsilon_min = 0.05;
    int replay_capacity = 500;
    bool replay_enabled = true;
    double reward_scale = 0.002; // gradient-side scaling of money units
    int episodes = 30;           // per-worker training budget, one episode = one day
    double ppo_clip = 0.2;
    int ppo_epochs = 4;
    int ppo_batch_episodes = 6;
    int dqn_target_sync_steps = 100;
    int eval_days = 10;
    int eval_start_day = 0;
    int checkpoint_every = 10;   // episodes between periodic checkpoints

    void validate() const {
        auto fail = [](const std::string& m) { throw ConfigError("invalid config: " + m); };
        if (gamma < 0 || gamma > 1) fail("gamma outside [0,1]");
        if (n_steps < 1) fail("n_steps < 1");
        if (workers < 1) fail("workers < 1");
        if (learning_rate <= 0) fail("learning_rate must be > 0");
        if (minibatch < 1 || replay_capacity < 1) fail("minibatch/replay_capacity < 1");
        if (minibatch > replay_capacity) fail("minibatch exceeds replay_capacity");
        if (update_batch < 1) fail("update_batch < 1");
        if (epsilon_start < 0 || epsilon_start > 1) fail("epsilon_start outside [0,1]");
        if (epsilon_min < 0 || epsilon_min > epsilon_start) fail("epsilon_min outside [0, epsilon_start]");
        if (epsilon_decay < 0) fail("epsilon_decay < 0");
        if (reward_scale <= 0) fail("reward_scale must be > 0");
        if (episodes < 1) fail("episodes < 1");
        if (ppo_clip <= 0) fail("ppo_clip must be > 0");
        if (ppo_epochs < 1 || ppo_batch_episodes < 1) fail("ppo epochs/batch < 1");
        if (eval_days < 1) fail("eval_days < 1");
        if (eval_start_day < 0) fail("eval_start_day < 0");
        if (checkpoint_every < 1) fail("checkpoint_every < 1");
    }
};

/// Full experiment: model + learner + data sources + run outputs.
struct ExperimentConfig {
    EnvConfig env;
    LearnerConfig learner;
    std::string wind_csv;    // empty = synthesize from env.seed
    std::string price_csv;   // empty = synthetic diurnal curve
    std::string load_csv;    // empty = synthetic household profiles
    std::string output_dir = "runs/out";

    void validate() const {
        env.validate();
        learner.validate();
    }
};

namespace detail {

struct ConfigBinding {
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
};

inline double to_double(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
}

inline std::int64_t to_int(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        long long i = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    }
}

inline bool to_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

inline std::string fmt_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
inline std::string fmt_value(std::int64_t v) { return std::to_string(v); }
inline std::string fmt_value(bool v) { return v ? "true" : "false"; }

/// One ordered table mapping key names onto ExperimentConfig fields; drives
/// parsing, serialization and the documented-keys listing together so the
/// three can never drift apart.
inline const std::vector<std::pair<std::string, ConfigBinding>>& config_bindings() {
    static const std::vector<std::pair<std::string, ConfigBinding>> table = [] {
        std::vector<std::pair<std::string, ConfigBinding>> t;
        auto envnum = [&t](const std::string& key, auto member) {
            t.push_back({key,
                         {[member](const ExperimentConfig& c) { return fmt_value(c.env.*member); },
                          [member](ExperimentConfig& c, const std::string& v, const std::string& k) {
                              c.env.*member = to_double(v, k);
                          }}});
        };
        auto envint = [&t](const std::string& key, auto member) {
            t.push_back({key,
                         {[member](const ExperimentConfig& c) {
                              return fmt_value(static_cast<std::int64_t>(c.env.*member));
                          },
                          [member](ExperimentConfig& c, const std::string& v, const std::string& k) {
                              c.env.*member = static_cast<int>(to_int(v, k));
                          }}});
        };
        auto envbool = [&t](const std::string& key, auto member) {
            t.push_back({key,
                         {[member](const ExperimentConfig& c) { return fmt_value(c.env.*member); },
                          [member](ExperimentConfig& c, const std::string& v, const std::string& k) {
                              c.env.*member = to_bool(v, k);
                          }}});
        };
        auto lnum = [&t](const std::string& key, auto member) {
            t.push_back({key,
                         {[member](const ExperimentConfig& c) { return fmt_value(c.learner.*member); },
                          [member](ExperimentConfig& c, const std::string& v, const std::string& k) {
                              c.learner.*member = to_double(v, k);
                          }}});
        };
        auto lint = [&t](const std::string& key, auto member) {
            t.push_back({key,
                         {[member](const ExperimentConfig& c) {
                              return fmt_value(static_cast<std::int64_t>(c.learner.*member));
                          },
                          [member](ExperimentConfig& c, const std::string& v, const std::string& k) {
                              c.learner.*member = static_cast<int>(to_int(v, k));
                          }}});
        };
        auto lbool = [&t](const std::string& key, auto member) {
            t.push_back({key,
                         {[member](const ExperimentConfig& c) { return fmt_value(c.learner.*member); },
                          [member](ExperimentConfig& c, const std::string& v, const std::string& k) {
                              c.learner.*member = to_bool(v, k);
                          }}});
        };
        auto str = [&t](const std::string& key, auto member) {
            t.push_back({key,
                         {[member](const ExperimentConfig& c) { return c.*member; },
                          [member](ExperimentConfig& c, const std::string& v, const std::string&) {
                              c.*member = v;
                          }}});
        };

        t.push_back({"seed",
                     {[](const ExperimentConfig& c) {
                          return std::to_string(c.env.seed);
                      },
                      [](ExperimentConfig& c, const std::string& v, const std::string& k) {
                          c.env.seed = static_cast<std::uint64_t>(to_int(v, k));
                      }}});
        envint("tcl_count", &EnvConfig::tcl_count);
        envint("household_count", &EnvConfig::household_count);
        envnum("tcl_power_kw", &EnvConfig::tcl_power_kw);
        envnum("tcl_temp_min_c", &EnvConfig::tcl_temp_min_c);
        envnum("tcl_temp_max_c", &EnvConfig::tcl_temp_max_c);
        envnum("tcl_deadband_jitter_c", &EnvConfig::tcl_deadband_jitter_c);
        envnum("tcl_leak_mean", &EnvConfig::tcl_leak_mean);
        envnum("tcl_leak_jitter", &EnvConfig::tcl_leak_jitter);
        envnum("tcl_heat_gain_c_per_hour", &EnvConfig::tcl_heat_gain_c_per_hour);
        envnum("outdoor_temp_mean_c", &EnvConfig::outdoor_temp_mean_c);
        envnum("outdoor_temp_swing_c", &EnvConfig::outdoor_temp_swing_c);
        envnum("battery_capacity_kwh", &EnvConfig::battery_capacity_kwh);
        envnum("battery_capacity_min_kwh", &EnvConfig::battery_capacity_min_kwh);
        envnum("battery_soc_min", &EnvConfig::battery_soc_min);
        envnum("battery_soc_max", &EnvConfig::battery_soc_max);
        envnum("battery_p_charge_max_kw", &EnvConfig::battery_p_charge_max_kw);
        envnum("battery_p_discharge_max_kw", &EnvConfig::battery_p_discharge_max_kw);
        envnum("battery_efficiency", &EnvConfig::battery_efficiency);
        envnum("battery_depreciation_per_kwh", &EnvConfig::battery_depreciation_per_kwh);
        envnum("battery_initial_soc", &EnvConfig::battery_initial_soc);
        envnum("household_base_load_kwh", &EnvConfig::household_base_load_kwh);
        envnum("household_load_jitter", &EnvConfig::household_load_jitter);
        envnum("household_flexibility_mean", &EnvConfig::household_flexibility_mean);
        envnum("household_flexibility_jitter", &EnvConfig::household_flexibility_jitter);
        envnum("household_compensation_prob", &EnvConfig::household_compensation_prob);
        envnum("price_step_width", &EnvConfig::price_step_width);
        envnum("compensation_reference_price", &EnvConfig::compensation_reference_price);
        envnum("price_cap_fraction", &EnvConfig::price_cap_fraction);
        envnum("price_cap_penalty", &EnvConfig::price_cap_penalty);
        envbool("tcl_revenue_at_internal_price", &EnvConfig::tcl_revenue_at_internal_price);
        envnum("grid_buy_markup", &EnvConfig::grid_buy_markup);
        envnum("grid_sell_markdown", &EnvConfig::grid_sell_markdown);
        envnum("grid_import_limit_kw", &EnvConfig::grid_import_limit_kw);
        envnum("grid_export_limit_kw", &EnvConfig::grid_export_limit_kw);
        envnum("unserved_penalty_per_kwh", &EnvConfig::unserved_penalty_per_kwh);
        envnum("wind_cost_per_kwh", &EnvConfig::wind_cost_per_kwh);
        envnum("wind_conversion", &EnvConfig::wind_conversion);
        envnum("market_price_base", &EnvConfig::market_price_base);
        envnum("market_price_morning_peak", &EnvConfig::market_price_morning_peak);
        envnum("market_price_evening_peak", &EnvConfig::market_price_evening_peak);
        envnum("obs_price_max", &EnvConfig::obs_price_max);
        envnum("obs_temp_min_c", &EnvConfig::obs_temp_min_c);
        envnum("obs_temp_max_c", &EnvConfig::obs_temp_max_c);
        envnum("obs_wind_max_kwh", &EnvConfig::obs_wind_max_kwh);
        envnum("obs_load_max_kwh", &EnvConfig::obs_load_max_kwh);
        envint("days", &EnvConfig::days);
        envnum("wind_mean_kwh", &EnvConfig::wind_mean_kwh);
        envnum("wind_variability", &EnvConfig::wind_variability);

        lnum("gamma", &LearnerConfig::gamma);
        lint("n_steps", &LearnerConfig::n_steps);
        lint("workers", &LearnerConfig::workers);
        lnum("learning_rate", &LearnerConfig::learning_rate);
        lint("minibatch", &LearnerConfig::minibatch);
        lint("update_batch", &LearnerConfig::update_batch);
        lnum("entropy_coef", &LearnerConfig::entropy_coef);
        lnum("epsilon_start", &LearnerConfig::epsilon_start);
        lnum("epsilon_decay", &LearnerConfig::epsilon_decay);
        lnum("epsilon_min", &LearnerConfig::epsilon_min);
        lint("replay_capacity", &LearnerConfig::replay_capacity);
        lbool("replay_enabled", &LearnerConfig::replay_enabled);
        lnum("reward_scale", &LearnerConfig::reward_scale);
        lint("episodes", &LearnerConfig::episodes);
        lnum("ppo_clip", &LearnerConfig::ppo_clip);
        lint("ppo_epochs", &LearnerConfig::ppo_epochs);
        lint("ppo_batch_episodes", &LearnerConfig::ppo_batch_episodes);
        lint("dqn_target_sync_steps", &LearnerConfig::dqn_target_sync_steps);
        lint("eval_days", &LearnerConfig::eval_days);
        lint("eval_start_day", &LearnerConfig::eval_start_day);
        lint("checkpoint_every", &LearnerConfig::checkpoint_every);

        str("wind_csv", &ExperimentConfig::wind_csv);
        str("price_csv", &ExperimentConfig::price_csv);
        str("load_csv", &ExperimentConfig::load_csv);
        str("output_dir", &ExperimentConfig::output_dir);
        return t;
    }();
    return table;
}

} // namespace detail

/// Parses "key = value" lines; '#' starts a comment, blank lines are skipped.
/// Unknown keys are errors (catches typos early).
inline ExperimentConfig parse_config_text(std::istream& in, const std::string& origin = "<config>") {
    ExperimentConfig cfg;
    std::map<std::string, const detail::ConfigBinding*> index;
    for (const auto& [key, binding] : detail::config_bindings()) index[key] = &binding;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        std::string stripped = trim(line);
        if (stripped.empty()) continue;
        auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        auto it = index.find(key);
        if (it == index.end())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        it->second->set(cfg, value, key);
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    return parse_config_text(in, path);
}

/// Serializes every key (resolved values, table order). Re-parsing the output
/// reproduces the config exactly; run directories store this for provenance.
inline std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    for (const auto& [key, binding] : detail::config_bindings())
        out << key << " = " << binding.get(cfg) << "\n";
    return out.str();
}

} // namespace microgrid
