#pragma once
#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "microgrid/battery.hpp"
#include "microgrid/config.hpp"
#include "microgrid/demand.hpp"
#include "microgrid/errors.hpp"
#include "microgrid/rng.hpp"
#include "microgrid/tcl.hpp"
#include "microgrid/wind.hpp"

namespace microgrid {

inline constexpr int kTclLevels = 4;    // 0, 1/3, 2/3, 1 of max cluster energy
inline constexpr int kPriceLevels = 5;  // -2..+2
inline constexpr int kActionCount = kTclLevels * kPriceLevels * 2 * 2; // 80
inline constexpr int kObservationDim = 7;

/// Who covers a deficit first.
enum class DeficitPriority { BatteryFirst = 0, GridFirst = 1 };
/// Where a surplus goes first.
enum class ExcessPriority { ChargeFirst = 0, SellFirst = 1 };

/// Decoded form of a discrete action index.
struct StructuredAction {
    int tcl_level = 0;   // 0..3
    int price_level = 0; // -2..+2
    DeficitPriority deficit_priority = DeficitPriority::BatteryFirst;
    ExcessPriority excess_priority = ExcessPriority::ChargeFirst;
};

/// Mixed-radix encoding: ((tcl*5 + (price+2))*2 + AD)*2 + AE.
inline int encode_action(const StructuredAction& a) {
    int price_offset = a.price_level + 2;
    return ((a.tcl_level * kPriceLevels + price_offset) * 2 +
            static_cast<int>(a.deficit_priority)) * 2 +
           static_cast<int>(a.excess_priority);
}

inline StructuredAction decode_action(int index) {
    if (index < 0 || index >= kActionCount)
        throw DomainError("action index " + std::to_string(index) + " outside 0..79");
    StructuredAction a;
    a.excess_priority = static_cast<ExcessPriority>(index & 1);
    index >>= 1;
    a.deficit_priority = static_cast<DeficitPriority>(index & 1);
    index >>= 1;
    a.price_level = index % kPriceLevels - 2;
    a.tcl_level = index / kPriceLevels;
    return a;
}

/// Complete simulator state for one hour boundary. Value-semantic: owned by
/// one worker, cheap to copy, no shared mutable internals.
struct EnvState {
    int hour_of_day = 0; // 0..23
    int day_index = 0;
    std::vector<TclUnit> tcls;
    Battery battery;
    std::vector<Household> households;
    double market_price = 0.0;  // this hour
    int price_level = 0;        // last applied mu
    double wind_available = 0.0; // usable kWh this hour (after conversion)
    double outdoor_temp = 0.0;
    double cumulative_day_cost = 0.0;     // running sum of C_cost - sales
    double price_sum_today = 0.0;         // internal prices charged so far
    double market_price_sum_today = 0.0;  // market prices seen so far
};

/// Physical energy flows of one dispatched hour.
struct DispatchResult {
    double delta = 0.0;          // kWh traded with the grid; + buy, - sell
    double ess_charge = 0.0;     // kWh drawn from the bus into the battery
    double ess_discharge = 0.0;  // kWh delivered by the battery
    double tcl_energy = 0.0;     // kWh consumed by the TCL cluster
    double tcl_forced = 0.0;     // part of tcl_energy from forced-on units
    double residential = 0.0;    // kWh consumed by households
    double unserved = 0.0;       // deficit left after battery + clamped grid
    double curtailed = 0.0;      // surplus left after battery + clamped grid
    Battery battery_after;
    std::vector<bool> tcl_on;
};

/// Per-hour accounting record; one CSV row of an episode trace.
struct StepInfo {
    int day = 0, hour = 0;
    double delta_kwh = 0.0;
    double ess_charge_kwh = 0.0, ess_discharge_kwh = 0.0;
    double battery_level_kwh = 0.0;
    double tcl_kwh = 0.0, tcl_forced_kwh = 0.0;
    int tcl_on_count = 0;
    double residential_kwh = 0.0;
    double wind_kwh = 0.0, curtailed_kwh = 0.0, unserved_kwh = 0.0;
    double market_price = 0.0, internal_price = 0.0;
    double revenue = 0.0, cost = 0.0;
    double ess_depreciation = 0.0, compensation = 0.0;
    double grid_buy_cost = 0.0, grid_sell_revenue = 0.0;
    double cap_penalty = 0.0; // charged once, on the terminal hour
    double reward = 0.0;
};

struct StepOutcome {
    EnvState next_state;
    double reward = 0.0;
    bool terminal = false;
    StepInfo info;
};

/// Runs the priority-ordered energy balance for one hour. The TCL budget is
/// tcl_level/3 of the whole cluster's hourly energy; deficits and surpluses
/// are routed by the action's priority flags; grid exchange is clamped to the
/// import/export limits with the residual reported as unserved or curtailed.
inline DispatchResult dispatch(const EnvConfig& cfg, const std::vector<TclUnit>& tcls,
                               const Battery& battery, double wind_kwh, double residential_kwh,
                               const StructuredAction& action, double dt) {
    DispatchResult r;
    r.battery_after = battery;
    r.residential = residential_kwh;

    double budget = (action.tcl_level / 3.0) * static_cast<double>(tcls.size()) *
                    cfg.tcl_power_kw * dt;
    AllocationResult alloc = allocate(tcls, budget, dt);
    r.tcl_energy = alloc.consumed;
    r.tcl_forced = alloc.forced_on;
    r.tcl_on = std::move(alloc.per_unit_on);

    double import_limit = cfg.grid_import_limit_kw * dt;
    double export_limit = cfg.grid_export_limit_kw * dt;
    double net = wind_kwh - r.tcl_energy - residential_kwh;

    if (net < 0) {
        double deficit = -net;
        if (action.deficit_priority == DeficitPriority::BatteryFirst) {
            auto d = discharge(r.battery_after, deficit, dt);
            r.battery_after = d.battery;
            r.ess_discharge = d.delivered;
            double buy = std::min(deficit - d.delivered, import_limit);
            r.delta = buy;
            r.unserved = deficit - d.delivered - buy;
        } else {
            double buy = std::min(deficit, import_limit);
            auto d = discharge(r.battery_after, deficit - buy, dt);
            r.battery_after = d.battery;
            r.ess_discharge = d.delivered;
            r.delta = buy;
            r.unserved = deficit - buy - d.delivered;
        }
    } else if (net > 0) {
        if (action.excess_priority == ExcessPriority::ChargeFirst) {
            auto c = charge(r.battery_after, net, dt);
            r.battery_after = c.battery;
            r.ess_charge = c.accepted;
            double sell = std::min(c.overflow, export_limit);
            r.delta = -sell;
            r.curtailed = c.overflow - sell;
        } else {
            double sell = std::min(net, export_limit);
            auto c = charge(r.battery_after, net - sell, dt);
            r.battery_after = c.battery;
            r.ess_charge = c.accepted;
            r.delta = -sell;
            r.curtailed = net - sell - c.accepted;
        }
    }
    return r;
}

/// Money components of one hour given its dispatched flows.
struct RewardBreakdown {
    double revenue = 0.0;
    double cost = 0.0;
    double ess_depreciation = 0.0;
    double grid_buy_cost = 0.0;
    double grid_sell_revenue = 0.0;
    double reward = 0.0;
};

/// Revenue = internal sales (households + TCL energy) + grid sales at the
/// sell price. Cost = battery depreciation + grid purchases at the buy price
/// + shed compensation + unserved penalty + any day-end cap penalty.
inline RewardBreakdown step_reward(const EnvConfig& cfg, const DispatchResult& d,
                                   double market_price, double internal_price_now,
                                   double compensation_paid, double cap_penalty) {
    RewardBreakdown r;
    double buy = std::max(d.delta, 0.0);
    double sell = std::max(-d.delta, 0.0);
    double price_up = cfg.grid_buy_markup * market_price;    // P_Ut
    double price_down = cfg.grid_sell_markdown * market_price; // P_Dt

    double tcl_price = cfg.tcl_revenue_at_internal_price ? internal_price_now : cfg.wind_cost_per_kwh;
    r.grid_sell_revenue = price_down * sell;
    r.revenue = internal_price_now * d.residential + tcl_price * d.tcl_energy + r.grid_sell_revenue;

    double throughput = d.ess_charge + d.ess_discharge;
    r.ess_depreciation = d.battery_after.depreciation_rate * throughput;
    r.grid_buy_cost = price_up * buy;
    r.cost = r.ess_depreciation + r.grid_buy_cost + compensation_paid +
             cfg.unserved_penalty_per_kwh * d.unserved + cap_penalty;

    r.reward = r.revenue - r.cost;
    return r;
}

/// Min-max normalized 7-component observation; everything clamped to [0,1].
inline std::array<double, kObservationDim> encode_observation(const EnvState& s, const EnvConfig& cfg) {
    auto norm = [](double v, double lo, double hi) {
        return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
    };
    double base_load_total = 0.0;
    for (const auto& h : s.households)
        base_load_total += h.base_load[static_cast<std::size_t>(s.hour_of_day)];
    double temp_fallback = 0.5 * (cfg.tcl_temp_min_c + cfg.tcl_temp_max_c);
    return {
        std::clamp(mean_tcl_soc(s.tcls), 0.0, 1.0),
        norm(battery_soc(s.battery), 0.0, 1.0),
        norm(s.market_price, 0.0, cfg.obs_price_max),
        norm(mean_indoor_temp(s.tcls, temp_fallback), cfg.obs_temp_min_c, cfg.obs_temp_max_c),
        norm(s.wind_available, 0.0, cfg.obs_wind_max_kwh),
        norm(base_load_total, 0.0, cfg.obs_load_max_kwh),
        norm(static_cast<double>(s.hour_of_day), 0.0, 23.0),
    };
}

/// Immutable world data shared (read-only) by any number of environment
/// instances: configuration, exogenous traces, and the seeded component
/// fleet built once from the config.
struct Scenario {
    EnvConfig cfg;
    WindTrace wind;
    PriceSeries prices;
    std::vector<Household> households;
    std::vector<TclUnit> tcl_fleet; // deadband/leak heterogeneity; temps set at reset

    static std::shared_ptr<const Scenario> build(const EnvConfig& cfg, WindTrace wind,
                                                 PriceSeries prices,
                                                 std::vector<Household> households_override = {}) {
        cfg.validate();
        if (cfg.battery_initial_soc * cfg.battery_capacity_kwh < cfg.battery_capacity_min_kwh)
            throw ConfigError("battery_initial_soc puts the level below capacity_min");
        auto sc = std::make_shared<Scenario>();
        sc->cfg = cfg;
        sc->wind = std::move(wind);
        sc->prices = std::move(prices);
        if (sc->prices.price.empty()) throw ConfigError("price series is empty");
        if (sc->wind.gross_kwh.empty()) throw ConfigError("wind trace is empty");

        if (!households_override.empty()) {
            sc->households = std::move(households_override);
        } else {
            Rng rng(derive_seed(cfg.seed, seed_tag::households));
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            sc->households.reserve(static_cast<std::size_t>(cfg.household_count));
            for (int i = 0; i < cfg.household_count; ++i) {
                Household h;
                double scale = cfg.household_base_load_kwh *
                               (1.0 + cfg.household_load_jitter * u(rng));
                for (int hr = 0; hr < kHoursPerDay; ++hr)
                    h.base_load[static_cast<std::size_t>(hr)] =
                        std::max(0.0, scale * residential_shape(hr));
                h.flexibility = std::clamp(
                    cfg.household_flexibility_mean + cfg.household_flexibility_jitter * u(rng), 0.0, 1.0);
                h.compensation_prob = cfg.household_compensation_prob;
                sc->households.push_back(h);
            }
        }

        Rng rng(derive_seed(cfg.seed, seed_tag::tcl_init));
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        sc->tcl_fleet.reserve(static_cast<std::size_t>(cfg.tcl_count));
        for (int i = 0; i < cfg.tcl_count; ++i) {
            TclUnit t;
            t.temp_min = cfg.tcl_temp_min_c + cfg.tcl_deadband_jitter_c * u(rng);
            t.temp_max = cfg.tcl_temp_max_c + cfg.tcl_deadband_jitter_c * u(rng);
            if (t.temp_max - t.temp_min < 0.5) t.temp_max = t.temp_min + 0.5;
            t.power = cfg.tcl_power_kw;
            t.thermal_leak = std::clamp(cfg.tcl_leak_mean + cfg.tcl_leak_jitter * u(rng), 0.0, 1.0);
            t.heat_gain = cfg.tcl_heat_gain_c_per_hour;
            sc->tcl_fleet.push_back(t);
        }
        return sc;
    }

    /// Canonical two-peak residential daily shape, mean 1.0 over 24 hours.
    static double residential_shape(int hour) {
        static const std::array<double, kHoursPerDay> shape = [] {
            std::array<double, kHoursPerDay> raw{};
            double sum = 0.0;
            for (int h = 0; h < kHoursPerDay; ++h) {
                double morning = 0.45 * std::exp(-0.5 * (h - 8.0) * (h - 8.0) / 2.25);
                double evening = 0.80 * std::exp(-0.5 * (h - 19.5) * (h - 19.5) / 6.25);
                raw[static_cast<std::size_t>(h)] = 0.50 + morning + evening;
                sum += raw[static_cast<std::size_t>(h)];
            }
            for (auto& v : raw) v *= kHoursPerDay / sum;
            return raw;
        }();
        return shape[static_cast<std::size_t>(hour)];
    }

    double outdoor_temp(int hour) const {
        return cfg.outdoor_temp_mean_c +
               cfg.outdoor_temp_swing_c * std::sin(2.0 * M_PI * (hour - 15.0) / 24.0 + M_PI / 2.0);
    }
};

/// The composed MDP. Instances are lightweight handles over a shared
/// immutable scenario; each worker owns its own instance and states.
class Environment {
public:
    explicit Environment(std::shared_ptr<const Scenario> scenario)
        : sc_(std::move(scenario)) {}

    const Scenario& scenario() const { return *sc_; }
    const EnvConfig& config() const { return sc_->cfg; }

    /// Fresh state at hour 0 of `day_index`. TCL temperatures start uniform
    /// inside each unit's deadband, seeded by (config seed, day).
    EnvState reset(int day_index) const {
        if (day_index < 0 || day_index >= sc_->wind.days())
            throw DomainError("day_index " + std::to_string(day_index) +
                              " beyond wind trace of " + std::to_string(sc_->wind.days()) + " days");
        EnvState s;
        s.day_index = day_index;
        s.hour_of_day = 0;
        s.households = sc_->households;
        s.tcls = sc_->tcl_fleet;
        Rng rng(derive_seed(sc_->cfg.seed, seed_tag::tcl_init, static_cast<std::uint64_t>(day_index) + 1));
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        for (auto& t : s.tcls) {
            t.temp_in = t.temp_min + u01(rng) * (t.temp_max - t.temp_min);
            t.switch_state = 0;
        }
        s.battery.capacity_min = sc_->cfg.battery_capacity_min_kwh;
        s.battery.capacity_max = sc_->cfg.battery_capacity_kwh;
        s.battery.soc_min = sc_->cfg.battery_soc_min;
        s.battery.soc_max = sc_->cfg.battery_soc_max;
        s.battery.p_charge_max = sc_->cfg.battery_p_charge_max_kw;
        s.battery.p_discharge_max = sc_->cfg.battery_p_discharge_max_kw;
        s.battery.efficiency = sc_->cfg.battery_efficiency;
        s.battery.depreciation_rate = sc_->cfg.battery_depreciation_per_kwh;
        s.battery.level = sc_->cfg.battery_initial_soc * sc_->cfg.battery_capacity_kwh;
        s.battery.throughput_today = 0.0;
        load_exogenous(s);
        return s;
    }

    /// One hour of the MDP: decode, price the households, allocate and heat
    /// the TCLs, dispatch energy, account money, advance the clock.
    StepOutcome step(const EnvState& state, int action_index) const {
        const EnvConfig& cfg = sc_->cfg;
        const double dt = 1.0;
        StructuredAction action = decode_action(action_index);

        PriceContext ctx{state.market_price, cfg.price_step_width, action.price_level};
        double p_int = internal_price(ctx);

        double ref_price = cfg.compensation_reference_price > 0 ? cfg.compensation_reference_price
                                                                : state.market_price;
        double res_load = 0.0, comp = 0.0;
        for (const auto& h : state.households) {
            res_load += responsive_load(h, action.price_level, state.hour_of_day);
            comp += compensation(h, action.price_level, state.hour_of_day, ref_price, dt);
        }

        DispatchResult d = dispatch(cfg, state.tcls, state.battery, state.wind_available,
                                    res_load, action, dt);

        StepOutcome out;
        out.next_state = state;
        out.next_state.battery = d.battery_after;
        out.next_state.price_level = action.price_level;
        for (std::size_t i = 0; i < out.next_state.tcls.size(); ++i) {
            auto& unit = out.next_state.tcls[i];
            unit = update_temperature(unit, state.outdoor_temp, d.tcl_on[i], dt);
            unit.switch_state = forced_switch(unit);
        }

        bool last_hour = state.hour_of_day == kHoursPerDay - 1;
        double cap_penalty = 0.0;
        double price_sum = state.price_sum_today + p_int;
        double market_sum = state.market_price_sum_today + state.market_price;
        if (last_hour) {
            // End-of-day tariff audit as a reward penalty.
            double mean_int = price_sum / kHoursPerDay;
            double mean_mkt = market_sum / kHoursPerDay;
            double excess = std::max(0.0, (mean_int - mean_mkt) / mean_mkt - cfg.price_cap_fraction);
            cap_penalty = cfg.price_cap_penalty * excess;
        }

        RewardBreakdown money = step_reward(cfg, d, state.market_price, p_int, comp, cap_penalty);

        StepInfo& info = out.info;
        info.day = state.day_index;
        info.hour = state.hour_of_day;
        info.delta_kwh = d.delta;
        info.ess_charge_kwh = d.ess_charge;
        info.ess_discharge_kwh = d.ess_discharge;
        info.battery_level_kwh = d.battery_after.level;
        info.tcl_kwh = d.tcl_energy;
        info.tcl_forced_kwh = d.tcl_forced;
        info.tcl_on_count = static_cast<int>(std::count(d.tcl_on.begin(), d.tcl_on.end(), true));
        info.residential_kwh = d.residential;
        info.wind_kwh = state.wind_available;
        info.curtailed_kwh = d.curtailed;
        info.unserved_kwh = d.unserved;
        info.market_price = state.market_price;
        info.internal_price = p_int;
        info.revenue = money.revenue;
        info.cost = money.cost;
        info.ess_depreciation = money.ess_depreciation;
        info.compensation = comp;
        info.grid_buy_cost = money.grid_buy_cost;
        info.grid_sell_revenue = money.grid_sell_revenue;
        info.cap_penalty = cap_penalty;
        info.reward = money.reward;
        out.reward = money.reward;

        EnvState& next = out.next_state;
        next.price_sum_today = price_sum;
        next.market_price_sum_today = market_sum;
        next.cumulative_day_cost += money.cost - money.grid_sell_revenue +
                                    cfg.wind_cost_per_kwh * state.wind_available;
        out.terminal = last_hour;
        if (last_hour) {
            // Continuation state: next day's hour 0 (wrapping at the trace
            // end), fresh daily accumulators, battery level carried over.
            next.hour_of_day = 0;
            next.day_index = (state.day_index + 1) % sc_->wind.days();
            next.cumulative_day_cost = 0.0;
            next.price_sum_today = 0.0;
            next.market_price_sum_today = 0.0;
            next.battery.throughput_today = 0.0;
        } else {
            next.hour_of_day = state.hour_of_day + 1;
        }
        load_exogenous(next);
        return out;
    }

    /// Eq. 1 style operating cost of a complete 24-hour episode: generation
    /// cost + battery depreciation + grid purchases, net of grid sales, plus
    /// compensation and penalty outlays. Internal revenue is not netted.
    static double daily_cost(const std::vector<StepInfo>& episode, double wind_cost_per_kwh) {
        if (episode.size() != kHoursPerDay)
            throw DomainError("daily_cost requires a complete 24-step episode");
        for (int h = 0; h < kHoursPerDay; ++h)
            if (episode[static_cast<std::size_t>(h)].hour != h)
                throw DomainError("daily_cost: episode hours are not 0..23 in order");
        double total = 0.0;
        for (const auto& i : episode)
            total += i.cost - i.grid_sell_revenue + wind_cost_per_kwh * i.wind_kwh;
        return total;
    }

private:
    void load_exogenous(EnvState& s) const {
        s.wind_available = wind_power(sc_->wind.gross(s.day_index, s.hour_of_day), sc_->cfg.wind_conversion);
        s.market_price = sc_->prices.at(s.day_index, s.hour_of_day);
        s.outdoor_temp = sc_->outdoor_temp(s.hour_of_day);
    }

    std::shared_ptr<const Scenario> sc_;
};

/// Builds the scenario described by an experiment config, loading CSVs where
/// paths are given and synthesizing otherwise.
inline std::shared_ptr<const Scenario> build_scenario(const ExperimentConfig& xc) {
    const EnvConfig& e = xc.env;
    WindTrace wind = xc.wind_csv.empty()
                         ? synth_wind(e.days, e.seed, e.wind_mean_kwh, e.wind_variability, e.wind_conversion)
                         : load_wind_csv(xc.wind_csv, e.wind_conversion);
    PriceSeries prices = xc.price_csv.empty()
                             ? synth_prices(1, e.market_price_base, e.market_price_morning_peak,
                                            e.market_price_evening_peak)
                             : load_price_csv(xc.price_csv);
    std::vector<Household> households;
    if (!xc.load_csv.empty()) {
        // Load CSV schema: (hour, kWh); one canonical profile applied to all
        // households with per-household jitter still coming from the seed.
        auto rows = read_csv(xc.load_csv);
        std::size_t first = (!rows.empty() && !rows[0].empty() && rows[0][0] == "hour") ? 1 : 0;
        if (rows.size() - first != kHoursPerDay)
            throw DataError(xc.load_csv + ": expected 24 hourly rows");
        std::array<double, kHoursPerDay> profile{};
        for (std::size_t i = first; i < rows.size(); ++i) {
            if (rows[i].size() != 2) throw DataError(xc.load_csv + ": expected 2 fields per row");
            int hour = static_cast<int>(parse_double(rows[i][0], xc.load_csv));
            double kwh = parse_double(rows[i][1], xc.load_csv);
            if (hour < 0 || hour >= kHoursPerDay) throw DataError(xc.load_csv + ": hour outside 0..23");
            if (kwh < 0) throw DataError(xc.load_csv + ": negative load");
            profile[static_cast<std::size_t>(hour)] = kwh;
        }
        Rng rng(derive_seed(e.seed, seed_tag::households));
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        households.reserve(static_cast<std::size_t>(e.household_count));
        for (int i = 0; i < e.household_count; ++i) {
            Household h;
            double scale = 1.0 + e.household_load_jitter * u(rng);
            for (int hr = 0; hr < kHoursPerDay; ++hr)
                h.base_load[static_cast<std::size_t>(hr)] =
                    std::max(0.0, scale * profile[static_cast<std::size_t>(hr)]);
            h.flexibility = std::clamp(
                e.household_flexibility_mean + e.household_flexibility_jitter * u(rng), 0.0, 1.0);
            h.compensation_prob = e.household_compensation_prob;
            households.push_back(h);
        }
    }
    return Scenario::build(e, std::move(wind), std::move(prices), std::move(households));
}

} // namespace microgrid
