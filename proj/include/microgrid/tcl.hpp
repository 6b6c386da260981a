#pragma once
#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

namespace microgrid {

/// One thermostatically controlled heating unit. The thermal model is first
/// order: indoor temperature relaxes toward outdoor at rate `thermal_leak`
/// and rises by `heat_gain` per hour while powered.
struct TclUnit {
    double temp_in = 21.0;      // degC
    double temp_min = 18.0;     // deadband low
    double temp_max = 28.0;     // deadband high
    double power = 1.5;         // kW while on
    int switch_state = 0;       // -1 forced on, 0 free, +1 forced off
    double thermal_leak = 0.1;  // per hour, in [0,1]
    double heat_gain = 4.0;     // degC per hour at full power
};

/// Normalized position of the indoor temperature inside the deadband.
/// Deliberately unclamped: values outside [0,1] flag a deadband violation
/// and drive the forced switch actions.
inline double tcl_soc(const TclUnit& u) {
    return (u.temp_in - u.temp_min) / (u.temp_max - u.temp_min);
}

/// Advances one unit's temperature by dt hours.
inline TclUnit update_temperature(TclUnit u, double outdoor, bool heating_on, double dt) {
    u.temp_in += u.thermal_leak * (outdoor - u.temp_in) * dt;
    if (heating_on) u.temp_in += u.heat_gain * dt;
    return u;
}

struct AllocationResult {
    std::vector<bool> per_unit_on;
    double consumed = 0.0;     // kWh, including forced-on units
    double forced_on = 0.0;    // kWh consumed by units below the deadband
};

/// Priority-ordered energy allocation across the cluster.
///
/// Units above the deadband (soc > 1) are forced off and units below it
/// (soc < 0) are forced on regardless of budget; the comfort guarantee is not
/// the agent's to trade away. The remaining budget is granted coldest-first
/// (ascending soc, index as tie-break), each unit all-or-nothing at
/// power*dt. Forced-on consumption is billed on top of the budget.
inline AllocationResult allocate(const std::vector<TclUnit>& cluster, double budget, double dt) {
    AllocationResult r;
    r.per_unit_on.assign(cluster.size(), false);

    std::vector<std::size_t> order(cluster.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return tcl_soc(cluster[a]) < tcl_soc(cluster[b]);
    });

    double remaining = budget;
    for (std::size_t i : order) {
        double soc = tcl_soc(cluster[i]);
        double need = cluster[i].power * dt;
        if (soc > 1.0) continue; // forced off
        if (soc < 0.0) {         // forced on
            r.per_unit_on[i] = true;
            r.consumed += need;
            r.forced_on += need;
            continue;
        }
        if (need <= remaining) {
            r.per_unit_on[i] = true;
            r.consumed += need;
            remaining -= need;
        }
    }
    return r;
}

/// Switch state per the three-valued forced-action rule, recorded on the
/// unit after each allocation.
inline int forced_switch(const TclUnit& u) {
    double soc = tcl_soc(u);
    if (soc > 1.0) return +1; // must shed heat: off
    if (soc < 0.0) return -1; // must heat: on
    return 0;
}

inline double mean_tcl_soc(const std::vector<TclUnit>& cluster) {
    if (cluster.empty()) return 0.5; // neutral midpoint for a degenerate cluster
    double s = 0.0;
    for (const auto& u : cluster) s += tcl_soc(u);
    return s / static_cast<double>(cluster.size());
}

inline double mean_indoor_temp(const std::vector<TclUnit>& cluster, double fallback) {
    if (cluster.empty()) return fallback;
    double s = 0.0;
    for (const auto& u : cluster) s += u.temp_in;
    return s / static_cast<double>(cluster.size());
}

} // namespace microgrid
