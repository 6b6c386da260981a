#pragma once
#include <algorithm>

namespace microgrid {

/// Battery energy storage with hard level bounds, rate limits and a symmetric
/// round-trip efficiency applied on both directions. Throughput is metered
/// for depreciation billing and resets daily.
struct Battery {
    double level = 0.0;               // kWh currently stored
    double capacity_min = 0.0;        // kWh hard floor
    double capacity_max = 1.0;        // kWh hard ceiling
    double soc_min = 0.0;             // fraction of capacity_max
    double soc_max = 1.0;
    double p_charge_max = 0.0;        // kW
    double p_discharge_max = 0.0;     // kW
    double efficiency = 1.0;          // eta_b in (0,1]
    double depreciation_rate = 0.0;   // money per kWh cycled
    double throughput_today = 0.0;    // kWh accepted + delivered since day start

    // Capacity bounds and soc bounds are independent constraints; the
    // effective envelope is their intersection.
    double floor_level() const { return std::max(capacity_min, soc_min * capacity_max); }
    double ceil_level() const { return std::min(capacity_max, soc_max * capacity_max); }
};

struct ChargeResult {
    Battery battery;
    double accepted = 0.0; // kWh drawn from the bus
    double overflow = 0.0; // kWh the battery could not take
};

struct DischargeResult {
    Battery battery;
    double delivered = 0.0; // kWh put on the bus
    double shortfall = 0.0; // kWh requested but not deliverable
};

/// Offers energy to the battery. Acceptance is limited by the charge rate and
/// by headroom inflated by efficiency (stored energy = eta * accepted).
inline ChargeResult charge(Battery b, double offered, double dt) {
    double headroom = std::max(0.0, b.ceil_level() - b.level);
    double accepted = std::min({offered, b.p_charge_max * dt, headroom / b.efficiency});
    accepted = std::max(0.0, accepted);
    b.level += b.efficiency * accepted;
    b.throughput_today += accepted;
    return {b, accepted, offered - accepted};
}

/// Requests energy from the battery. Delivery is limited by the discharge
/// rate and by stored energy above the floor, deflated by efficiency
/// (delivered = eta * drawn-down).
inline DischargeResult discharge(Battery b, double requested, double dt) {
    double available = std::max(0.0, b.level - b.floor_level());
    double delivered = std::min({requested, b.p_discharge_max * dt, available * b.efficiency});
    delivered = std::max(0.0, delivered);
    b.level -= delivered / b.efficiency;
    b.throughput_today += delivered;
    return {b, delivered, requested - delivered};
}

inline double battery_soc(const Battery& b) { return b.level / b.capacity_max; }

inline double depreciation_cost(const Battery& b) {
    return b.depreciation_rate * b.throughput_today;
}

/// Energy the battery could still deliver (kWh) within rate and floor limits.
inline double deliverable_energy(const Battery& b, double dt) {
    return std::min(b.p_discharge_max * dt, std::max(0.0, b.level - b.floor_level()) * b.efficiency);
}

/// Energy the battery could still absorb from the bus (kWh).
inline double acceptable_energy(const Battery& b, double dt) {
    return std::min(b.p_charge_max * dt, std::max(0.0, b.ceil_level() - b.level) / b.efficiency);
}

} // namespace microgrid
