#pragma once
#include <algorithm>
#include <array>
#include <cstddef>
#include <vector>

#include "microgrid/errors.hpp"

namespace microgrid {

inline constexpr int kHoursPerDay = 24;

/// One price-responsive residential customer. `base_load` is its hourly
/// profile for a day; `flexibility` (rho) is the fraction of load shed or
/// added at the extreme price levels; `compensation_prob` (alpha) scales the
/// payout owed when high prices shed its load.
struct Household {
    std::array<double, kHoursPerDay> base_load{}; // kWh per hour
    double flexibility = 0.0;                     // rho in [0,1]
    double compensation_prob = 0.0;               // alpha in [0,1]
};

/// Tariff context for one hour.
struct PriceContext {
    double market_price = 0.0; // money/kWh
    double step_width = 0.0;   // w
    int level = 0;             // mu in -2..+2
};

/// Internal tariff: market price shifted by level steps, floored at zero.
inline double internal_price(const PriceContext& ctx) {
    return std::max(0.0, ctx.market_price + ctx.level * ctx.step_width);
}

/// Price response of a scalar base load. Level +2 sheds the full flexible
/// fraction, level -2 adds it; intermediate levels scale linearly. Never
/// negative.
inline double responsive_load(double base_kwh, double flexibility, int level) {
    return std::max(0.0, base_kwh * (1.0 - flexibility * (level / 2.0)));
}

inline double responsive_load(const Household& h, int level, int hour) {
    return responsive_load(h.base_load[static_cast<std::size_t>(hour)], h.flexibility, level);
}

/// Compensation owed for load shed under a high price; zero at level <= 0.
inline double compensation(double base_kwh, double flexibility, double comp_prob, int level,
                           double reference_price, double dt) {
    double shed_fraction = std::max(level / 2.0, 0.0);
    return comp_prob * flexibility * base_kwh * shed_fraction * reference_price * dt;
}

inline double compensation(const Household& h, int level, int hour, double reference_price, double dt) {
    return compensation(h.base_load[static_cast<std::size_t>(hour)], h.flexibility,
                        h.compensation_prob, level, reference_price, dt);
}

/// Fractional excess of the intraday mean internal price over the allowed
/// cap (mean market * (1 + cap_fraction)); zero when compliant. Both series
/// must cover a complete day.
inline double price_cap_violation(const std::vector<double>& intraday_prices,
                                  const std::vector<double>& market_prices,
                                  double cap_fraction = 0.10) {
    if (intraday_prices.size() != kHoursPerDay || market_prices.size() != kHoursPerDay)
        throw DomainError("price_cap_violation requires a complete 24-hour day");
    double mi = 0.0, mm = 0.0;
    for (int h = 0; h < kHoursPerDay; ++h) {
        mi += intraday_prices[static_cast<std::size_t>(h)];
        mm += market_prices[static_cast<std::size_t>(h)];
    }
    mi /= kHoursPerDay;
    mm /= kHoursPerDay;
    return std::max(0.0, (mi - mm) / mm - cap_fraction);
}

} // namespace microgrid
