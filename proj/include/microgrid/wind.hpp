#pragma once
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "microgrid/csv.hpp"
#include "microgrid/demand.hpp"
#include "microgrid/errors.hpp"
#include "microgrid/rng.hpp"

namespace microgrid {

/// Hourly gross wind generation. Conversion to usable power is a separate
/// multiplicative efficiency so traces stay source-of-truth.
struct WindTrace {
    std::vector<double> gross_kwh;          // one entry per hour, >= 0
    double conversion = 1.0;                // beta_wind
    std::int64_t start_epoch = 1514764800;  // 2018-01-01T00:00:00

    int days() const { return static_cast<int>(gross_kwh.size()) / kHoursPerDay; }
    double gross(int day, int hour) const {
        return gross_kwh[static_cast<std::size_t>(day * kHoursPerDay + hour)];
    }
};

/// Usable wind energy from gross generation.
inline double wind_power(double gross_kwh, double beta) { return beta * gross_kwh; }

/// Loads an hourly wind CSV: header row, then "ISO-8601 timestamp,kWh" rows.
/// Rejects gaps, non-hourly cadence, negative values and ragged lengths with
/// errors naming the offending line.
inline WindTrace load_wind_csv(const std::string& path, double conversion = 1.0) {
    auto rows = read_csv(path);
    if (rows.empty()) throw DataError(path + ": empty file");
    std::size_t first = 0;
    if (!rows[0].empty() && rows[0][0] == "timestamp") first = 1; // header
    if (rows.size() <= first) throw DataError(path + ": no data rows");

    WindTrace trace;
    trace.conversion = conversion;
    std::int64_t prev_epoch = 0;
    for (std::size_t i = first; i < rows.size(); ++i) {
        const auto line = std::to_string(i + 1);
        if (rows[i].size() != 2)
            throw DataError(path + ":" + line + ": expected 2 fields (timestamp, kWh)");
        std::int64_t epoch;
        try {
            epoch = parse_iso8601(rows[i][0]);
        } catch (const DataError& e) {
            throw DataError(path + ":" + line + ": " + e.what());
        }
        if (i == first) {
            trace.start_epoch = epoch;
        } else if (epoch - prev_epoch != 3600) {
            throw DataError(path + ":" + line + ": non-hourly cadence (gap of " +
                            std::to_string(epoch - prev_epoch) + " s)");
        }
        prev_epoch = epoch;
        double v = parse_double(rows[i][1], path + ":" + line);
        if (v < 0) throw DataError(path + ":" + line + ": negative generation value");
        trace.gross_kwh.push_back(v);
    }
    if (trace.gross_kwh.size() % kHoursPerDay != 0)
        throw DataError(path + ": trace length " + std::to_string(trace.gross_kwh.size()) +
                        " is not a multiple of 24 hours");
    return trace;
}

inline void write_wind_csv(const WindTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write file: " + path);
    out << "timestamp,kwh\n";
    for (std::size_t i = 0; i < trace.gross_kwh.size(); ++i)
        out << format_iso8601(trace.start_epoch + static_cast<std::int64_t>(i) * 3600) << ","
            << fmt_double(trace.gross_kwh[i]) << "\n";
}

/// Seeded synthetic substitute for a real trace: a diurnal sinusoid plus
/// gaussian noise, both scaled by `variability`, around `mean_kwh`. At
/// variability 0 the trace is exactly constant.
inline WindTrace synth_wind(int days, std::uint64_t seed, double mean_kwh, double variability,
                            double conversion = 1.0) {
    if (days < 1) throw DomainError("synth_wind: days must be >= 1");
    WindTrace trace;
    trace.conversion = conversion;
    trace.gross_kwh.reserve(static_cast<std::size_t>(days) * kHoursPerDay);
    Rng rng(derive_seed(seed, seed_tag::wind));
    std::normal_distribution<double> noise(0.0, 0.5);
    for (int d = 0; d < days; ++d) {
        for (int h = 0; h < kHoursPerDay; ++h) {
            double diurnal = 0.5 * std::sin(2.0 * M_PI * (h - 3) / 24.0);
            double v = mean_kwh * (1.0 + variability * (diurnal + noise(rng)));
            trace.gross_kwh.push_back(std::max(0.0, v));
        }
    }
    return trace;
}

/// Hourly market price series.
struct PriceSeries {
    std::vector<double> price; // money/kWh, one entry per hour

    double at(int day, int hour) const {
        // A series shorter than the simulation repeats cyclically.
        auto idx = static_cast<std::size_t>(day * kHoursPerDay + hour) % price.size();
        return price[idx];
    }
    int days() const { return static_cast<int>(price.size()) / kHoursPerDay; }
};

/// Documented synthetic day-ahead curve: base level plus morning and evening
/// gaussian peaks (09:00 and 19:00). Repeats identically every day.
inline double synthetic_market_price(int hour, double base, double morning, double evening) {
    double m = morning * std::exp(-0.5 * (hour - 9.0) * (hour - 9.0) / 4.0);
    double e = evening * std::exp(-0.5 * (hour - 19.0) * (hour - 19.0) / 6.25);
    return base + m + e;
}

inline PriceSeries synth_prices(int days, double base, double morning, double evening) {
    PriceSeries s;
    s.price.reserve(static_cast<std::size_t>(days) * kHoursPerDay);
    for (int d = 0; d < days; ++d)
        for (int h = 0; h < kHoursPerDay; ++h)
            s.price.push_back(synthetic_market_price(h, base, morning, evening));
    return s;
}

/// Price CSV uses the same (timestamp, value) schema as wind.
inline PriceSeries load_price_csv(const std::string& path) {
    WindTrace as_trace = load_wind_csv(path);
    PriceSeries s;
    s.price = std::move(as_trace.gross_kwh);
    for (std::size_t i = 0; i < s.price.size(); ++i)
        if (s.price[i] <= 0)
            throw DataError(path + ": market price must be positive (row " + std::to_string(i) + ")");
    return s;
}

} // namespace microgrid
