#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "evdetect/common.hpp"
#include "evdetect/pipeline.hpp"
#include "evdetect/rng.hpp"

namespace evdetect {

enum class DemandClass { low, high };

/// Household base-load shape: overnight floor plus morning and evening peaks.
struct BaseProfile {
    real morning_peak_kw = real(1.2);
    real evening_peak_kw = real(2.2);
    real overnight_floor_kw = real(0.25);
    real noise_std_kw = real(0.15);
    real spike_probability_per_day = real(0.10); // short non-EV appliance spikes
};

/// Charging behavior. Demand classes follow common single-phase home charger
/// levels; `high_fraction` sets the population mix.
struct EvProfile {
    real low_demand_kw = real(1.8);
    real high_demand_kw = real(7.2);
    real high_fraction = real(0.5);
    real charge_probability = real(0.35); // per day
    real min_duration_hours = real(2);
    real max_duration_hours = real(8);
    real offpeak_start_fraction = real(0.7); // share of charges starting 22:00-06:00
    real amplitude_jitter = real(0.1);       // uniform +-10% around the class level
};

struct SynthConfig {
    std::size_t n_non_ev = 1106;
    std::size_t n_ev = 139;
    std::size_t days = 92;
    BaseProfile base{};
    EvProfile ev{};
    std::uint64_t seed = 1;
};

inline void validate(const SynthConfig& c) {
    if (c.n_non_ev + c.n_ev == 0) throw ConfigError("synth: zero consumers");
    if (c.days == 0) throw ConfigError("synth: zero days");
    if (c.base.morning_peak_kw < 0 || c.base.evening_peak_kw < 0 ||
        c.base.overnight_floor_kw < 0 || c.base.noise_std_kw < 0)
        throw ConfigError("synth: base powers must be >= 0");
    if (c.ev.low_demand_kw < 0 || c.ev.high_demand_kw < 0)
        throw ConfigError("synth: demand levels must be >= 0");
    if (c.ev.charge_probability < 0 || c.ev.charge_probability > 1 ||
        c.ev.high_fraction < 0 || c.ev.high_fraction > 1 ||
        c.ev.offpeak_start_fraction < 0 || c.ev.offpeak_start_fraction > 1)
        throw ConfigError("synth: probabilities must be in [0,1]");
    if (!(c.ev.min_duration_hours > 0) || c.ev.max_duration_hours > 24 ||
        c.ev.max_duration_hours < c.ev.min_duration_hours)
        throw ConfigError("synth: duration range must lie within (0, 24]");
}

struct InjectionEvent {
    std::size_t day = 0;
    std::size_t start_slot = 0;     // slot within the day, [0, 48)
    std::size_t duration_slots = 0;
    real amplitude_kw = real(0);
};

/// Ground truth of injected charging events, keyed by consumer id.
struct InjectionLog {
    std::map<std::string, std::vector<InjectionEvent>> events;
};

/// Adds amplitude_kw (as 0.5 kWh per 30-minute slot) over the event range.
inline void inject_event(std::vector<real>& readings, std::size_t start,
                         std::size_t duration_slots, real amplitude_kw) {
    if (start + duration_slots > readings.size())
        throw DataError("inject_event: event exceeds series bounds");
    const real kwh_per_slot = amplitude_kw * real(0.5);
    for (std::size_t i = start; i < start + duration_slots; ++i) readings[i] += kwh_per_slot;
}

namespace detail {

inline real daily_shape_kw(const BaseProfile& p, real hour) {
    auto bump = [](real h, real center, real width) {
        real d = h - center;
        if (d > 12) d -= 24;
        if (d < -12) d += 24;
        return std::exp(-(d * d) / (2 * width * width));
    };
    return p.overnight_floor_kw + p.morning_peak_kw * bump(hour, real(7.5), real(1.5)) +
           p.evening_peak_kw * bump(hour, real(19.0), real(2.0));
}

inline std::vector<real> base_series(const SynthConfig& cfg, std::mt19937_64& rng) {
    const std::size_t n = cfg.days * kSlotsPerDay;
    std::vector<real> kwh(n, real(0));
    std::uniform_real_distribution<real> scale_dist(real(0.7), real(1.3));
    std::normal_distribution<real> noise(real(0), cfg.base.noise_std_kw);
    const real household_scale = scale_dist(rng);
    for (std::size_t i = 0; i < n; ++i) {
        const real hour = real(i % kSlotsPerDay) / real(2);
        real kw = household_scale * daily_shape_kw(cfg.base, hour) + noise(rng);
        kwh[i] = std::max(real(0), kw) * real(0.5);
    }
    // Occasional short appliance spikes (oven, dryer, ...).
    std::uniform_real_distribution<real> u(real(0), real(1));
    std::uniform_int_distribution<std::size_t> slot_dist(0, kSlotsPerDay - 1);
    std::uniform_int_distribution<std::size_t> spike_len(1, 4);
    std::uniform_real_distribution<real> spike_kw(real(1.0), real(3.0));
    for (std::size_t day = 0; day < cfg.days; ++day) {
        if (u(rng) < cfg.base.spike_probability_per_day) {
            const std::size_t start = day * kSlotsPerDay + slot_dist(rng);
            const std::size_t len = std::min(spike_len(rng), n - start);
            const real add = spike_kw(rng) * real(0.5);
            for (std::size_t i = start; i < start + len; ++i) kwh[i] += add;
        }
    }
    return kwh;
}

/// One attempt at a charging schedule; may come back empty.
inline std::vector<InjectionEvent> draw_schedule(const SynthConfig& cfg, real level_kw,
                                                 std::mt19937_64& rng) {
    std::vector<InjectionEvent> events;
    std::uniform_real_distribution<real> u(real(0), real(1));
    std::uniform_real_distribution<real> dur_dist(cfg.ev.min_duration_hours,
                                                  cfg.ev.max_duration_hours);
    std::uniform_real_distribution<real> jitter(real(1) - cfg.ev.amplitude_jitter,
                                                real(1) + cfg.ev.amplitude_jitter);
    // 22:00-06:00 covers slots 44..47 and 0..11.
    std::uniform_int_distribution<std::size_t> offpeak(0, 15);
    std::uniform_int_distribution<std::size_t> daytime(12, 43);
    const std::size_t horizon = cfg.days * kSlotsPerDay;
    std::size_t next_free = 0; // keeps events disjoint when one crosses midnight
    for (std::size_t day = 0; day < cfg.days; ++day) {
        if (!(u(rng) < cfg.ev.charge_probability)) continue;
        std::size_t slot;
        if (u(rng) < cfg.ev.offpeak_start_fraction) {
            const std::size_t s = offpeak(rng);
            slot = (s < 4) ? 44 + s : s - 4; // wrap 22:00..24:00 then 00:00..06:00
        } else {
            slot = daytime(rng);
        }
        std::size_t duration = static_cast<std::size_t>(std::lround(dur_dist(rng) * 2));
        duration = std::max<std::size_t>(1, duration);
        const std::size_t start = day * kSlotsPerDay + slot;
        if (start >= horizon || start < next_free) continue;
        duration = std::min(duration, horizon - start);
        next_free = start + duration;
        events.push_back({day, slot, duration, level_kw * jitter(rng)});
    }
    return events;
}

} // namespace detail

inline std::string non_ev_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "non_ev_%04zu", i);
    return buf;
}

inline std::string ev_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "ev_%04zu", i);
    return buf;
}

constexpr std::int64_t kSynthStartEpoch = 1614556800; // 2021-03-01T00:00:00Z

/// Generates the full population. Non-EV consumers are base load only; EV
/// consumers get rectangular charging pulses on top of a base series drawn
/// from the same distribution. Deterministic per seed; each consumer has its
/// own derived RNG stream, so generation order cannot matter.
inline std::pair<std::vector<ConsumerSeries>, InjectionLog> generate(const SynthConfig& cfg) {
    validate(cfg);
    std::vector<ConsumerSeries> consumers;
    consumers.reserve(cfg.n_non_ev + cfg.n_ev);
    InjectionLog log;

    for (std::size_t i = 0; i < cfg.n_non_ev; ++i) {
        auto rng = make_rng(derive_seed(cfg.seed, 0x10000 + i));
        ConsumerSeries s;
        s.consumer_id = non_ev_id(i);
        s.label = Label::non_ev;
        s.start_epoch_seconds = kSynthStartEpoch;
        s.readings = detail::base_series(cfg, rng);
        consumers.push_back(std::move(s));
    }

    for (std::size_t i = 0; i < cfg.n_ev; ++i) {
        auto rng = make_rng(derive_seed(cfg.seed, 0x20000 + i));
        ConsumerSeries s;
        s.consumer_id = ev_id(i);
        s.label = Label::ev;
        s.start_epoch_seconds = kSynthStartEpoch;
        s.readings = detail::base_series(cfg, rng);

        std::uniform_real_distribution<real> u(real(0), real(1));
        const DemandClass cls =
            (u(rng) < cfg.ev.high_fraction) ? DemandClass::high : DemandClass::low;
        const real level = cls == DemandClass::high ? cfg.ev.high_demand_kw : cfg.ev.low_demand_kw;

        std::vector<InjectionEvent> events;
        if (cfg.ev.charge_probability > 0) {
            // Every EV-labeled consumer must show at least one event.
            for (std::size_t attempt = 0;; ++attempt) {
                auto srng = make_rng(derive_seed(cfg.seed, 0x30000 + i * 1009 + attempt));
                events = detail::draw_schedule(cfg, level, srng);
                if (!events.empty()) break;
                if (attempt > 100000)
                    throw ConfigError("synth: charge probability too small to place any event");
            }
        }
        for (const auto& e : events)
            inject_event(s.readings, e.day * kSlotsPerDay + e.start_slot, e.duration_slots,
                         e.amplitude_kw);
        if (!events.empty()) log.events[s.consumer_id] = std::move(events);
        consumers.push_back(std::move(s));
    }
    return {std::move(consumers), std::move(log)};
}

inline void write_injection_log_csv(const InjectionLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "consumer_id,day,start_slot,duration_slots,amplitude_kw\n";
    for (const auto& [id, events] : log.events)
        for (const auto& e : events)
            out << id << ',' << e.day << ',' << e.start_slot << ',' << e.duration_slots << ','
                << format_real(e.amplitude_kw) << '\n';
}

inline void write_labels_csv(const std::vector<ConsumerSeries>& consumers,
                             const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "consumer_id,label\n";
    for (const auto& c : consumers) {
        if (c.label == Label::unknown) continue;
        out << c.consumer_id << ',' << (c.label == Label::ev ? 1 : 0) << '\n';
    }
}

inline std::map<std::string, int> read_labels_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "consumer_id,label")
        throw FormatError(path + ": expected header consumer_id,label");
    std::map<std::string, int> labels;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto c = line.find(',');
        if (c == std::string::npos)
            throw FormatError(path + ":" + std::to_string(lineno) + ": expected 2 fields");
        const std::string id = line.substr(0, c);
        const std::string v = line.substr(c + 1);
        if (v != "0" && v != "1")
            throw FormatError(path + ":" + std::to_string(lineno) + ": label must be 0 or 1");
        labels[id] = v == "1" ? 1 : 0;
    }
    return labels;
}

/// Named population presets used by the CLI and tests.
inline SynthConfig synth_preset(const std::string& name) {
    SynthConfig cfg;
    if (name == "paper") {
        cfg.n_non_ev = 1106;
        cfg.n_ev = 139;
        cfg.days = 92;
    } else if (name == "small") {
        cfg.n_non_ev = 260;
        cfg.n_ev = 40;
        cfg.days = 28;
    } else if (name == "tiny") {
        cfg.n_non_ev = 80;
        cfg.n_ev = 10;
        cfg.days = 14;
    } else {
        throw ConfigError("unknown preset '" + name + "' (paper, small, tiny)");
    }
    return cfg;
}

} // namespace evdetect
