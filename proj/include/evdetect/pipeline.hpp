#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "evdetect/common.hpp"
#include "evdetect/tensor.hpp"

namespace evdetect {

enum class Label { non_ev = 0, ev = 1, unknown = 2 };

/// One consumer's meter readings at a fixed 30-minute cadence, in kWh.
struct ConsumerSeries {
    std::string consumer_id;
    std::vector<real> readings;
    Label label = Label::unknown;
    std::int64_t start_epoch_seconds = 0;
};

struct WindowOrigin {
    std::string consumer_id;
    std::size_t window_index = 0;
};

/// A batch of fixed-length preprocessed subsequences with provenance.
struct SequenceBatch {
    Matrix windows;
    std::vector<WindowOrigin> origin;
};

/// Min-max scaling parameters fitted on training data only.
struct ScalerParams {
    real data_min = real(0);
    real data_max = real(1);
};

namespace detail {

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
inline std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

/// Parses "YYYY-MM-DDTHH:MM:SS" (optional trailing 'Z') to epoch seconds.
inline std::int64_t parse_iso8601(const std::string& s) {
    int y, mo, d, h, mi, se;
    char t;
    std::string body = s;
    if (!body.empty() && (body.back() == 'Z' || body.back() == 'z')) body.pop_back();
    if (std::sscanf(body.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &t, &h, &mi, &se) != 7 ||
        (t != 'T' && t != ' ') || mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || se > 60)
        throw FormatError("bad ISO-8601 timestamp: " + s);
    return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + se;
}

inline std::string format_iso8601(std::int64_t epoch_seconds) {
    // Inverse of days_from_civil, for CSV emission.
    std::int64_t days = epoch_seconds / 86400;
    int sod = static_cast<int>(epoch_seconds - days * 86400);
    if (sod < 0) { sod += 86400; days -= 1; }
    std::int64_t z = days + 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02d:%02d:%02d",
                  static_cast<long long>(y + (m <= 2)), m, d, sod / 3600,
                  (sod % 3600) / 60, sod % 60);
    return buf;
}

} // namespace detail

constexpr std::int64_t kReadingIntervalSeconds = 1800; // 30 minutes
constexpr std::size_t kSlotsPerDay = 48;

/// Reads the `consumer_id,timestamp,kwh` contract. Readings are sorted by
/// timestamp per consumer; duplicate timestamps or cadence gaps are rejected.
/// Consumers come back ordered by id so row order never matters.
inline std::vector<ConsumerSeries> ingest_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "consumer_id,timestamp,kwh")
        throw FormatError(path + ": expected header consumer_id,timestamp,kwh");

    struct Row { std::int64_t ts; real kwh; };
    std::map<std::string, std::vector<Row>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw FormatError(path + ":" + std::to_string(lineno) + ": expected 3 fields");
        const std::string id = line.substr(0, c1);
        const std::string ts = line.substr(c1 + 1, c2 - c1 - 1);
        const std::string val = line.substr(c2 + 1);
        if (id.empty()) throw FormatError(path + ":" + std::to_string(lineno) + ": empty consumer_id");
        std::int64_t epoch;
        try {
            epoch = detail::parse_iso8601(ts);
        } catch (const FormatError&) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": bad timestamp '" + ts + "'");
        }
        char* end = nullptr;
        const double kwh = std::strtod(val.c_str(), &end);
        if (end == val.c_str() || *end != '\0' || !std::isfinite(kwh) || kwh < 0)
            throw FormatError(path + ":" + std::to_string(lineno) + ": bad kwh '" + val + "'");
        rows[id].push_back({epoch, static_cast<real>(kwh)});
    }

    std::vector<ConsumerSeries> result;
    result.reserve(rows.size());
    for (auto& [id, rs] : rows) {
        std::sort(rs.begin(), rs.end(), [](const Row& a, const Row& b) { return a.ts < b.ts; });
        for (std::size_t i = 1; i < rs.size(); ++i) {
            if (rs[i].ts == rs[i - 1].ts)
                throw DataError("consumer " + id + ": duplicate timestamp " +
                                detail::format_iso8601(rs[i].ts));
            if (rs[i].ts - rs[i - 1].ts != kReadingIntervalSeconds)
                throw DataError("consumer " + id + ": non-uniform cadence at " +
                                detail::format_iso8601(rs[i].ts));
        }
        ConsumerSeries s;
        s.consumer_id = id;
        s.start_epoch_seconds = rs.empty() ? 0 : rs.front().ts;
        s.readings.reserve(rs.size());
        for (const Row& r : rs) s.readings.push_back(r.kwh);
        if (s.readings.empty()) throw DataError("consumer " + id + ": no readings");
        result.push_back(std::move(s));
    }
    return result;
}

inline void write_consumers_csv(const std::vector<ConsumerSeries>& consumers,
                                const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "consumer_id,timestamp,kwh\n";
    for (const auto& c : consumers) {
        for (std::size_t i = 0; i < c.readings.size(); ++i) {
            out << c.consumer_id << ','
                << detail::format_iso8601(c.start_epoch_seconds +
                                          static_cast<std::int64_t>(i) * kReadingIntervalSeconds)
                << ',' << format_real(c.readings[i]) << '\n';
        }
    }
}

/// Rolling sum with stride two: out(j) = in(2j) + in(2j+1). Halves the length;
/// a trailing odd element is dropped.
inline std::vector<real> smooth(const std::vector<real>& readings) {
    if (readings.size() < 2) throw DataError("smooth: need at least 2 readings");
    std::vector<real> out(readings.size() / 2);
    for (std::size_t j = 0; j < out.size(); ++j)
        out[j] = readings[2 * j] + readings[2 * j + 1];
    return out;
}

inline ScalerParams fit_scaler(const std::vector<std::vector<real>>& training_series) {
    bool any = false;
    real lo = 0, hi = 0;
    for (const auto& s : training_series) {
        for (real v : s) {
            if (!any) { lo = hi = v; any = true; }
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!any) throw DataError("fit_scaler: no training data");
    if (!(hi > lo)) throw DataError("fit_scaler: constant training data (max == min)");
    return {lo, hi};
}

/// Min-max map to [0,1]; out-of-range values clip at apply time.
inline std::vector<real> apply_scaler(const std::vector<real>& readings, const ScalerParams& p) {
    std::vector<real> out(readings.size());
    const real span = p.data_max - p.data_min;
    for (std::size_t i = 0; i < readings.size(); ++i)
        out[i] = std::clamp((readings[i] - p.data_min) / span, real(0), real(1));
    return out;
}

inline std::vector<real> invert_scaler(const std::vector<real>& scaled, const ScalerParams& p) {
    std::vector<real> out(scaled.size());
    for (std::size_t i = 0; i < scaled.size(); ++i)
        out[i] = scaled[i] * (p.data_max - p.data_min) + p.data_min;
    return out;
}

/// Consecutive non-overlapping windows of length W; the remainder is dropped.
inline std::vector<std::vector<real>> windowize(const std::vector<real>& readings, std::size_t w,
                                                const std::string& consumer_id = "") {
    if (w == 0) throw ConfigError("windowize: W must be positive");
    if (readings.size() < w)
        throw DataError("consumer " + (consumer_id.empty() ? "<unnamed>" : consumer_id) +
                        ": series length " + std::to_string(readings.size()) +
                        " shorter than window " + std::to_string(w));
    const std::size_t m = readings.size() / w;
    std::vector<std::vector<real>> out(m);
    for (std::size_t i = 0; i < m; ++i)
        out[i].assign(readings.begin() + static_cast<std::ptrdiff_t>(i * w),
                      readings.begin() + static_cast<std::ptrdiff_t>((i + 1) * w));
    return out;
}

struct PipelineOptions {
    std::size_t window_length = 168;
    bool smooth = true;
};

/// Full preprocessing chain for one consumer: smooth -> scale -> windowize.
inline std::vector<std::vector<real>> preprocess_consumer(const ConsumerSeries& c,
                                                          const ScalerParams& scaler,
                                                          const PipelineOptions& opts) {
    std::vector<real> r = opts.smooth ? smooth(c.readings) : c.readings;
    r = apply_scaler(r, scaler);
    return windowize(r, opts.window_length, c.consumer_id);
}

/// Applies the chain to a set of consumers and stacks the windows with
/// provenance.
inline SequenceBatch make_batch(const std::vector<const ConsumerSeries*>& consumers,
                                const ScalerParams& scaler, const PipelineOptions& opts) {
    std::vector<std::vector<real>> all;
    std::vector<WindowOrigin> origin;
    for (const ConsumerSeries* c : consumers) {
        auto windows = preprocess_consumer(*c, scaler, opts);
        for (std::size_t i = 0; i < windows.size(); ++i) {
            origin.push_back({c->consumer_id, i});
            all.push_back(std::move(windows[i]));
        }
    }
    SequenceBatch batch;
    batch.windows = Matrix(all.size(), opts.window_length);
    for (std::size_t r = 0; r < all.size(); ++r)
        std::copy(all[r].begin(), all[r].end(), batch.windows.row(r));
    batch.origin = std::move(origin);
    return batch;
}

/// Smoothed series of the given consumers, for scaler fitting.
inline std::vector<std::vector<real>> smoothed_series(
    const std::vector<const ConsumerSeries*>& consumers, bool do_smooth) {
    std::vector<std::vector<real>> out;
    out.reserve(consumers.size());
    for (const ConsumerSeries* c : consumers)
        out.push_back(do_smooth ? smooth(c->readings) : c->readings);
    return out;
}

} // namespace evdetect
