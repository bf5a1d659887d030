#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "evdetect/pipeline.hpp"
#include "temp_dir.hpp"

using namespace evdetect;

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

} // namespace

TEST_CASE("smooth: stride-two pair sums") {
    REQUIRE(smooth({1, 2, 3, 4}) == std::vector<real>{3, 7});
    REQUIRE(smooth({5, 2}) == std::vector<real>{7});
    REQUIRE(smooth({1, 2, 3}) == std::vector<real>{3}); // trailing odd element dropped
    REQUIRE_THROWS_AS(smooth({5}), DataError);

    // energy conservation for even lengths
    const std::vector<real> in{0.5, 1.5, 2.5, 0.25, 4.0, 1.0};
    const auto out = smooth(in);
    real si = 0, so = 0;
    for (real v : in) si += v;
    for (real v : out) so += v;
    REQUIRE_THAT(so, Catch::Matchers::WithinAbs(si, 1e-12));
}

TEST_CASE("scaler fit, clip, and round-trip") {
    const ScalerParams p = fit_scaler({{0, 5, 10}});
    REQUIRE(p.data_min == real(0));
    REQUIRE(p.data_max == real(10));
    REQUIRE(apply_scaler({0, 5, 10}, p) == std::vector<real>{0, 0.5, 1});
    REQUIRE(apply_scaler({20}, p) == std::vector<real>{1});   // clipped
    REQUIRE(apply_scaler({-5}, p) == std::vector<real>{0});   // clipped

    const std::vector<real> vals{1.25, 7.5, 9.99};
    const auto restored = invert_scaler(apply_scaler(vals, p), p);
    for (std::size_t i = 0; i < vals.size(); ++i)
        REQUIRE_THAT(restored[i], Catch::Matchers::WithinAbs(vals[i], 1e-12));

    REQUIRE_THROWS_AS(fit_scaler({{3, 3, 3}}), DataError);
    REQUIRE_THROWS_AS(fit_scaler({}), DataError);
}

TEST_CASE("windowize: non-overlapping windows, remainder dropped") {
    std::vector<real> r(504);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = real(i);
    REQUIRE(windowize(r, 168).size() == 3);

    r.resize(500);
    const auto w = windowize(r, 168);
    REQUIRE(w.size() == 2);

    // concatenation reproduces the first M*W readings
    std::size_t idx = 0;
    for (const auto& win : w)
        for (real v : win) REQUIRE(v == r[idx++]);
    REQUIRE(idx == 336);

    REQUIRE_THROWS_AS(windowize(std::vector<real>(100), 168, "c42"), DataError);
    try {
        windowize(std::vector<real>(100), 168, "c42");
    } catch (const DataError& e) {
        REQUIRE(std::string(e.what()).find("c42") != std::string::npos);
    }
}

TEST_CASE("ingest: two consumers, sorted output, order independence") {
    TempDir tmp;
    std::string rows_sorted = "consumer_id,timestamp,kwh\n";
    std::string rows_shuffled = "consumer_id,timestamp,kwh\n";
    std::vector<std::string> lines;
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 96; ++i) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "home_%d,2021-03-%02dT%02d:%02d:00,%.3f\n", c,
                          1 + i / 48, (i / 2) % 24, (i % 2) * 30, 0.1 * i + c);
            lines.push_back(buf);
            rows_sorted += buf;
        }
    // reverse order for the shuffled variant
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) rows_shuffled += *it;

    write_file(tmp.file("a.csv"), rows_sorted);
    write_file(tmp.file("b.csv"), rows_shuffled);
    const auto a = ingest_csv(tmp.file("a.csv"));
    const auto b = ingest_csv(tmp.file("b.csv"));

    REQUIRE(a.size() == 2);
    REQUIRE(a[0].readings.size() == 96);
    REQUIRE(a[1].readings.size() == 96);
    REQUIRE(a[0].consumer_id == "home_0");
    REQUIRE(b.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        REQUIRE(a[i].consumer_id == b[i].consumer_id);
        REQUIRE(a[i].readings == b[i].readings);
    }
}

TEST_CASE("ingest rejects bad input with precise errors") {
    TempDir tmp;

    write_file(tmp.file("dup.csv"),
               "consumer_id,timestamp,kwh\n"
               "c1,2021-03-01T00:00:00,1.0\n"
               "c1,2021-03-01T00:00:00,2.0\n");
    REQUIRE_THROWS_AS(ingest_csv(tmp.file("dup.csv")), DataError);

    write_file(tmp.file("gap.csv"),
               "consumer_id,timestamp,kwh\n"
               "c1,2021-03-01T00:00:00,1.0\n"
               "c1,2021-03-01T01:30:00,2.0\n");
    REQUIRE_THROWS_AS(ingest_csv(tmp.file("gap.csv")), DataError);

    write_file(tmp.file("mal.csv"),
               "consumer_id,timestamp,kwh\n"
               "c1,2021-03-01T00:00:00,1.0\n"
               "c1,not-a-timestamp,2.0\n");
    try {
        ingest_csv(tmp.file("mal.csv"));
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        REQUIRE(std::string(e.what()).find(":3") != std::string::npos); // line number
    }

    write_file(tmp.file("hdr.csv"), "who,when,what\nc1,2021-03-01T00:00:00,1.0\n");
    REQUIRE_THROWS_AS(ingest_csv(tmp.file("hdr.csv")), FormatError);

    write_file(tmp.file("neg.csv"),
               "consumer_id,timestamp,kwh\nc1,2021-03-01T00:00:00,-1.0\n");
    REQUIRE_THROWS_AS(ingest_csv(tmp.file("neg.csv")), FormatError);
}

TEST_CASE("csv write/read round-trip") {
    TempDir tmp;
    ConsumerSeries c;
    c.consumer_id = "rt_1";
    c.start_epoch_seconds = 1614556800;
    c.readings = {0.125, 0.25, 0.5, 1.0};
    write_consumers_csv({c}, tmp.file("rt.csv"));
    const auto back = ingest_csv(tmp.file("rt.csv"));
    REQUIRE(back.size() == 1);
    REQUIRE(back[0].consumer_id == "rt_1");
    REQUIRE(back[0].readings == c.readings);
    REQUIRE(back[0].start_epoch_seconds == c.start_epoch_seconds);
}

TEST_CASE("pipeline chain: order fixed, provenance complete, no leakage") {
    ConsumerSeries train1{"t1", std::vector<real>(672, real(1.0)), Label::non_ev, 0};
    for (std::size_t i = 0; i < train1.readings.size(); ++i)
        train1.readings[i] = real(0.5) + real(i % 7) * real(0.25);
    ConsumerSeries test1{"x1", std::vector<real>(672, real(9.0)), Label::ev, 0};

    PipelineOptions opts{168, true};
    const ScalerParams scaler = fit_scaler(smoothed_series({&train1}, true));

    // scaler depends only on training consumers
    ConsumerSeries test_alt = test1;
    for (auto& v : test_alt.readings) v *= 17;
    const ScalerParams scaler2 = fit_scaler(smoothed_series({&train1}, true));
    REQUIRE(scaler.data_min == scaler2.data_min);
    REQUIRE(scaler.data_max == scaler2.data_max);

    const SequenceBatch batch = make_batch({&train1, &test1}, scaler, opts);
    REQUIRE(batch.windows.rows == batch.origin.size());
    REQUIRE(batch.windows.cols == 168);
    // smoothing halves 672 -> 336, windowize gives 2 per consumer
    REQUIRE(batch.windows.rows == 4);
    REQUIRE(batch.origin[0].consumer_id == "t1");
    REQUIRE(batch.origin[1].window_index == 1);

    // manual chain equals make_batch (smooth -> scale -> windowize)
    const auto manual = windowize(apply_scaler(smooth(train1.readings), scaler), 168);
    for (std::size_t t = 0; t < 168; ++t)
        REQUIRE(batch.windows.at(0, t) == manual[0][t]);
}
