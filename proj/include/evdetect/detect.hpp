#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "evdetect/common.hpp"
#include "evdetect/losses.hpp"
#include "evdetect/model.hpp"
#include "evdetect/pipeline.hpp"

namespace evdetect {

/// Detection result for one consumer. total_score is exactly the squared sum
/// of the per-window scores, and the decision is 1 iff it strictly exceeds
/// the threshold.
struct AnomalyReport {
    std::string consumer_id;
    std::vector<real> window_scores; // AS per window
    real total_score = real(0);      // AT = sum of AS^2
    real threshold = real(0);        // A_th
    int decision = 0;                // eta
};

/// AS: sum of squared reconstruction error over one window.
inline real window_score(std::span<const real> x, std::span<const real> xhat) {
    if (x.size() != xhat.size()) throw ShapeError("window_score: length mismatch");
    real s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const real d = x[i] - xhat[i];
        s += d * d;
    }
    return s;
}

/// AT: squared sum of window scores.
inline real consumer_score(std::span<const real> window_scores) {
    if (window_scores.empty()) throw DataError("consumer_score: no window scores");
    real s = 0;
    for (real as : window_scores) s += as * as;
    return s;
}

/// Threshold: arithmetic mean of validation-set AT values.
inline real calibrate_threshold(std::span<const real> validation_ats) {
    if (validation_ats.empty()) throw DataError("calibrate_threshold: empty validation set");
    real s = 0;
    for (real v : validation_ats) s += v;
    return s / real(validation_ats.size());
}

/// How AS is computed: squared reconstruction error (the default scoring
/// scheme) or the model's own training loss evaluated per window.
enum class ScoreMode { squared_error, training_loss };

/// Per-window scores for a preprocessed consumer batch.
inline std::vector<real> score_windows(const TaeModel& model, const Matrix& windows,
                                       ScoreMode mode = ScoreMode::squared_error) {
    Matrix xhat = tae_forward(model, windows, false, 0);
    std::vector<real> scores(windows.rows);
    for (std::size_t r = 0; r < windows.rows; ++r) {
        if (mode == ScoreMode::squared_error) {
            scores[r] = window_score(std::span<const real>(windows.row(r), windows.cols),
                                     std::span<const real>(xhat.row(r), xhat.cols));
        } else {
            Matrix x1(1, windows.cols), h1(1, windows.cols);
            std::copy(windows.row(r), windows.row(r) + windows.cols, x1.row(0));
            std::copy(xhat.row(r), xhat.row(r) + windows.cols, h1.row(0));
            scores[r] = combined_loss(x1, h1, model.config.loss_weights, model.config.gamma);
        }
    }
    return scores;
}

/// Runs the full decision procedure on one consumer: preprocess into
/// subsequences, reconstruct each, accumulate AT = sum(AS^2), decide
/// eta = 1 iff AT > A_th.
inline AnomalyReport classify_consumer(const ConsumerSeries& series, const TaeModel& model,
                                       const ScalerParams& scaler, real a_th,
                                       const PipelineOptions& opts,
                                       ScoreMode mode = ScoreMode::squared_error) {
    auto raw_windows = preprocess_consumer(series, scaler, opts);
    Matrix windows(raw_windows.size(), opts.window_length);
    for (std::size_t r = 0; r < raw_windows.size(); ++r)
        std::copy(raw_windows[r].begin(), raw_windows[r].end(), windows.row(r));

    AnomalyReport report;
    report.consumer_id = series.consumer_id;
    report.window_scores = score_windows(model, windows, mode);
    report.total_score = consumer_score(report.window_scores);
    report.threshold = a_th;
    report.decision = report.total_score > a_th ? 1 : 0;
    return report;
}

inline void write_reports_csv(const std::vector<AnomalyReport>& reports,
                              const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "consumer_id,n_windows,at_score,threshold,decision\n";
    for (const auto& r : reports)
        out << r.consumer_id << ',' << r.window_scores.size() << ',' << format_real(r.total_score)
            << ',' << format_real(r.threshold) << ',' << r.decision << '\n';
}

inline void write_window_scores_csv(const std::vector<AnomalyReport>& reports,
                                    const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "consumer_id,window_index,as_score\n";
    for (const auto& r : reports)
        for (std::size_t i = 0; i < r.window_scores.size(); ++i)
            out << r.consumer_id << ',' << i << ',' << format_real(r.window_scores[i]) << '\n';
}

/// Per-consumer AT values, e.g. validation scores behind the threshold.
inline void write_scores_csv(const std::vector<std::string>& ids, std::span<const real> ats,
                             const std::string& path) {
    if (ids.size() != ats.size()) throw ShapeError("write_scores_csv: size mismatch");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "consumer_id,at_score\n";
    for (std::size_t i = 0; i < ids.size(); ++i)
        out << ids[i] << ',' << format_real(ats[i]) << '\n';
}

} // namespace evdetect
