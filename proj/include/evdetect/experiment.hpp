#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "evdetect/detect.hpp"
#include "evdetect/eval.hpp"
#include "evdetect/model.hpp"
#include "evdetect/pipeline.hpp"
#include "evdetect/rng.hpp"
#include "evdetect/serialize.hpp"
#include "evdetect/synth.hpp"

namespace evdetect {

/// How non-EV consumers are split into train/validation/test. Explicit counts
/// win over fractions when set. EV consumers always go to the test set.
struct SplitSpec {
    real train_frac = real(0.70); // of non-EV consumers (train + validation pool)
    real val_frac = real(0.15);   // of the pool, held out for calibration
    std::size_t n_train = 0, n_val = 0, n_test = 0;
    bool explicit_counts = false;
};

struct ConsumerSplit {
    std::vector<const ConsumerSeries*> train, validation, test;
};

/// Consumer-level split of non-EV users; seeded shuffle, EV users appended to
/// the test set unshuffled.
inline ConsumerSplit split_consumers(const std::vector<ConsumerSeries>& consumers,
                                     const SplitSpec& spec, std::uint64_t seed) {
    std::vector<const ConsumerSeries*> non_ev, ev;
    for (const auto& c : consumers)
        (c.label == Label::ev ? ev : non_ev).push_back(&c);

    auto rng = make_rng(derive_seed(seed, 0x5611));
    std::shuffle(non_ev.begin(), non_ev.end(), rng);

    std::size_t n_train, n_val, n_test;
    if (spec.explicit_counts) {
        n_train = spec.n_train;
        n_val = spec.n_val;
        n_test = spec.n_test;
        if (n_train + n_val + n_test > non_ev.size())
            throw ConfigError("split: requested counts exceed non-EV population");
    } else {
        const std::size_t pool = static_cast<std::size_t>(
            std::llround(double(spec.train_frac) * double(non_ev.size())));
        n_val = static_cast<std::size_t>(std::llround(double(spec.val_frac) * double(pool)));
        n_train = pool - n_val;
        n_test = non_ev.size() - pool;
    }
    if (n_train == 0) throw ConfigError("split: empty training set");
    if (n_val == 0) throw ConfigError("split: empty validation set");

    ConsumerSplit split;
    split.train.assign(non_ev.begin(), non_ev.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.validation.assign(non_ev.begin() + static_cast<std::ptrdiff_t>(n_train),
                            non_ev.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    split.test.assign(non_ev.begin() + static_cast<std::ptrdiff_t>(n_train + n_val),
                      non_ev.begin() + static_cast<std::ptrdiff_t>(n_train + n_val + n_test));
    split.test.insert(split.test.end(), ev.begin(), ev.end());
    return split;
}

struct ExperimentConfig {
    SynthConfig synth{};
    TaeConfig tae{};
    SplitSpec split{};
    PipelineOptions pipeline{};
    ScoreMode score_mode = ScoreMode::squared_error;
};

struct ExperimentResult {
    ModelBundle bundle;
    TrainReport train_report;
    std::vector<std::string> validation_ids;
    std::vector<real> validation_ats;
    std::vector<AnomalyReport> test_reports;
    std::vector<int> test_labels;
    EvalReport eval;
    bool has_eval = false; // false when the test split lacks one of the classes
    real train_wall_seconds = real(0);
};

/// Train on non-EV windows, calibrate the threshold on held-out validation
/// consumers, then classify and score the test split.
inline ExperimentResult run_split_experiment(const std::vector<ConsumerSeries>& consumers,
                                             const ExperimentConfig& cfg) {
    ConsumerSplit split = split_consumers(consumers, cfg.split, cfg.tae.seed);

    const ScalerParams scaler =
        fit_scaler(smoothed_series(split.train, cfg.pipeline.smooth));
    const SequenceBatch train_batch = make_batch(split.train, scaler, cfg.pipeline);
    const SequenceBatch val_batch = make_batch(split.validation, scaler, cfg.pipeline);

    auto [model, report] = train_tae(train_batch.windows, val_batch.windows, cfg.tae);

    ExperimentResult result;
    result.train_wall_seconds = report.wall_time_seconds;
    result.train_report = std::move(report);

    // Per-consumer validation ATs; their mean is the decision threshold.
    for (const ConsumerSeries* c : split.validation) {
        AnomalyReport r = classify_consumer(*c, model, scaler, real(0), cfg.pipeline,
                                            cfg.score_mode);
        result.validation_ids.push_back(c->consumer_id);
        result.validation_ats.push_back(r.total_score);
    }
    const real threshold = calibrate_threshold(result.validation_ats);

    std::vector<real> test_scores;
    for (const ConsumerSeries* c : split.test) {
        AnomalyReport r =
            classify_consumer(*c, model, scaler, threshold, cfg.pipeline, cfg.score_mode);
        test_scores.push_back(r.total_score);
        result.test_labels.push_back(c->label == Label::ev ? 1 : 0);
        result.test_reports.push_back(std::move(r));
    }

    std::vector<int> decisions;
    decisions.reserve(result.test_reports.size());
    for (const auto& r : result.test_reports) decisions.push_back(r.decision);
    const bool has_pos = std::count(result.test_labels.begin(), result.test_labels.end(), 1) > 0;
    const bool has_neg = std::count(result.test_labels.begin(), result.test_labels.end(), 0) > 0;
    if (has_pos && has_neg) {
        result.eval = evaluate(test_scores, decisions, result.test_labels);
        result.has_eval = true;
    }

    result.bundle.model = std::move(model);
    result.bundle.pipeline = cfg.pipeline;
    result.bundle.scaler = scaler;
    result.bundle.threshold = threshold;
    return result;
}

/// Generates a synthetic population and runs the split experiment on it.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    auto [consumers, log] = generate(cfg.synth);
    return run_split_experiment(consumers, cfg);
}

inline void write_train_report_csv(const TrainReport& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "epoch,train_loss,val_loss\n";
    for (std::size_t e = 0; e < r.train_loss.size(); ++e) {
        out << (e + 1) << ',' << format_real(r.train_loss[e]) << ',';
        if (e < r.val_loss.size()) out << format_real(r.val_loss[e]);
        out << '\n';
    }
}

/// Writes the complete output set for one experiment into a directory.
inline void write_experiment_outputs(const ExperimentResult& result, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const auto p = [&](const char* name) { return out_dir + "/" + name; };
    write_train_report_csv(result.train_report, p("train_report.csv"));
    write_scores_csv(result.validation_ids, result.validation_ats, p("validation_scores.csv"));
    write_reports_csv(result.test_reports, p("report.csv"));
    write_window_scores_csv(result.test_reports, p("window_scores.csv"));
    if (result.has_eval) {
        write_roc_csv(result.eval.roc_points, p("roc.csv"));
        write_eval_csv(result.eval, p("eval.csv"));
    }
    save_model(result.bundle, p("model.txt"));
}

} // namespace evdetect
