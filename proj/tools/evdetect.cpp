// Command-line driver: data generation, preprocessing, training, detection,
// evaluation, loss ablation, and the gradient-check suite.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "evdetect/evdetect.hpp"
#include "evdetect/gradcheck_suite.hpp"

namespace fs = std::filesystem;
using namespace evdetect;

namespace {

// Exit codes: 0 ok, 1 usage, then one class per error family.
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitFormat = 5;
constexpr int kExitIo = 6;

struct GlobalOpts {
    std::uint64_t seed = 1;
    std::string out_dir = "out";
};

void write_snapshot(CLI::App& app, const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::ofstream out(out_dir + "/config_resolved.cfg");
    if (!out) throw IoError("cannot write " + out_dir + "/config_resolved.cfg");
    out << app.config_to_str(true, false);
}

void apply_labels(std::vector<ConsumerSeries>& consumers, const std::string& labels_path) {
    if (labels_path.empty()) return;
    const auto labels = read_labels_csv(labels_path);
    for (auto& c : consumers) {
        auto it = labels.find(c.consumer_id);
        if (it != labels.end()) c.label = it->second == 1 ? Label::ev : Label::non_ev;
    }
}

struct SynthFlags {
    std::string preset = "small";
    std::size_t n_non_ev = 0, n_ev = 0, days = 0; // 0 = keep preset value
    double charge_prob = -1, high_fraction = -1;
    double low_kw = -1, high_kw = -1;
    double min_duration_hours = -1, max_duration_hours = -1;
    double noise_std = -1;

    SynthConfig resolve(std::uint64_t seed) const {
        SynthConfig cfg = synth_preset(preset);
        cfg.seed = seed;
        if (n_non_ev > 0) cfg.n_non_ev = n_non_ev;
        if (n_ev != std::size_t(0) || n_ev_explicit) cfg.n_ev = n_ev;
        if (days > 0) cfg.days = days;
        if (charge_prob >= 0) cfg.ev.charge_probability = real(charge_prob);
        if (high_fraction >= 0) cfg.ev.high_fraction = real(high_fraction);
        if (low_kw >= 0) cfg.ev.low_demand_kw = real(low_kw);
        if (high_kw >= 0) cfg.ev.high_demand_kw = real(high_kw);
        if (min_duration_hours > 0) cfg.ev.min_duration_hours = real(min_duration_hours);
        if (max_duration_hours > 0) cfg.ev.max_duration_hours = real(max_duration_hours);
        if (noise_std >= 0) cfg.base.noise_std_kw = real(noise_std);
        return cfg;
    }
    bool n_ev_explicit = false;
};

void add_synth_flags(CLI::App* cmd, SynthFlags& f) {
    cmd->add_option("--preset", f.preset, "Population preset: paper, small, tiny")
        ->check(CLI::IsMember({"paper", "small", "tiny"}));
    cmd->add_option("--n-non-ev", f.n_non_ev, "Number of non-EV consumers");
    auto* nev = cmd->add_option("--n-ev", f.n_ev, "Number of EV consumers");
    nev->each([&f](const std::string&) { f.n_ev_explicit = true; });
    cmd->add_option("--days", f.days, "Simulated days");
    cmd->add_option("--charge-prob", f.charge_prob, "Per-day charging probability");
    cmd->add_option("--high-fraction", f.high_fraction,
                    "Fraction of EV consumers with high-demand chargers");
    cmd->add_option("--low-kw", f.low_kw, "Low-demand charger power (kW)");
    cmd->add_option("--high-kw", f.high_kw, "High-demand charger power (kW)");
    cmd->add_option("--min-duration-hours", f.min_duration_hours, "Shortest charge duration");
    cmd->add_option("--max-duration-hours", f.max_duration_hours, "Longest charge duration");
    cmd->add_option("--noise-std", f.noise_std, "Base-load noise std (kW)");
}

struct ModelFlags {
    std::size_t window_length = 168;
    std::size_t kernel_size = 7;
    std::vector<std::size_t> filters = {32, 16, 8};
    std::vector<std::size_t> dilations = {1, 2, 4};
    double dropout = 0.1;
    double lr = 1e-3;
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    std::string loss = "l2";
    double lambda1 = 1, lambda2 = 0, lambda3 = 0;
    double gamma = 1.0;
    bool no_smooth = false;

    TaeConfig resolve(std::uint64_t seed) const {
        TaeConfig cfg;
        cfg.window_length = window_length;
        cfg.kernel_size = kernel_size;
        if (filters.size() != 3) throw ConfigError("--filters needs exactly 3 values");
        if (dilations.size() != 3) throw ConfigError("--dilations needs exactly 3 values");
        std::copy(filters.begin(), filters.end(), cfg.filters.begin());
        std::copy(dilations.begin(), dilations.end(), cfg.dilations.begin());
        cfg.dropout_rate = real(dropout);
        cfg.learning_rate = real(lr);
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.gamma = real(gamma);
        cfg.seed = seed;
        cfg.loss_weights = resolve_weights();
        return cfg;
    }

    LossWeights resolve_weights() const {
        if (loss == "l2") return {1, 0, 0};
        if (loss == "dtw") return {0, 1, 0};
        if (loss == "cos") return {0, 0, 1};
        if (loss == "combined") return {real(lambda1), real(lambda2), real(lambda3)};
        throw ConfigError("--loss must be one of l2, dtw, cos, combined");
    }

    PipelineOptions pipeline() const { return {window_length, !no_smooth}; }
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
    cmd->add_option("--window-length", f.window_length, "Subsequence length W");
    cmd->add_option("--kernel-size", f.kernel_size, "Temporal kernel size k");
    cmd->add_option("--filters", f.filters, "Encoder filter counts (3 values)")->delimiter(',');
    cmd->add_option("--dilations", f.dilations, "Residual-block dilations (3 values)")
        ->delimiter(',');
    cmd->add_option("--dropout", f.dropout, "Dropout rate");
    cmd->add_option("--lr", f.lr, "Adam learning rate");
    cmd->add_option("--epochs", f.epochs, "Training epochs");
    cmd->add_option("--batch-size", f.batch_size, "Mini-batch size");
    cmd->add_option("--loss", f.loss, "Training loss: l2, dtw, cos, combined")
        ->check(CLI::IsMember({"l2", "dtw", "cos", "combined"}));
    cmd->add_option("--lambda1", f.lambda1, "Weight of the reconstruction term");
    cmd->add_option("--lambda2", f.lambda2, "Weight of the DTW term");
    cmd->add_option("--lambda3", f.lambda3, "Weight of the cosine term");
    cmd->add_option("--gamma", f.gamma, "Soft-DTW smoothing parameter");
    cmd->add_flag("--no-smooth", f.no_smooth, "Skip the rolling-sum smoothing step");
}

struct SplitFlags {
    double train_frac = 0.70;
    double val_frac = 0.15;
    std::vector<std::size_t> counts; // train,val,test

    SplitSpec resolve() const {
        SplitSpec s;
        s.train_frac = real(train_frac);
        s.val_frac = real(val_frac);
        if (!counts.empty()) {
            if (counts.size() != 3) throw ConfigError("--split-counts needs train,val,test");
            s.n_train = counts[0];
            s.n_val = counts[1];
            s.n_test = counts[2];
            s.explicit_counts = true;
        }
        return s;
    }
};

void add_split_flags(CLI::App* cmd, SplitFlags& f) {
    cmd->add_option("--train-frac", f.train_frac, "Non-EV fraction used for train+validation");
    cmd->add_option("--val-frac", f.val_frac, "Fraction of the pool held out for calibration");
    cmd->add_option("--split-counts", f.counts,
                    "Explicit non-EV train,val,test counts (overrides fractions)")
        ->delimiter(',');
}

// ---- subcommand implementations ----

int cmd_gen(CLI::App& app, const GlobalOpts& g, const SynthFlags& flags) {
    const SynthConfig cfg = flags.resolve(g.seed);
    auto [consumers, log] = generate(cfg);
    fs::create_directories(g.out_dir);
    write_consumers_csv(consumers, g.out_dir + "/data.csv");
    write_injection_log_csv(log, g.out_dir + "/injections.csv");
    write_labels_csv(consumers, g.out_dir + "/labels.csv");
    write_snapshot(app, g.out_dir);
    std::size_t n_events = 0;
    for (const auto& [id, ev] : log.events) n_events += ev.size();
    std::printf("generated %zu consumers (%zu non-EV, %zu EV), %zu days, %zu charging events\n",
                consumers.size(), cfg.n_non_ev, cfg.n_ev, cfg.days, n_events);
    std::printf("wrote %s/data.csv, injections.csv, labels.csv\n", g.out_dir.c_str());
    return 0;
}

int cmd_preprocess(CLI::App& app, const GlobalOpts& g, const std::string& data_path,
                   const ModelFlags& model_flags) {
    auto consumers = ingest_csv(data_path);
    const PipelineOptions opts = model_flags.pipeline();
    std::vector<const ConsumerSeries*> ptrs;
    for (const auto& c : consumers) ptrs.push_back(&c);
    const ScalerParams scaler = fit_scaler(smoothed_series(ptrs, opts.smooth));
    const SequenceBatch batch = make_batch(ptrs, scaler, opts);

    fs::create_directories(g.out_dir);
    {
        std::ofstream out(g.out_dir + "/windows.csv");
        if (!out) throw IoError("cannot write windows.csv");
        out << "consumer_id,window_index";
        for (std::size_t t = 0; t < opts.window_length; ++t) out << ",v" << t;
        out << '\n';
        for (std::size_t r = 0; r < batch.windows.rows; ++r) {
            out << batch.origin[r].consumer_id << ',' << batch.origin[r].window_index;
            for (std::size_t t = 0; t < batch.windows.cols; ++t)
                out << ',' << format_real(batch.windows.at(r, t));
            out << '\n';
        }
    }
    {
        std::ofstream out(g.out_dir + "/scaler.txt");
        out << "data_min = " << format_real(scaler.data_min) << '\n'
            << "data_max = " << format_real(scaler.data_max) << '\n';
    }
    write_snapshot(app, g.out_dir);
    std::printf("%zu consumers -> %zu windows of length %zu\n", consumers.size(),
                batch.windows.rows, opts.window_length);
    return 0;
}

int cmd_train(CLI::App& app, const GlobalOpts& g, const std::string& data_path,
              const std::string& labels_path, const ModelFlags& model_flags,
              const SplitFlags& split_flags, bool use_all_non_ev) {
    auto consumers = ingest_csv(data_path);
    apply_labels(consumers, labels_path);
    if (labels_path.empty())
        for (auto& c : consumers) c.label = Label::non_ev;

    const TaeConfig tae = model_flags.resolve(g.seed);
    const PipelineOptions pipeline = model_flags.pipeline();

    SplitSpec split = split_flags.resolve();
    if (use_all_non_ev && !split.explicit_counts) {
        // Use every non-EV consumer for train+validation (no held-out test).
        split.train_frac = real(1);
    }

    std::vector<ConsumerSeries> non_ev;
    for (auto& c : consumers)
        if (c.label == Label::non_ev) non_ev.push_back(std::move(c));
    if (non_ev.empty()) throw DataError("train: no non-EV consumers in input");

    ExperimentConfig cfg;
    cfg.tae = tae;
    cfg.split = split;
    cfg.pipeline = pipeline;
    ExperimentResult result = run_split_experiment(non_ev, cfg);

    fs::create_directories(g.out_dir);
    save_model(result.bundle, g.out_dir + "/model.txt");
    write_train_report_csv(result.train_report, g.out_dir + "/train_report.csv");
    write_scores_csv(result.validation_ids, result.validation_ats,
                     g.out_dir + "/validation_scores.csv");
    write_snapshot(app, g.out_dir);

    std::printf("trained %zu epochs on %zu non-EV consumers; wall time %.2f s\n", tae.epochs,
                non_ev.size(), double(result.train_report.wall_time_seconds));
    if (!result.train_report.train_loss.empty())
        std::printf("loss: first epoch %s, last epoch %s\n",
                    format_real(result.train_report.train_loss.front()).c_str(),
                    format_real(result.train_report.train_loss.back()).c_str());
    std::printf("threshold (validation mean AT): %s\n",
                format_real(*result.bundle.threshold).c_str());
    std::printf("wrote %s/model.txt, train_report.csv, validation_scores.csv\n",
                g.out_dir.c_str());
    return 0;
}

int cmd_detect(CLI::App& app, const GlobalOpts& g, const std::string& model_path,
               const std::string& data_path, double threshold_override,
               const std::string& calibrate_path, bool score_loss) {
    const ModelBundle bundle = load_model(model_path);
    if (!bundle.scaler)
        throw ConfigError("model file has no scaler section; re-train or preprocess manually");

    real a_th;
    if (threshold_override >= 0) {
        a_th = real(threshold_override);
    } else if (!calibrate_path.empty()) {
        auto val_consumers = ingest_csv(calibrate_path);
        std::vector<real> ats;
        for (const auto& c : val_consumers)
            ats.push_back(classify_consumer(c, bundle.model, *bundle.scaler, real(0),
                                            bundle.pipeline)
                              .total_score);
        a_th = calibrate_threshold(ats);
    } else if (bundle.threshold) {
        a_th = *bundle.threshold;
    } else {
        throw ConfigError(
            "no threshold available: model has no calibration record and neither "
            "--threshold nor --calibrate-from was given");
    }

    const ScoreMode mode = score_loss ? ScoreMode::training_loss : ScoreMode::squared_error;
    auto consumers = ingest_csv(data_path);
    std::vector<AnomalyReport> reports;
    for (const auto& c : consumers)
        reports.push_back(classify_consumer(c, bundle.model, *bundle.scaler, a_th,
                                            bundle.pipeline, mode));

    fs::create_directories(g.out_dir);
    write_reports_csv(reports, g.out_dir + "/report.csv");
    write_window_scores_csv(reports, g.out_dir + "/window_scores.csv");
    write_snapshot(app, g.out_dir);

    std::size_t flagged = 0;
    for (const auto& r : reports) flagged += static_cast<std::size_t>(r.decision);
    std::printf("classified %zu consumers, %zu flagged as EV (threshold %s)\n", reports.size(),
                flagged, format_real(a_th).c_str());
    std::printf("wrote %s/report.csv, window_scores.csv\n", g.out_dir.c_str());
    return 0;
}

struct ReportRow {
    std::string consumer_id;
    real at_score;
    int decision;
};

std::vector<ReportRow> read_report_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "consumer_id,n_windows,at_score,threshold,decision")
        throw FormatError(path + ": unexpected report header");
    std::vector<ReportRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::size_t pos = 0;
        while (true) {
            auto c = line.find(',', pos);
            f.push_back(line.substr(pos, c == std::string::npos ? c : c - pos));
            if (c == std::string::npos) break;
            pos = c + 1;
        }
        if (f.size() != 5) throw FormatError(path + ":" + std::to_string(lineno) + ": bad row");
        rows.push_back({f[0], static_cast<real>(std::stod(f[2])), std::stoi(f[4])});
    }
    return rows;
}

int cmd_eval(CLI::App& app, const GlobalOpts& g, const std::string& report_path,
             const std::string& labels_path) {
    const auto rows = read_report_csv(report_path);
    const auto labels = read_labels_csv(labels_path);

    std::vector<real> scores;
    std::vector<int> decisions, truth;
    for (const auto& r : rows) {
        auto it = labels.find(r.consumer_id);
        if (it == labels.end())
            throw DataError("eval: no label for consumer " + r.consumer_id);
        scores.push_back(r.at_score);
        decisions.push_back(r.decision);
        truth.push_back(it->second);
    }
    const EvalReport report = evaluate(scores, decisions, truth);

    fs::create_directories(g.out_dir);
    write_eval_csv(report, g.out_dir + "/eval.csv");
    write_roc_csv(report.roc_points, g.out_dir + "/roc.csv");
    {
        std::ofstream out(g.out_dir + "/eval.txt");
        out << format_eval_table(report);
    }
    write_snapshot(app, g.out_dir);
    std::fputs(format_eval_table(report).c_str(), stdout);
    return 0;
}

std::vector<std::array<double, 3>> parse_grid(const std::string& spec) {
    std::vector<std::array<double, 3>> grid;
    std::istringstream entries(spec);
    std::string entry;
    while (std::getline(entries, entry, ';')) {
        if (entry.empty()) continue;
        std::array<double, 3> w{};
        std::istringstream parts(entry);
        std::string tok;
        for (std::size_t i = 0; i < 3; ++i) {
            if (!std::getline(parts, tok, ','))
                throw ConfigError("--grid entries need three comma-separated weights");
            w[i] = std::stod(tok);
        }
        grid.push_back(w);
    }
    if (grid.empty()) throw ConfigError("--grid is empty");
    return grid;
}

std::string weights_label(const LossWeights& w) {
    std::vector<std::string> parts;
    if (w.lambda1 > 0) parts.push_back("l2");
    if (w.lambda2 > 0) parts.push_back("dtw");
    if (w.lambda3 > 0) parts.push_back("cos");
    std::string s;
    for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? "+" : "") + parts[i];
    return s.empty() ? "none" : s;
}

int cmd_ablate(CLI::App& app, const GlobalOpts& g, const SynthFlags& synth_flags,
               const ModelFlags& model_flags, const SplitFlags& split_flags,
               const std::string& grid_spec, bool paper_grid, bool score_loss) {
    std::vector<std::array<double, 3>> grid;
    if (paper_grid) {
        grid = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 0}, {0, 1, 1}, {1, 1, 1}};
    } else {
        grid = parse_grid(grid_spec);
    }

    ExperimentConfig base;
    base.synth = synth_flags.resolve(g.seed);
    base.tae = model_flags.resolve(g.seed);
    base.split = split_flags.resolve();
    base.pipeline = model_flags.pipeline();
    base.score_mode = score_loss ? ScoreMode::training_loss : ScoreMode::squared_error;

    fs::create_directories(g.out_dir);
    std::ofstream out(g.out_dir + "/ablation.csv");
    if (!out) throw IoError("cannot write ablation.csv");
    out << "loss,lambda1,lambda2,lambda3,gamma,precision_pct,recall_pct,f1_pct,auc_pct,"
           "train_seconds\n";

    auto pct = [](const std::optional<real>& v) {
        if (!v) return std::string("undefined");
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", double(*v) * 100);
        return std::string(buf);
    };

    for (const auto& w : grid) {
        ExperimentConfig cfg = base;
        cfg.tae.loss_weights = {real(w[0]), real(w[1]), real(w[2])};
        validate(cfg.tae.loss_weights);
        const ExperimentResult r = run_experiment(cfg);
        if (!r.has_eval) throw DataError("ablate: test split needs both classes (n_ev > 0)");
        out << weights_label(cfg.tae.loss_weights) << ',' << format_real(w[0]) << ','
            << format_real(w[1]) << ',' << format_real(w[2]) << ','
            << format_real(cfg.tae.gamma) << ',' << pct(r.eval.metrics.precision) << ','
            << pct(r.eval.metrics.recall) << ',' << pct(r.eval.metrics.f1) << ','
            << pct(r.eval.auc) << ','
            << format_real(r.train_wall_seconds) << '\n';
        std::printf("%-12s precision %s  recall %s  f1 %s  auc %s  train %.2f s\n",
                    weights_label(cfg.tae.loss_weights).c_str(),
                    pct(r.eval.metrics.precision).c_str(), pct(r.eval.metrics.recall).c_str(),
                    pct(r.eval.metrics.f1).c_str(), pct(r.eval.auc).c_str(),
                    double(r.train_wall_seconds));
    }
    write_snapshot(app, g.out_dir);
    std::printf("wrote %s/ablation.csv\n", g.out_dir.c_str());
    return 0;
}

int cmd_gradcheck(const GlobalOpts& g) {
    const auto results = run_gradcheck_suite(g.seed);
    bool ok = true;
    for (const auto& r : results) {
        std::printf("%-34s max rel err %.3e  (tol %.0e)  %s\n", r.name.c_str(),
                    double(r.max_relative_error), double(r.tolerance),
                    r.passed() ? "ok" : "FAIL");
        ok = ok && r.passed();
    }
    if (!ok) throw NumericError("gradient check failed");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"EV charging detection from smart-meter data via a temporal "
                 "convolutional autoencoder"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a key = value config file");

    GlobalOpts g;
    app.add_option("--seed", g.seed, "Master seed; all randomness derives from it")
        ->capture_default_str();
    app.add_option("--out-dir", g.out_dir, "Directory for all outputs")->capture_default_str();

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic smart-meter dataset");
    SynthFlags gen_synth;
    gen_synth.preset = "paper"; // 1106 non-EV + 139 EV consumers over 92 days
    add_synth_flags(gen, gen_synth);

    // preprocess
    auto* pre = app.add_subcommand("preprocess", "Run smooth -> scale -> windowize on a CSV");
    std::string pre_data;
    pre->add_option("--data", pre_data, "Input CSV (consumer_id,timestamp,kwh)")->required();
    ModelFlags pre_model;
    add_model_flags(pre, pre_model);

    // train
    auto* train = app.add_subcommand("train", "Train the autoencoder on non-EV consumers");
    std::string train_data, train_labels;
    bool train_all = false;
    train->add_option("--data", train_data, "Input CSV")->required();
    train->add_option("--labels", train_labels,
                      "Labels CSV; without it all consumers are assumed non-EV");
    train->add_flag("--use-all-non-ev", train_all,
                    "Use every non-EV consumer for train+validation (no held-out test share)");
    ModelFlags train_model;
    SplitFlags train_split;
    add_model_flags(train, train_model);
    add_split_flags(train, train_split);

    // detect
    auto* detect = app.add_subcommand("detect", "Score consumers against a trained model");
    std::string det_model, det_data, det_calibrate;
    double det_threshold = -1;
    bool det_score_loss = false;
    detect->add_option("--model", det_model, "Model file")->required();
    detect->add_option("--data", det_data, "Input CSV")->required();
    detect->add_option("--threshold", det_threshold, "Override the decision threshold");
    detect->add_option("--calibrate-from", det_calibrate,
                       "Validation CSV to recompute the threshold from");
    detect->add_flag("--score-loss", det_score_loss,
                     "Score windows with the training loss instead of squared error");

    // eval
    auto* eval = app.add_subcommand("eval", "Compute metrics from a report and labels");
    std::string eval_report, eval_labels;
    eval->add_option("--report", eval_report, "report.csv from detect")->required();
    eval->add_option("--labels", eval_labels, "Labels CSV")->required();

    // ablate
    auto* ablate = app.add_subcommand("ablate", "Run the loss-combination ablation grid");
    SynthFlags ab_synth;
    ModelFlags ab_model;
    SplitFlags ab_split;
    ab_synth.preset = "tiny";
    std::string ab_grid = "1,0,0";
    bool ab_paper_grid = false, ab_score_loss = false;
    add_synth_flags(ablate, ab_synth);
    add_model_flags(ablate, ab_model);
    add_split_flags(ablate, ab_split);
    ablate->add_option("--grid", ab_grid, "Semicolon-separated lambda triples, e.g. 1,0,0;1,1,0");
    ablate->add_flag("--paper-grid", ab_paper_grid,
                     "Use the standard 7-row grid of single losses and combinations");
    ablate->add_flag("--score-loss", ab_score_loss,
                     "Score anomaly windows with the training loss");

    // gradcheck
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (app.got_subcommand(gen)) return cmd_gen(app, g, gen_synth);
        if (app.got_subcommand(pre)) return cmd_preprocess(app, g, pre_data, pre_model);
        if (app.got_subcommand(train))
            return cmd_train(app, g, train_data, train_labels, train_model, train_split,
                             train_all);
        if (app.got_subcommand(detect))
            return cmd_detect(app, g, det_model, det_data, det_threshold, det_calibrate,
                              det_score_loss);
        if (app.got_subcommand(eval)) return cmd_eval(app, g, eval_report, eval_labels);
        if (app.got_subcommand(ablate))
            return cmd_ablate(app, g, ab_synth, ab_model, ab_split, ab_grid, ab_paper_grid,
                              ab_score_loss);
        if (app.got_subcommand(gradcheck)) return cmd_gradcheck(g);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const ShapeError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kExitNumeric;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "format error: %s\n", e.what());
        return kExitFormat;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIo;
    }
    return 0;
}
