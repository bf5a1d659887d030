#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "evdetect/common.hpp"
#include "evdetect/model.hpp"
#include "evdetect/pipeline.hpp"

namespace evdetect {

constexpr int kModelFormatVersion = 1;

/// A trained model plus everything detection needs to run stand-alone:
/// the preprocessing options, the fitted scaler, and the calibrated threshold.
struct ModelBundle {
    TaeModel model;
    PipelineOptions pipeline;
    std::optional<ScalerParams> scaler;
    std::optional<real> threshold;
};

namespace detail {

struct LayerEntry {
    std::string name;
    std::vector<std::size_t> shape;
    const std::vector<real>* values;
};

template <typename Fn>
void visit_layers(const TaeModel& m, Fn&& fn) {
    auto conv = [&](const std::string& prefix, const ConvParams& c) {
        fn(prefix + ".v", std::vector<std::size_t>{c.out_channels, c.in_channels, c.kernel_size},
           c.v);
        fn(prefix + ".g", std::vector<std::size_t>{c.out_channels}, c.g);
        fn(prefix + ".bias", std::vector<std::size_t>{c.out_channels}, c.bias);
    };
    auto block = [&](const std::string& prefix, const ResidualBlockParams& b) {
        conv(prefix + ".conv1", b.conv1);
        conv(prefix + ".conv2", b.conv2);
        if (b.skip_proj) conv(prefix + ".skip", *b.skip_proj);
    };
    for (std::size_t i = 0; i < 3; ++i)
        block("encoder.block" + std::to_string(i), m.encoder_blocks[i]);
    for (std::size_t i = 0; i < 3; ++i)
        block("decoder.block" + std::to_string(i), m.decoder_blocks[i]);
    conv("output_projection", m.output_projection);
}

template <typename Fn>
void visit_layers_mut(TaeModel& m, Fn&& fn) {
    auto conv = [&](const std::string& prefix, ConvParams& c) {
        fn(prefix + ".v", std::vector<std::size_t>{c.out_channels, c.in_channels, c.kernel_size},
           c.v);
        fn(prefix + ".g", std::vector<std::size_t>{c.out_channels}, c.g);
        fn(prefix + ".bias", std::vector<std::size_t>{c.out_channels}, c.bias);
    };
    auto block = [&](const std::string& prefix, ResidualBlockParams& b) {
        conv(prefix + ".conv1", b.conv1);
        conv(prefix + ".conv2", b.conv2);
        if (b.skip_proj) conv(prefix + ".skip", *b.skip_proj);
    };
    for (std::size_t i = 0; i < 3; ++i)
        block("encoder.block" + std::to_string(i), m.encoder_blocks[i]);
    for (std::size_t i = 0; i < 3; ++i)
        block("decoder.block" + std::to_string(i), m.decoder_blocks[i]);
    conv("output_projection", m.output_projection);
}

inline std::string join_sizes(const std::array<std::size_t, 3>& a) {
    std::ostringstream os;
    os << a[0] << ',' << a[1] << ',' << a[2];
    return os.str();
}

inline std::array<std::size_t, 3> parse_sizes3(const std::string& s, const std::string& key) {
    std::array<std::size_t, 3> out{};
    std::istringstream is(s);
    std::string tok;
    for (std::size_t i = 0; i < 3; ++i) {
        if (!std::getline(is, tok, ','))
            throw FormatError("model file: bad triple for " + key);
        out[i] = static_cast<std::size_t>(std::stoull(tok));
    }
    return out;
}

} // namespace detail

inline void save_model(const ModelBundle& bundle, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    const TaeConfig& c = bundle.model.config;
    out << "evdetect-model " << bundle.model.format_version << '\n';
    out << "[config]\n";
    out << "window_length = " << c.window_length << '\n';
    out << "kernel_size = " << c.kernel_size << '\n';
    out << "filters = " << detail::join_sizes(c.filters) << '\n';
    out << "dilations = " << detail::join_sizes(c.dilations) << '\n';
    out << "dropout_rate = " << format_real(c.dropout_rate) << '\n';
    out << "learning_rate = " << format_real(c.learning_rate) << '\n';
    out << "epochs = " << c.epochs << '\n';
    out << "batch_size = " << c.batch_size << '\n';
    out << "lambda1 = " << format_real(c.loss_weights.lambda1) << '\n';
    out << "lambda2 = " << format_real(c.loss_weights.lambda2) << '\n';
    out << "lambda3 = " << format_real(c.loss_weights.lambda3) << '\n';
    out << "gamma = " << format_real(c.gamma) << '\n';
    out << "seed = " << c.seed << '\n';
    out << "input_smoothing = " << (bundle.pipeline.smooth ? 1 : 0) << '\n';
    detail::visit_layers(bundle.model, [&](const std::string& name,
                                           const std::vector<std::size_t>& shape,
                                           const std::vector<real>& values) {
        out << "[layer] " << name;
        for (std::size_t s : shape) out << ' ' << s;
        out << '\n';
        for (std::size_t i = 0; i < values.size(); ++i)
            out << format_real(values[i]) << (i + 1 == values.size() ? '\n' : ' ');
    });
    if (bundle.scaler) {
        out << "[scaler]\n";
        out << "data_min = " << format_real(bundle.scaler->data_min) << '\n';
        out << "data_max = " << format_real(bundle.scaler->data_max) << '\n';
    }
    if (bundle.threshold) {
        out << "[calibration]\n";
        out << "threshold = " << format_real(*bundle.threshold) << '\n';
    }
    out << "[end]\n";
    if (!out) throw IoError("write failed: " + path);
}

inline void save_model(const TaeModel& model, const std::string& path) {
    save_model(ModelBundle{model, PipelineOptions{model.config.window_length, true}, {}, {}}, path);
}

inline ModelBundle load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    std::string tag;
    int version = -1;
    if (!(in >> tag >> version) || tag != "evdetect-model")
        throw FormatError(path + ": not a model file");
    if (version != kModelFormatVersion)
        throw FormatError(path + ": unsupported format_version " + std::to_string(version) +
                          " (expected " + std::to_string(kModelFormatVersion) + ")");

    auto read_kv = [&](const std::string& expected_key) -> std::string {
        std::string key, eq, value;
        if (!(in >> key >> eq >> value) || key != expected_key || eq != "=")
            throw FormatError(path + ": expected '" + expected_key + " = <value>'");
        return value;
    };

    std::string section;
    if (!(in >> section) || section != "[config]")
        throw FormatError(path + ": missing [config] section");

    TaeConfig c;
    c.window_length = std::stoull(read_kv("window_length"));
    c.kernel_size = std::stoull(read_kv("kernel_size"));
    c.filters = detail::parse_sizes3(read_kv("filters"), "filters");
    c.dilations = detail::parse_sizes3(read_kv("dilations"), "dilations");
    c.dropout_rate = static_cast<real>(std::stod(read_kv("dropout_rate")));
    c.learning_rate = static_cast<real>(std::stod(read_kv("learning_rate")));
    c.epochs = std::stoull(read_kv("epochs"));
    c.batch_size = std::stoull(read_kv("batch_size"));
    c.loss_weights.lambda1 = static_cast<real>(std::stod(read_kv("lambda1")));
    c.loss_weights.lambda2 = static_cast<real>(std::stod(read_kv("lambda2")));
    c.loss_weights.lambda3 = static_cast<real>(std::stod(read_kv("lambda3")));
    c.gamma = static_cast<real>(std::stod(read_kv("gamma")));
    c.seed = std::stoull(read_kv("seed"));
    const bool smoothing = read_kv("input_smoothing") != "0";

    try {
        validate(c);
    } catch (const ConfigError& e) {
        throw FormatError(path + ": invalid config: " + e.what());
    }

    ModelBundle bundle;
    bundle.model.config = c;
    bundle.model.format_version = version;
    bundle.pipeline = PipelineOptions{c.window_length, smoothing};

    // Rebuild the architecture, then fill parameters in file order.
    {
        TaeModel skeleton = init_tae(c);
        bundle.model.encoder_blocks = std::move(skeleton.encoder_blocks);
        bundle.model.decoder_blocks = std::move(skeleton.decoder_blocks);
        bundle.model.output_projection = std::move(skeleton.output_projection);
    }

    detail::visit_layers_mut(bundle.model, [&](const std::string& name,
                                               const std::vector<std::size_t>& shape,
                                               std::vector<real>& values) {
        std::string marker, got_name;
        if (!(in >> marker >> got_name) || marker != "[layer]" || got_name != name)
            throw FormatError(path + ": expected layer '" + name + "', got '" +
                              (marker == "[layer]" ? got_name : marker) + "'");
        std::size_t expect = 1;
        for (std::size_t i = 0; i < shape.size(); ++i) {
            std::size_t s;
            if (!(in >> s)) throw FormatError(path + ": truncated shape for " + name);
            if (s != shape[i])
                throw FormatError(path + ": shape mismatch for " + name);
            expect *= s;
        }
        if (expect != values.size())
            throw FormatError(path + ": shape mismatch for " + name);
        for (std::size_t i = 0; i < values.size(); ++i) {
            double v;
            if (!(in >> v)) throw FormatError(path + ": truncated values for " + name);
            values[i] = static_cast<real>(v);
        }
        if (!all_finite(values)) throw FormatError(path + ": non-finite values in " + name);
    });

    bool done = false;
    while (in >> section) {
        if (section == "[scaler]") {
            ScalerParams sp;
            sp.data_min = static_cast<real>(std::stod(read_kv("data_min")));
            sp.data_max = static_cast<real>(std::stod(read_kv("data_max")));
            if (!(sp.data_max > sp.data_min))
                throw FormatError(path + ": scaler data_max must exceed data_min");
            bundle.scaler = sp;
        } else if (section == "[calibration]") {
            bundle.threshold = static_cast<real>(std::stod(read_kv("threshold")));
        } else if (section == "[end]") {
            done = true;
            break;
        } else {
            throw FormatError(path + ": unknown section '" + section + "'");
        }
    }
    if (!done) throw FormatError(path + ": truncated file (missing [end])");
    return bundle;
}

} // namespace evdetect
