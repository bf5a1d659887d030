#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "evdetect/common.hpp"

namespace evdetect {

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::size_t total() const { return tp + fp + tn + fn; }
};

/// Standard confusion counts with EV (= 1) as the positive class.
inline Confusion confusion(const std::vector<int>& decisions, const std::vector<int>& labels) {
    if (decisions.size() != labels.size()) throw ShapeError("confusion: length mismatch");
    Confusion c;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        if (decisions[i] != 0 && decisions[i] != 1)
            throw DataError("confusion: decision must be 0 or 1");
        if (labels[i] != 0 && labels[i] != 1)
            throw DataError("confusion: unknown label");
        if (labels[i] == 1)
            decisions[i] == 1 ? ++c.tp : ++c.fn;
        else
            decisions[i] == 1 ? ++c.fp : ++c.tn;
    }
    return c;
}

/// Precision/recall/F1; undefined denominators surface as empty optionals,
/// never as silent zeros.
struct Prf {
    std::optional<real> precision, recall, f1;
};

inline real f1_from_pr(real precision, real recall) {
    return real(2) * precision * recall / (precision + recall);
}

inline Prf prf(std::size_t tp, std::size_t fp, std::size_t fn) {
    Prf out;
    if (tp + fp > 0) out.precision = real(tp) / real(tp + fp);
    if (tp + fn > 0) out.recall = real(tp) / real(tp + fn);
    if (out.precision && out.recall && (*out.precision + *out.recall) > 0)
        out.f1 = f1_from_pr(*out.precision, *out.recall);
    return out;
}

struct RocPoint {
    real fpr = 0, tpr = 0;
};

/// ROC by sweeping every distinct score as a threshold (ties grouped into one
/// step), AUC by trapezoidal integration. Equals the pairwise
/// P(pos > neg) + 0.5 P(pos == neg) probability exactly.
inline std::pair<std::vector<RocPoint>, real> roc_auc(const std::vector<real>& scores,
                                                      const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw ShapeError("roc_auc: length mismatch");
    std::size_t n_pos = 0, n_neg = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) throw DataError("roc_auc: unknown label");
        l == 1 ? ++n_pos : ++n_neg;
    }
    if (n_pos == 0 || n_neg == 0)
        throw DataError("roc_auc: both classes must be present");

    std::vector<std::size_t> idx(scores.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<RocPoint> points;
    points.push_back({real(0), real(0)});
    real auc = 0;
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        // group ties
        std::size_t j = i;
        std::size_t d_tp = 0, d_fp = 0;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
            labels[idx[j]] == 1 ? ++d_tp : ++d_fp;
            ++j;
        }
        const real fpr0 = real(fp) / real(n_neg);
        const real tpr0 = real(tp) / real(n_pos);
        tp += d_tp;
        fp += d_fp;
        const real fpr1 = real(fp) / real(n_neg);
        const real tpr1 = real(tp) / real(n_pos);
        auc += (fpr1 - fpr0) * (tpr0 + tpr1) / real(2);
        points.push_back({fpr1, tpr1});
        i = j;
    }
    return {std::move(points), auc};
}

struct EvalReport {
    Confusion counts;
    Prf metrics;
    std::vector<RocPoint> roc_points;
    real auc = real(0);
};

inline EvalReport evaluate(const std::vector<real>& scores, const std::vector<int>& decisions,
                           const std::vector<int>& labels) {
    EvalReport r;
    r.counts = confusion(decisions, labels);
    r.metrics = prf(r.counts.tp, r.counts.fp, r.counts.fn);
    auto [points, auc] = roc_auc(scores, labels);
    r.roc_points = std::move(points);
    r.auc = auc;
    return r;
}

namespace detail {

inline std::string pct_or_undef(const std::optional<real>& v) {
    if (!v) return "undefined";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", double(*v) * 100.0);
    return buf;
}

} // namespace detail

inline void write_roc_csv(const std::vector<RocPoint>& points, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "fpr,tpr\n";
    for (const auto& p : points)
        out << format_real(p.fpr) << ',' << format_real(p.tpr) << '\n';
}

inline void write_eval_csv(const EvalReport& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "tp,fp,tn,fn,precision_pct,recall_pct,f1_pct,auc_pct\n";
    out << r.counts.tp << ',' << r.counts.fp << ',' << r.counts.tn << ',' << r.counts.fn << ','
        << detail::pct_or_undef(r.metrics.precision) << ','
        << detail::pct_or_undef(r.metrics.recall) << ',' << detail::pct_or_undef(r.metrics.f1)
        << ',' << detail::pct_or_undef(r.auc) << '\n';
}

/// Human-readable summary, percentages with two decimals.
inline std::string format_eval_table(const EvalReport& r) {
    std::string s;
    s += "           predicted 0   predicted 1\n";
    s += "label 0    " + std::to_string(r.counts.tn) + "             " +
         std::to_string(r.counts.fp) + "\n";
    s += "label 1    " + std::to_string(r.counts.fn) + "             " +
         std::to_string(r.counts.tp) + "\n";
    s += "precision: " + detail::pct_or_undef(r.metrics.precision) + " %\n";
    s += "recall:    " + detail::pct_or_undef(r.metrics.recall) + " %\n";
    s += "f1:        " + detail::pct_or_undef(r.metrics.f1) + " %\n";
    s += "auc:       " + detail::pct_or_undef(r.auc) + " %\n";
    return s;
}

} // namespace evdetect
