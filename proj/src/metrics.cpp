#include "fedmia/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>

#include "fedmia/errors.hpp"

namespace fedmia {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
    if (scores.empty()) throw MetricError("no scores to evaluate");
    if (scores.size() != labels.size()) throw MetricError("scores and labels differ in length");
    for (int y : labels)
        if (y != 0 && y != 1) throw MetricError("labels must be binary");
    for (double s : scores)
        if (std::isnan(s)) throw MetricError("NaN score");
}

} // namespace

MetricReport confusion_metrics(std::span<const double> scores, std::span<const int> labels, double threshold) {
    check_inputs(scores, labels);
    MetricReport r;
    r.threshold = threshold;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        if (labels[i] == 1) (pred ? r.tp : r.fn) += 1;
        else (pred ? r.fp : r.tn) += 1;
    }
    const auto total = static_cast<double>(scores.size());
    r.accuracy = static_cast<double>(r.tp + r.tn) / total;
    if (r.tp + r.fp > 0) r.precision = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp);
    else r.degenerate = true;
    if (r.tp + r.fn > 0) r.recall = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
    else r.degenerate = true;
    r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
    check_inputs(scores, labels);
    const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    const std::size_t negatives = labels.size() - positives;
    if (positives == 0 || negatives == 0) throw MetricError("ROC needs both classes");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::size_t tp = 0, fp = 0;
    double area2 = 0.0;  // twice the area, in units of (1 / (P N))
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        std::size_t gtp = 0, gfp = 0;
        for (; i < order.size() && scores[order[i]] == s; ++i) (labels[order[i]] == 1 ? gtp : gfp) += 1;
        area2 += static_cast<double>(gfp) * static_cast<double>(2 * tp + gtp);
        tp += gtp;
        fp += gfp;
        curve.points.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                                static_cast<double>(tp) / static_cast<double>(positives), s});
    }
    curve.auc = area2 / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
    return curve;
}

MetricReport evaluate_binary(std::span<const double> scores, std::span<const int> labels, double threshold) {
    MetricReport r = confusion_metrics(scores, labels, threshold);
    r.auc = roc_auc(scores, labels).auc;
    return r;
}

Summary summarize(std::span<const double> values) {
    if (values.empty()) throw MetricError("cannot summarize an empty list");
    Summary s;
    s.count = values.size();
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

std::string format_summary(const Summary& s, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f ± %.*f", decimals, s.mean, decimals, s.stddev);
    return buf;
}

std::map<std::string, Summary> aggregate_runs(std::span<const MetricReport> reports) {
    if (reports.empty()) throw MetricError("no reports to aggregate");
    std::map<std::string, Summary> out;
    auto collect = [&](const char* name, auto&& get) {
        std::vector<double> v;
        for (const auto& r : reports) v.push_back(get(r));
        out[name] = summarize(v);
    };
    collect("accuracy", [](const MetricReport& r) { return r.accuracy; });
    collect("precision", [](const MetricReport& r) { return r.precision; });
    collect("recall", [](const MetricReport& r) { return r.recall; });
    collect("f1", [](const MetricReport& r) { return r.f1; });
    if (std::all_of(reports.begin(), reports.end(), [](const MetricReport& r) { return r.auc.has_value(); }))
        collect("auc", [](const MetricReport& r) { return *r.auc; });
    return out;
}

nlohmann::json to_json(const MetricReport& r) {
    nlohmann::json j{{"accuracy", r.accuracy}, {"precision", r.precision}, {"recall", r.recall},
                     {"f1", r.f1},             {"threshold", r.threshold}, {"tp", r.tp},
                     {"fp", r.fp},             {"tn", r.tn},               {"fn", r.fn},
                     {"degenerate", r.degenerate}};
    if (r.auc) j["auc"] = *r.auc;
    return j;
}

MetricReport metric_report_from_json(const nlohmann::json& j) {
    MetricReport r;
    r.accuracy = j.at("accuracy").get<double>();
    r.precision = j.at("precision").get<double>();
    r.recall = j.at("recall").get<double>();
    r.f1 = j.at("f1").get<double>();
    r.threshold = j.at("threshold").get<double>();
    r.tp = j.at("tp").get<std::size_t>();
    r.fp = j.at("fp").get<std::size_t>();
    r.tn = j.at("tn").get<std::size_t>();
    r.fn = j.at("fn").get<std::size_t>();
    r.degenerate = j.value("degenerate", false);
    if (j.contains("auc")) r.auc = j.at("auc").get<double>();
    return r;
}

nlohmann::json to_json(const std::map<std::string, Summary>& aggregate) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, s] : aggregate)
        j[name] = {{"mean", s.mean}, {"std", s.stddev}, {"n", s.count}, {"formatted", format_summary(s)}};
    return j;
}

void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve) {
    std::ofstream out(path);
    if (!out) throw MetricError("cannot write " + path.string());
    out << "fpr,tpr,threshold\n" << std::setprecision(17);
    for (const auto& p : curve.points) {
        out << p.fpr << ',' << p.tpr << ',';
        if (std::isinf(p.threshold)) out << "inf";
        else out << p.threshold;
        out << '\n';
    }
}

} // namespace fedmia
