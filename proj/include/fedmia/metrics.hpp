#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace fedmia {

struct MetricReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::optional<double> auc;
    double threshold = 0.5;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    /// Set when precision or recall had a zero denominator and was reported as 0.
    bool degenerate = false;
};

/// Predicts positive when score >= threshold. Labels must be 0 or 1.
MetricReport confusion_metrics(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;  // +inf for the (0, 0) origin
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

/// Descending-score threshold sweep; equal scores move together, so the
/// trapezoid area equals the Mann-Whitney statistic with ties counted 1/2.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels);

/// confusion_metrics plus auc.
MetricReport evaluate_binary(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

struct Summary {
    double mean = 0.0;
    double stddev = 0.0;  // sample (n - 1) standard deviation
    std::size_t count = 0;
};

Summary summarize(std::span<const double> values);
/// "0.73 ± 0.01"
std::string format_summary(const Summary& s, int decimals = 2);

/// Per metric name (accuracy, precision, recall, f1, auc). auc is included
/// only when every report carries one. Needs at least one report; the
/// standard deviation of a single report is 0.
std::map<std::string, Summary> aggregate_runs(std::span<const MetricReport> reports);

nlohmann::json to_json(const MetricReport& r);
MetricReport metric_report_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const std::map<std::string, Summary>& aggregate);

/// CSV: fpr,tpr,threshold.
void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve);

} // namespace fedmia
