#include "fedmia/signals.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "fedmia/errors.hpp"

namespace fedmia {

std::string_view to_string(SignalKind k) {
    switch (k) {
    case SignalKind::true_class_prob: return "true_class_prob";
    case SignalKind::neg_entropy: return "neg_entropy";
    case SignalKind::last_layer_grad_norm: return "last_layer_grad_norm";
    }
    return "last_layer_grad_norm";
}

SignalKind parse_signal_kind(std::string_view s) {
    if (s == "true_class_prob") return SignalKind::true_class_prob;
    if (s == "neg_entropy") return SignalKind::neg_entropy;
    if (s == "last_layer_grad_norm") return SignalKind::last_layer_grad_norm;
    throw ConfigError("unknown signal kind '" + std::string(s) + "'");
}

namespace {

void require_classifier(const MlpModel& model, const char* signal) {
    if (!model.is_classifier())
        throw UnsupportedSignalError(std::string(signal) + " needs a softmax classification model");
}

} // namespace

double true_class_prob(const MlpModel& model, std::span<const double> x, int y) {
    require_classifier(model, "true_class_prob");
    const auto p = predict(model, x);
    if (y < 0 || static_cast<std::size_t>(y) >= p.size()) throw LabelError("class label out of range");
    return p[static_cast<std::size_t>(y)];
}

double neg_entropy(const MlpModel& model, std::span<const double> x) {
    require_classifier(model, "neg_entropy");
    double s = 0.0;
    for (double p : predict(model, x))
        if (p > 0.0) s += p * std::log(p);
    return s;
}

double grad_norm(const MlpModel& model, std::span<const double> x, const Target& y, GradientScope scope) {
    const auto g = last_layer_gradient(model, x, y);
    double sq = 0.0;
    for (double v : g.weights.data) sq += v * v;
    if (scope == GradientScope::weights_and_bias)
        for (double v : g.bias) sq += v * v;
    if (!std::isfinite(sq)) throw NumericError("non-finite last-layer gradient");
    return std::sqrt(sq);
}

double signal(const MlpModel& model, std::span<const double> x, int y, SignalKind kind, GradientScope scope) {
    switch (kind) {
    case SignalKind::true_class_prob: return true_class_prob(model, x, y);
    case SignalKind::neg_entropy: return neg_entropy(model, x);
    case SignalKind::last_layer_grad_norm:
        return grad_norm(model, x, Target{y}, scope);
    }
    return 0.0;
}

SignalSeries extract_series(std::span<const ModelSnapshot> snapshots, RecordId id, std::span<const double> x, int y,
                            SignalKind kind, GradientScope scope) {
    if (snapshots.empty()) throw ConfigError("signal extraction needs at least one snapshot");
    SignalSeries s{id, kind, {}};
    s.values.reserve(snapshots.size());
    for (const auto& snap : snapshots) s.values.push_back(signal(snap.model(), x, y, kind, scope));
    return s;
}

std::vector<SignalSeries> extract_all(std::span<const ModelSnapshot> snapshots, const LabeledDataset& records,
                                      SignalKind kind, GradientScope scope) {
    std::vector<SignalSeries> out;
    out.reserve(records.size());
    for (std::size_t r = 0; r < records.size(); ++r)
        out.push_back(extract_series(snapshots, records.ids[r], records.features.row(r), records.labels[r], kind, scope));
    return out;
}

void write_signal_csv(const std::filesystem::path& path, std::span<const SignalSeries> series,
                      std::span<const int> labels) {
    if (series.size() != labels.size()) throw ShapeError("series/label count mismatch");
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    const std::size_t n = series.empty() ? 0 : series.front().values.size();
    out << "record_id,label";
    for (std::size_t i = 1; i <= n; ++i) out << ",round_" << i;
    out << '\n' << std::setprecision(17);
    for (std::size_t r = 0; r < series.size(); ++r) {
        if (series[r].values.size() != n) throw ShapeError("series of unequal length");
        out << series[r].record_id << ',' << labels[r];
        for (double v : series[r].values) out << ',' << v;
        out << '\n';
    }
}

} // namespace fedmia
