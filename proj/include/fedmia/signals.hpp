#pragma once

#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "fedmia/datakit.hpp"
#include "fedmia/federation.hpp"
#include "fedmia/nn.hpp"

namespace fedmia {

enum class SignalKind { true_class_prob, neg_entropy, last_layer_grad_norm };

std::string_view to_string(SignalKind k);
SignalKind parse_signal_kind(std::string_view s);

/// Which final-layer parameters enter the gradient norm.
enum class GradientScope { weights_and_bias, weights_only };

/// p_y(x) of the softmax output.
double true_class_prob(const MlpModel& model, std::span<const double> x, int y);
/// sum_i p_i ln p_i, with 0 ln 0 = 0. Always in [-ln k, 0].
double neg_entropy(const MlpModel& model, std::span<const double> x);
/// Euclidean norm of the per-sample loss gradient w.r.t. the final layer.
double grad_norm(const MlpModel& model, std::span<const double> x, const Target& y,
                 GradientScope scope = GradientScope::weights_and_bias);

double signal(const MlpModel& model, std::span<const double> x, int y, SignalKind kind,
              GradientScope scope = GradientScope::weights_and_bias);

struct SignalSeries {
    RecordId record_id = 0;
    SignalKind kind = SignalKind::last_layer_grad_norm;
    std::vector<double> values;  // one per round, in snapshot order
};

SignalSeries extract_series(std::span<const ModelSnapshot> snapshots, RecordId id, std::span<const double> x,
                            int y, SignalKind kind, GradientScope scope = GradientScope::weights_and_bias);

/// One series per record of `records`, in record order.
std::vector<SignalSeries> extract_all(std::span<const ModelSnapshot> snapshots, const LabeledDataset& records,
                                      SignalKind kind, GradientScope scope = GradientScope::weights_and_bias);

/// CSV: record_id,label,round_1..round_n.
void write_signal_csv(const std::filesystem::path& path, std::span<const SignalSeries> series,
                      std::span<const int> labels);

} // namespace fedmia
