#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fedmia/datakit.hpp"
#include "fedmia/federation.hpp"
#include "fedmia/nn.hpp"
#include "fedmia/signals.hpp"

namespace fedmia {

enum class RowSource { shadow_member, shadow_nonmember, attribute_shadow, target };

std::string_view to_string(RowSource s);
RowSource parse_row_source(std::string_view s);

struct AttackRow {
    RecordId record_id = 0;
    RowSource source = RowSource::shadow_member;
    int label = 0;
    std::vector<double> features;

    friend bool operator==(const AttackRow&, const AttackRow&) = default;
};

/// Training set C of the attack classifier. Each row holds `blocks` series of
/// `n_rounds` values (blocks > 1 only for attribute inference), all derived
/// from the record named by the row.
struct AttackDataset {
    std::size_t n_rounds = 0;
    std::size_t blocks = 1;
    SignalKind kind = SignalKind::last_layer_grad_norm;
    std::vector<AttackRow> rows;

    std::size_t width() const noexcept { return n_rounds * blocks; }
    Matrix feature_matrix() const;
    std::vector<int> labels() const;
};

/// Rows for D_m (label 1) then D_nm (label 0). Records are the outer loop and
/// rounds the inner loop, so a row never mixes records.
AttackDataset build_membership_dataset(std::span<const ModelSnapshot> shadow_snapshots,
                                       const LabeledDataset& members, const LabeledDataset& non_members,
                                       SignalKind kind, GradientScope scope = GradientScope::weights_and_bias);

/// Round-major construction: round i visits records in `round_orders[i]` (a
/// permutation of members followed by non-members) and writes each value into
/// the row keyed by record id. Yields the same rows as the record-major build.
AttackDataset build_membership_dataset_by_round(std::span<const ModelSnapshot> shadow_snapshots,
                                                const LabeledDataset& members,
                                                const LabeledDataset& non_members, SignalKind kind,
                                                std::span<const std::vector<std::size_t>> round_orders,
                                                GradientScope scope = GradientScope::weights_and_bias);

/// Feature vector c_0 || ... || c_{K-1}: block k is the series with the
/// attribute column forced to k.
std::vector<double> attribute_features(std::span<const ModelSnapshot> snapshots, std::span<const double> x, int y,
                                       std::size_t attribute_column, std::size_t k_values, SignalKind kind,
                                       GradientScope scope = GradientScope::weights_and_bias);

/// One row per record of `shadow_set` (which must designate its attribute
/// column), labelled with the record's true attribute value.
AttackDataset build_attribute_dataset(std::span<const ModelSnapshot> shadow_snapshots,
                                      const LabeledDataset& shadow_set, std::size_t k_values,
                                      SignalKind kind = SignalKind::last_layer_grad_norm,
                                      GradientScope scope = GradientScope::weights_and_bias);

struct AlignmentMismatch {
    std::size_t row = 0;
    std::size_t column = 0;
};

/// Re-derives every stored feature from (record id, round[, hypothesis]) and
/// reports cells that differ bit-wise. `sources` must contain every record id
/// named by the rows.
std::vector<AlignmentMismatch> verify_row_alignment(const AttackDataset& dataset,
                                                    std::span<const ModelSnapshot> snapshots,
                                                    std::span<const LabeledDataset* const> sources,
                                                    GradientScope scope = GradientScope::weights_and_bias);

void write_attack_csv(const std::filesystem::path& path, const AttackDataset& dataset);
AttackDataset read_attack_csv(const std::filesystem::path& path, std::size_t n_rounds, SignalKind kind);

enum class AttackKind { logistic_regression, mlp_64 };

std::string_view to_string(AttackKind k);
AttackKind parse_attack_kind(std::string_view s);

struct FitOptions {
    /// L2 strength per sample: the objective is mean loss + l2/2 * |w|^2.
    double l2 = 1e-3;
    double tolerance = 1e-6;
    int max_iterations = 5000;
    int mlp_epochs = 100;
    std::size_t mlp_batch_size = 64;
    double mlp_learning_rate = 1e-3;
    std::uint64_t seed = 0;
    /// Defaults to true for logistic regression and false for mlp_64.
    std::optional<bool> standardize;
};

class AttackModel {
public:
    AttackKind kind = AttackKind::logistic_regression;
    std::size_t num_classes = 2;
    std::size_t input_width = 0;
    std::vector<double> feature_mean;
    std::vector<double> feature_scale;
    /// Logistic parameters. One row for two classes (the logit of class 1),
    /// one row per class otherwise.
    Matrix coef;
    std::vector<double> intercept;
    std::optional<MlpModel> net;
    double threshold = 0.5;
    int iterations = 0;
    double final_gradient_norm = 0.0;

    /// Logistic model with all-zero parameters and identity standardization.
    static AttackModel zero_logistic(std::size_t width, std::size_t classes = 2);

    std::vector<double> standardized(std::span<const double> features) const;
    /// Class probabilities, length num_classes.
    std::vector<double> predict_proba(std::span<const double> features) const;
    /// Argmax with ties toward the smaller class index.
    int predict(std::span<const double> features) const;
};

/// Throws FitError when fewer than two label values are present.
AttackModel fit_attack_model(const AttackDataset& dataset, AttackKind kind, const FitOptions& options = {});

nlohmann::json attack_model_to_json(const AttackModel& model);
AttackModel attack_model_from_json(const nlohmann::json& doc);

/// Membership probability for every record of `records` from its series over
/// the target snapshots.
std::vector<double> infer_membership(const AttackModel& attack, std::span<const ModelSnapshot> target_snapshots,
                                     const LabeledDataset& records, SignalKind kind,
                                     GradientScope scope = GradientScope::weights_and_bias);

struct AttributeInference {
    std::vector<int> predicted;
    std::vector<std::vector<double>> probabilities;  // per record, length K
};

/// The attribute column's stored values are ignored; every hypothesis is substituted.
AttributeInference infer_attribute(const AttackModel& attack, std::span<const ModelSnapshot> target_snapshots,
                                   const LabeledDataset& records, std::size_t k_values,
                                   SignalKind kind = SignalKind::last_layer_grad_norm,
                                   GradientScope scope = GradientScope::weights_and_bias);

} // namespace fedmia
