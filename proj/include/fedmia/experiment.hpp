#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedmia/attacks.hpp"
#include "fedmia/datakit.hpp"
#include "fedmia/federation.hpp"
#include "fedmia/metrics.hpp"
#include "fedmia/nn.hpp"
#include "fedmia/signals.hpp"

namespace fedmia {

inline constexpr const char* kSoftwareVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

struct DatasetSpec {
    enum class Source { csv, synthetic } source = Source::synthetic;
    std::filesystem::path path;
    int label_column = -1;
    bool has_header = true;
    std::size_t n = 3000, d = 100, k = 100;
    double class_separation = 0.5;
    std::optional<std::uint64_t> seed;  // synthetic generation; defaults to base_seed
    /// Column turned into a binary k-means attribute (attribute inference).
    std::optional<std::size_t> attribute_column;
    bool standardize = false;
};

struct ModelSpec {
    std::vector<std::size_t> widths;
    Activation activation = Activation::relu;
    LossKind loss = LossKind::softmax_cross_entropy;
};

enum class AttackSpecKind { none, mia_gradient, mia_csmia, aia };
std::string_view to_string(AttackSpecKind k);
AttackSpecKind parse_attack_spec_kind(std::string_view s);

struct AttackSpec {
    AttackSpecKind kind = AttackSpecKind::mia_gradient;
    SignalKind signal = SignalKind::last_layer_grad_norm;
    AttackKind classifier = AttackKind::logistic_regression;
    GradientScope scope = GradientScope::weights_and_bias;
    FitOptions fit;
    double threshold = 0.5;

    /// Signal and classifier defaults for an attack kind.
    static AttackSpec defaults_for(AttackSpecKind kind);
};

struct EvalSizes {
    std::size_t members = 500;
    std::size_t non_members = 500;
};

struct ExperimentConfig {
    std::string name = "experiment";
    DatasetSpec dataset;
    ModelSpec model;
    FederationConfig federation;
    SplitPlan splits;
    EvalSizes eval;
    AttackSpec attack;
    int repetitions = 1;
    std::uint64_t base_seed = 1;
    bool overhead = true;
    std::filesystem::path output_dir = "runs/experiment";
    /// The parsed document minus output_dir, echoed into metrics.json.
    nlohmann::json echo;
};

/// Parses a config document. Structural problems (missing or mistyped
/// fields) raise ConfigError with a JSON path; cross-field checks live in
/// validate_config.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Empty when the config is valid. `dataset_dim` overrides the width check
/// for CSV sources when known.
std::vector<std::string> validate_config(const ExperimentConfig& config,
                                         std::optional<std::size_t> dataset_dim = std::nullopt);

/// Loads or generates the dataset, applying attribute binarization and
/// standardization as configured.
LabeledDataset load_dataset(const DatasetSpec& spec, std::uint64_t base_seed);

/// Everything one repetition needs before federated training starts.
struct PreparedRepetition {
    std::uint64_t seed = 0;
    Splits splits;
    MlpModel initial;
    /// Evaluation records: members from the target DO's training data first,
    /// then non-members disjoint from every other split.
    LabeledDataset eval_records;
    std::vector<int> eval_membership;
};

PreparedRepetition prepare_repetition(const ExperimentConfig& config, const LabeledDataset& dataset,
                                      std::uint64_t seed);

FederationRun run_federation_for(const ExperimentConfig& config, const PreparedRepetition& prep,
                                 AdversaryRole role);

struct AttackOutcome {
    std::vector<double> scores;
    std::vector<int> labels;
    MetricReport metrics;
    RocCurve roc;
    double seconds = 0.0;
};

/// Builds C from the shadow series, fits M_attack and scores the evaluation
/// records with the target series.
AttackOutcome run_attack(const AttackSpec& attack, const ExperimentConfig& config, const PreparedRepetition& prep,
                         const FederationRun& run);

struct RepetitionTimings {
    double baseline_seconds = 0.0;
    double federation_seconds = 0.0;
    double attack_seconds = 0.0;
    double attacked_seconds = 0.0;
    std::optional<double> overhead_percent;
};

struct RepetitionResult {
    int index = 0;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    std::optional<MetricReport> metrics;
    std::optional<RocCurve> roc;
    RepetitionTimings timings;
    nlohmann::json manifest;
    std::vector<nlohmann::json> round_log;
};

RepetitionResult run_repetition(const ExperimentConfig& config, const LabeledDataset& dataset, int index);

struct ExperimentReport {
    std::vector<RepetitionResult> repetitions;
    std::map<std::string, Summary> aggregate;
    std::optional<Summary> overhead;
    nlohmann::json config_echo;

    std::size_t failures() const;
    nlohmann::json metrics_json() const;
    nlohmann::json overhead_json() const;
};

struct RunOptions {
    int parallel = 1;
    bool write_outputs = true;
};

ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Writes metrics.json, overhead.json, splits.json, roc_rep<i>.csv and
/// rounds_rep<i>.jsonl into `dir`.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

/// Re-aggregates metrics.json in `dir` from its per-repetition entries.
std::map<std::string, Summary> reaggregate(const std::filesystem::path& dir);

} // namespace fedmia
