#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fedmia/datakit.hpp"
#include "fedmia/nn.hpp"

namespace fedmia {

enum class AdversaryRole { none, agg_semi_honest, agg_malicious, do_semi_honest };

std::string_view to_string(AdversaryRole r);
AdversaryRole parse_adversary_role(std::string_view s);
bool is_aggregator(AdversaryRole r) noexcept;

struct FederationConfig {
    int n_rounds = 10;
    std::size_t n_data_owners = 3;
    TrainOptions local;
    AdversaryRole adversary_role = AdversaryRole::none;
    /// The DO whose data is attacked.
    std::size_t target_do_index = 0;
    /// The attacking DO under do_semi_honest; must differ from the target.
    std::size_t adversary_do_index = 1;
    std::uint64_t seed = 0;

    /// Throws ConfigError on violated invariants.
    void validate() const;
};

enum class SnapshotKind { per_do_update, global, shadow };
std::string_view to_string(SnapshotKind k);

/// Frozen copy of a model. The parameters are shared read-only.
class ModelSnapshot {
public:
    ModelSnapshot(const MlpModel& model, int round, SnapshotKind kind)
        : model_(std::make_shared<const MlpModel>(model)), round_(round), kind_(kind) {}

    const MlpModel& model() const noexcept { return *model_; }
    int round() const noexcept { return round_; }
    SnapshotKind kind() const noexcept { return kind_; }

private:
    std::shared_ptr<const MlpModel> model_;
    int round_;
    SnapshotKind kind_;
};

struct RoundRecord {
    int round_index = 0;
    /// M_i: the target DO's update (aggregator roles) or the global model the
    /// adversarial DO receives after this round (do_semi_honest).
    std::optional<ModelSnapshot> target_snapshot;
    /// S_i: the shadow model after local training this round.
    std::optional<ModelSnapshot> shadow_snapshot;
    ModelSnapshot global_snapshot;
    std::vector<std::uint64_t> local_steps;  // per DO
    double do_training_seconds = 0.0;
    double shadow_seconds = 0.0;
    double aggregation_seconds = 0.0;
    double wall_clock_seconds = 0.0;
};

struct FederationRun {
    std::vector<RoundRecord> rounds;
    double total_seconds = 0.0;

    std::vector<ModelSnapshot> target_series() const;
    std::vector<ModelSnapshot> shadow_series() const;
    std::vector<ModelSnapshot> global_series() const;
};

/// Unweighted element-wise mean of architecturally identical models.
MlpModel aggregate(std::span<const MlpModel> models);
/// Fake global of the malicious aggregator: mean of the target's and the shadow's update.
MlpModel aggregate_malicious(const MlpModel& target_update, const MlpModel& shadow_update);

/// Runs config.n_rounds rounds of local training plus averaging, starting from
/// `initial`. Aggregator roles need `shadow_members`; do_semi_honest uses the
/// adversary's own model and data and ignores it.
FederationRun run_federation(const FederationConfig& config, const MlpModel& initial,
                             std::span<const LabeledDataset> do_datasets,
                             const LabeledDataset* shadow_members);

/// (attacked - baseline) / baseline, in percent.
double measure_overhead(double baseline_seconds, double attacked_seconds);
double measure_overhead(const FederationRun& baseline, const FederationRun& attacked);

/// JSON-lines round log. Snapshot references are the file names the caller
/// writes checkpoints under (see snapshot_file_name).
std::string snapshot_file_name(int round, SnapshotKind kind);
std::vector<nlohmann::json> round_log(const FederationRun& run);

} // namespace fedmia
