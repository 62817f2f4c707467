#include "fedmia/federation.hpp"

#include <chrono>

#include "fedmia/errors.hpp"

namespace fedmia {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

} // namespace

std::string_view to_string(AdversaryRole r) {
    switch (r) {
    case AdversaryRole::none: return "none";
    case AdversaryRole::agg_semi_honest: return "agg_semi_honest";
    case AdversaryRole::agg_malicious: return "agg_malicious";
    case AdversaryRole::do_semi_honest: return "do_semi_honest";
    }
    return "none";
}

AdversaryRole parse_adversary_role(std::string_view s) {
    if (s == "none") return AdversaryRole::none;
    if (s == "agg_semi_honest") return AdversaryRole::agg_semi_honest;
    if (s == "agg_malicious") return AdversaryRole::agg_malicious;
    if (s == "do_semi_honest") return AdversaryRole::do_semi_honest;
    throw ConfigError("unknown adversary role '" + std::string(s) + "'");
}

bool is_aggregator(AdversaryRole r) noexcept {
    return r == AdversaryRole::agg_semi_honest || r == AdversaryRole::agg_malicious;
}

std::string_view to_string(SnapshotKind k) {
    switch (k) {
    case SnapshotKind::per_do_update: return "per_do_update";
    case SnapshotKind::global: return "global";
    case SnapshotKind::shadow: return "shadow";
    }
    return "global";
}

void FederationConfig::validate() const {
    if (n_rounds < 1) throw ConfigError("n_rounds must be >= 1");
    if (n_data_owners < 2) throw ConfigError("n_data_owners must be >= 2");
    if (target_do_index >= n_data_owners) throw ConfigError("target_do_index must be < n_data_owners");
    if (local.epochs < 0) throw ConfigError("local epochs must be >= 0");
    if (local.batch_size == 0) throw ConfigError("batch_size must be >= 1");
    if (adversary_role == AdversaryRole::do_semi_honest) {
        if (adversary_do_index >= n_data_owners) throw ConfigError("adversary_do_index must be < n_data_owners");
        if (adversary_do_index == target_do_index)
            throw ConfigError("the adversarial DO cannot be its own target");
    }
}

MlpModel aggregate(std::span<const MlpModel> models) {
    if (models.empty()) throw ShapeError("aggregate needs at least one model");
    for (const auto& m : models)
        if (!m.same_architecture(models.front())) throw ShapeError("cannot aggregate models of different architecture");

    // Mean as first + mean offset from it, so equal models average exactly.
    MlpModel out = models.front();
    const double n = static_cast<double>(models.size());
    auto& layers = out.layers();
    for (std::size_t li = 0; li < layers.size(); ++li) {
        auto average = [&](std::span<double> dst, auto&& src_of) {
            for (std::size_t j = 0; j < dst.size(); ++j) {
                const double base = dst[j];
                double offset = 0.0;
                for (const auto& m : models) offset += src_of(m)[j] - base;
                dst[j] = base + offset / n;
            }
        };
        average(layers[li].weights.data, [li](const MlpModel& m) -> const std::vector<double>& {
            return m.layers()[li].weights.data;
        });
        average(layers[li].bias, [li](const MlpModel& m) -> const std::vector<double>& {
            return m.layers()[li].bias;
        });
    }
    return out;
}

MlpModel aggregate_malicious(const MlpModel& target_update, const MlpModel& shadow_update) {
    const MlpModel pair[] = {target_update, shadow_update};
    return aggregate(pair);
}

std::vector<ModelSnapshot> FederationRun::target_series() const {
    std::vector<ModelSnapshot> out;
    for (const auto& r : rounds)
        if (r.target_snapshot) out.push_back(*r.target_snapshot);
    return out;
}

std::vector<ModelSnapshot> FederationRun::shadow_series() const {
    std::vector<ModelSnapshot> out;
    for (const auto& r : rounds)
        if (r.shadow_snapshot) out.push_back(*r.shadow_snapshot);
    return out;
}

std::vector<ModelSnapshot> FederationRun::global_series() const {
    std::vector<ModelSnapshot> out;
    for (const auto& r : rounds) out.push_back(r.global_snapshot);
    return out;
}

FederationRun run_federation(const FederationConfig& config, const MlpModel& initial,
                             std::span<const LabeledDataset> do_datasets, const LabeledDataset* shadow_members) {
    config.validate();
    if (do_datasets.size() != config.n_data_owners)
        throw ConfigError("expected " + std::to_string(config.n_data_owners) + " DO datasets, got " +
                          std::to_string(do_datasets.size()));
    for (const auto& ds : do_datasets) {
        if (ds.empty()) throw ConfigError("a data owner holds no records");
        if (ds.dim() != initial.input_width()) throw ShapeError("DO dataset width does not match the model");
    }
    const AdversaryRole role = config.adversary_role;
    if (is_aggregator(role)) {
        if (shadow_members == nullptr || shadow_members->empty())
            throw ConfigError("aggregator adversaries need a shadow member dataset");
        if (shadow_members->dim() != initial.input_width())
            throw ShapeError("shadow dataset width does not match the model");
    }

    const auto run_start = Clock::now();
    std::vector<Rng> do_rngs;
    for (std::size_t i = 0; i < config.n_data_owners; ++i)
        do_rngs.emplace_back(derive_seed(config.seed, "do-train", i));
    Rng shadow_rng(derive_seed(config.seed, "shadow-train"));

    FederationRun run;
    MlpModel global = initial;
    MlpModel fake_global = initial;  // only served under agg_malicious
    const std::size_t target = config.target_do_index;

    for (int round = 1; round <= config.n_rounds; ++round) {
        const auto round_start = Clock::now();
        std::vector<MlpModel> updates;
        std::vector<std::uint64_t> steps;
        updates.reserve(config.n_data_owners);

        auto phase = Clock::now();
        for (std::size_t i = 0; i < config.n_data_owners; ++i) {
            const bool isolated = role == AdversaryRole::agg_malicious && i == target;
            MlpModel local = isolated ? fake_global : global;
            const auto& ds = do_datasets[i];
            steps.push_back(train_local(local, ds.features, ds.labels, config.local, do_rngs[i]).steps);
            updates.push_back(std::move(local));
        }
        const double do_seconds = seconds_since(phase);

        std::optional<MlpModel> shadow;
        double shadow_seconds = 0.0;
        if (is_aggregator(role)) {
            phase = Clock::now();
            shadow = role == AdversaryRole::agg_malicious ? fake_global : global;
            train_local(*shadow, shadow_members->features, shadow_members->labels, config.local, shadow_rng);
            shadow_seconds = seconds_since(phase);
        }

        phase = Clock::now();
        global = aggregate(updates);
        if (role == AdversaryRole::agg_malicious) fake_global = aggregate_malicious(updates[target], *shadow);
        const double aggregation_seconds = seconds_since(phase);

        RoundRecord rec{round, std::nullopt, std::nullopt, ModelSnapshot(global, round, SnapshotKind::global),
                        std::move(steps), do_seconds, shadow_seconds, aggregation_seconds, 0.0};
        if (is_aggregator(role)) {
            rec.target_snapshot.emplace(updates[target], round, SnapshotKind::per_do_update);
            rec.shadow_snapshot.emplace(*shadow, round, SnapshotKind::shadow);
        } else if (role == AdversaryRole::do_semi_honest) {
            rec.target_snapshot.emplace(global, round, SnapshotKind::global);
            rec.shadow_snapshot.emplace(updates[config.adversary_do_index], round, SnapshotKind::shadow);
        }
        rec.wall_clock_seconds = seconds_since(round_start);
        run.rounds.push_back(std::move(rec));
    }
    run.total_seconds = seconds_since(run_start);
    return run;
}

double measure_overhead(double baseline_seconds, double attacked_seconds) {
    if (!(baseline_seconds > 0.0)) throw MeasurementError("baseline time must be positive");
    return 100.0 * (attacked_seconds - baseline_seconds) / baseline_seconds;
}

double measure_overhead(const FederationRun& baseline, const FederationRun& attacked) {
    return measure_overhead(baseline.total_seconds, attacked.total_seconds);
}

std::string snapshot_file_name(int round, SnapshotKind kind) {
    return "round" + std::to_string(round) + "_" + std::string(to_string(kind)) + ".json";
}

std::vector<nlohmann::json> round_log(const FederationRun& run) {
    std::vector<nlohmann::json> lines;
    for (const auto& r : run.rounds) {
        nlohmann::json snaps = nlohmann::json::object();
        auto add = [&](const char* role, const std::optional<ModelSnapshot>& s) {
            if (s) snaps[role] = {{"provenance", std::string(to_string(s->kind()))},
                                  {"path", snapshot_file_name(r.round_index, s->kind())}};
        };
        add("global", r.global_snapshot);
        add("target", r.target_snapshot);
        add("shadow", r.shadow_snapshot);
        lines.push_back({{"round", r.round_index},
                         {"snapshots", snaps},
                         {"local_steps", r.local_steps},
                         {"timings",
                          {{"do_training_seconds", r.do_training_seconds},
                           {"shadow_seconds", r.shadow_seconds},
                           {"aggregation_seconds", r.aggregation_seconds},
                           {"wall_clock_seconds", r.wall_clock_seconds}}}});
    }
    return lines;
}

} // namespace fedmia
