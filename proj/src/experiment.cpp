#include "fedmia/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <thread>

#include "fedmia/errors.hpp"

namespace fedmia {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Typed field access with a JSON-pointer-like path in the error message.
template <typename T>
T field(const json& obj, const char* key, const std::string& path, std::optional<T> fallback = std::nullopt) {
    const std::string where = path + "/" + key;
    if (!obj.is_object()) throw ConfigError(path + ": expected an object");
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError(where + ": required field missing");
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": wrong type");
    }
}

const json& section(const json& doc, const char* key) {
    if (!doc.contains(key) || !doc.at(key).is_object()) throw ConfigError(std::string("/") + key + ": required object missing");
    return doc.at(key);
}

template <typename F>
auto parse_enum(const json& obj, const char* key, const std::string& path, F&& parser, const char* fallback)
    -> decltype(parser(std::string_view{})) {
    const auto text = field<std::string>(obj, key, path, std::string(fallback));
    try {
        return parser(text);
    } catch (const ConfigError& e) {
        throw ConfigError(path + "/" + key + ": " + e.what());
    }
}

} // namespace

std::string_view to_string(AttackSpecKind k) {
    switch (k) {
    case AttackSpecKind::none: return "none";
    case AttackSpecKind::mia_gradient: return "mia_gradient";
    case AttackSpecKind::mia_csmia: return "mia_csmia";
    case AttackSpecKind::aia: return "aia";
    }
    return "none";
}

AttackSpecKind parse_attack_spec_kind(std::string_view s) {
    if (s == "none") return AttackSpecKind::none;
    if (s == "mia_gradient") return AttackSpecKind::mia_gradient;
    if (s == "mia_csmia") return AttackSpecKind::mia_csmia;
    if (s == "aia") return AttackSpecKind::aia;
    throw ConfigError("unknown attack '" + std::string(s) + "'");
}

AttackSpec AttackSpec::defaults_for(AttackSpecKind kind) {
    AttackSpec a;
    a.kind = kind;
    if (kind == AttackSpecKind::mia_csmia) {
        a.signal = SignalKind::true_class_prob;
        a.classifier = AttackKind::mlp_64;
    }
    return a;
}

ExperimentConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("/: config must be a JSON object");
    const auto version = field<int>(doc, "schema_version", "");
    if (version != kSchemaVersion)
        throw ConfigError("/schema_version: unsupported version " + std::to_string(version));

    ExperimentConfig c;
    c.name = field<std::string>(doc, "name", "", std::string("experiment"));
    c.repetitions = field<int>(doc, "repetitions", "", 1);
    c.base_seed = field<std::uint64_t>(doc, "base_seed", "", std::uint64_t{1});
    c.overhead = field<bool>(doc, "overhead", "", true);
    c.output_dir = field<std::string>(doc, "output_dir", "", std::string("runs/") + c.name);

    const json& ds = section(doc, "dataset");
    const auto source = field<std::string>(ds, "source", "/dataset");
    if (source == "csv") {
        c.dataset.source = DatasetSpec::Source::csv;
        c.dataset.path = field<std::string>(ds, "path", "/dataset");
        c.dataset.label_column = field<int>(ds, "label_column", "/dataset", -1);
        c.dataset.has_header = field<bool>(ds, "has_header", "/dataset", true);
    } else if (source == "synthetic") {
        c.dataset.source = DatasetSpec::Source::synthetic;
        c.dataset.n = field<std::size_t>(ds, "n", "/dataset");
        c.dataset.d = field<std::size_t>(ds, "d", "/dataset");
        c.dataset.k = field<std::size_t>(ds, "k", "/dataset");
        c.dataset.class_separation = field<double>(ds, "class_separation", "/dataset", 0.5);
        if (ds.contains("seed")) c.dataset.seed = field<std::uint64_t>(ds, "seed", "/dataset");
    } else {
        throw ConfigError("/dataset/source: expected 'csv' or 'synthetic'");
    }
    if (ds.contains("attribute_column")) c.dataset.attribute_column = field<std::size_t>(ds, "attribute_column", "/dataset");
    c.dataset.standardize = field<bool>(ds, "standardize", "/dataset", false);

    const json& model = section(doc, "model");
    c.model.widths = field<std::vector<std::size_t>>(model, "widths", "/model");
    c.model.activation = parse_enum(model, "activation", "/model", parse_activation, "relu");
    c.model.loss = parse_enum(model, "loss", "/model", parse_loss_kind, "softmax_cross_entropy");

    const json& fed = section(doc, "federation");
    c.federation.n_rounds = field<int>(fed, "rounds", "/federation");
    c.federation.n_data_owners = field<std::size_t>(fed, "data_owners", "/federation");
    c.federation.local.epochs = field<int>(fed, "local_epochs", "/federation", 5);
    c.federation.local.batch_size = field<std::size_t>(fed, "batch_size", "/federation", std::size_t{64});
    c.federation.local.adam.learning_rate = field<double>(fed, "learning_rate", "/federation", 1e-3);
    c.federation.local.adam.weight_decay = field<double>(fed, "weight_decay", "/federation", 0.0);
    c.federation.adversary_role = parse_enum(fed, "adversary", "/federation", parse_adversary_role, "none");
    c.federation.target_do_index = field<std::size_t>(fed, "target_do", "/federation", std::size_t{0});
    c.federation.adversary_do_index = field<std::size_t>(fed, "adversary_do", "/federation", std::size_t{1});

    const json& sp = section(doc, "splits");
    c.splits.n_data_owners = c.federation.n_data_owners;
    c.splits.do_train_size = field<std::size_t>(sp, "do_train", "/splits");
    c.splits.do_test_size = field<std::size_t>(sp, "do_test", "/splits", std::size_t{0});
    c.splits.shadow_member_size = field<std::size_t>(sp, "shadow_members", "/splits", std::size_t{0});
    c.splits.shadow_nonmember_size = field<std::size_t>(sp, "shadow_nonmembers", "/splits", std::size_t{0});
    c.eval.members = field<std::size_t>(sp, "eval_members", "/splits", std::size_t{500});
    c.eval.non_members = field<std::size_t>(sp, "eval_nonmembers", "/splits", std::size_t{500});
    c.splits.eval_nonmember_size = c.eval.non_members;

    const json& at = section(doc, "attack");
    const auto kind = parse_enum(at, "kind", "/attack", parse_attack_spec_kind, "none");
    c.attack = AttackSpec::defaults_for(kind);
    c.attack.signal = parse_enum(at, "signal", "/attack", parse_signal_kind, std::string(to_string(c.attack.signal)).c_str());
    c.attack.classifier =
        parse_enum(at, "classifier", "/attack", parse_attack_kind, std::string(to_string(c.attack.classifier)).c_str());
    const auto scope = field<std::string>(at, "gradient_scope", "/attack", std::string("weights_and_bias"));
    if (scope == "weights_and_bias") c.attack.scope = GradientScope::weights_and_bias;
    else if (scope == "weights_only") c.attack.scope = GradientScope::weights_only;
    else throw ConfigError("/attack/gradient_scope: expected 'weights_and_bias' or 'weights_only'");
    c.attack.fit.l2 = field<double>(at, "l2", "/attack", c.attack.fit.l2);
    c.attack.fit.tolerance = field<double>(at, "tolerance", "/attack", c.attack.fit.tolerance);
    c.attack.fit.max_iterations = field<int>(at, "max_iterations", "/attack", c.attack.fit.max_iterations);
    c.attack.fit.mlp_epochs = field<int>(at, "mlp_epochs", "/attack", c.attack.fit.mlp_epochs);
    c.attack.fit.mlp_learning_rate = field<double>(at, "mlp_learning_rate", "/attack", c.attack.fit.mlp_learning_rate);
    c.attack.threshold = field<double>(at, "threshold", "/attack", 0.5);

    c.echo = doc;
    c.echo.erase("output_dir");
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return parse_config(doc);
}

std::vector<std::string> validate_config(const ExperimentConfig& c, std::optional<std::size_t> dataset_dim) {
    std::vector<std::string> v;
    auto violation = [&v](std::string s) { v.push_back(std::move(s)); };

    if (c.repetitions < 1) violation("/repetitions: must be >= 1");
    const auto& f = c.federation;
    if (f.n_rounds < 1) violation("/federation/rounds: must be >= 1");
    if (f.n_data_owners < 2) violation("/federation/data_owners: must be >= 2");
    if (f.target_do_index >= f.n_data_owners) violation("/federation/target_do: must be < data_owners");
    if (f.local.epochs < 0) violation("/federation/local_epochs: must be >= 0");
    if (f.local.batch_size == 0) violation("/federation/batch_size: must be >= 1");
    if (!(f.local.adam.learning_rate > 0.0)) violation("/federation/learning_rate: must be positive");
    if (f.adversary_role == AdversaryRole::do_semi_honest) {
        if (f.adversary_do_index >= f.n_data_owners) violation("/federation/adversary_do: must be < data_owners");
        else if (f.adversary_do_index == f.target_do_index)
            violation("/federation/adversary_do: the adversarial DO cannot target itself");
    }

    if (c.model.widths.size() < 2) violation("/model/widths: need at least input and output widths");
    else {
        const std::size_t expected_in =
            dataset_dim ? *dataset_dim : (c.dataset.source == DatasetSpec::Source::synthetic ? c.dataset.d : 0);
        if (expected_in != 0 && c.model.widths.front() != expected_in)
            violation("/model/widths: input width " + std::to_string(c.model.widths.front()) +
                      " does not match dataset dimension " + std::to_string(expected_in));
        if (c.dataset.source == DatasetSpec::Source::synthetic && c.model.widths.back() != c.dataset.k)
            violation("/model/widths: output width does not match the number of classes");
        if (std::find(c.model.widths.begin(), c.model.widths.end(), 0) != c.model.widths.end())
            violation("/model/widths: widths must be positive");
    }

    if (c.dataset.source == DatasetSpec::Source::synthetic) {
        if (c.dataset.k > c.dataset.n) violation("/dataset/k: more classes than records");
        if (c.splits.total() > c.dataset.n)
            violation("/splits: plan needs " + std::to_string(c.splits.total()) + " records, dataset has " +
                      std::to_string(c.dataset.n));
    }
    if (c.splits.do_train_size == 0) violation("/splits/do_train: must be >= 1");

    const auto kind = c.attack.kind;
    const bool mia = kind == AttackSpecKind::mia_gradient || kind == AttackSpecKind::mia_csmia;
    if (kind != AttackSpecKind::none && f.adversary_role == AdversaryRole::none)
        violation("/federation/adversary: an attack needs an adversary role");
    if (kind == AttackSpecKind::aia) {
        if (f.adversary_role != AdversaryRole::agg_semi_honest)
            violation("/attack/kind: aia is only supported with agg_semi_honest");
        if (!c.dataset.attribute_column) violation("/dataset/attribute_column: aia needs an attribute column");
        if (c.splits.shadow_member_size == 0) violation("/splits/shadow_members: aia needs a shadow set D_s");
    }
    if (mia) {
        if (is_aggregator(f.adversary_role)) {
            if (c.splits.shadow_member_size == 0) violation("/splits/shadow_members: aggregator MIA needs D_m");
            if (c.splits.shadow_nonmember_size == 0) violation("/splits/shadow_nonmembers: aggregator MIA needs D_nm");
        }
        if (f.adversary_role == AdversaryRole::do_semi_honest && c.splits.do_test_size == 0)
            violation("/splits/do_test: DO-SH uses its held-out test split as D_nm");
        if (c.eval.members == 0 || c.eval.non_members == 0)
            violation("/splits: MIA evaluation needs members and non-members");
        if (c.attack.signal != SignalKind::last_layer_grad_norm && c.model.loss != LossKind::softmax_cross_entropy)
            violation("/attack/signal: confidence signals need a softmax classifier");
    }
    if (c.model.loss != LossKind::softmax_cross_entropy)
        violation("/model/loss: experiments train on class labels and need softmax_cross_entropy");
    return v;
}

LabeledDataset load_dataset(const DatasetSpec& spec, std::uint64_t base_seed) {
    LabeledDataset ds;
    if (spec.source == DatasetSpec::Source::csv) {
        ds = load_csv(spec.path, spec.label_column, spec.has_header);
    } else {
        Rng rng(derive_seed(spec.seed.value_or(base_seed), "synthetic-data"));
        ds = synth_classification(spec.n, spec.d, spec.k, spec.class_separation, rng);
    }
    if (spec.attribute_column) binarize_attribute(ds, *spec.attribute_column);
    if (spec.standardize) standardize_columns(ds, ds.attribute_column);
    return ds;
}

PreparedRepetition prepare_repetition(const ExperimentConfig& config, const LabeledDataset& dataset,
                                      std::uint64_t seed) {
    PreparedRepetition p;
    p.seed = seed;
    Rng split_rng(derive_seed(seed, "partition"));
    p.splits = partition(dataset, config.splits, split_rng);
    Rng init_rng(derive_seed(seed, "init"));
    p.initial = MlpModel::create(config.model.widths, config.model.activation, config.model.loss, init_rng);

    const LabeledDataset& target = p.splits.do_train[config.federation.target_do_index];
    const std::size_t n_members = std::min(config.eval.members, target.size());
    Rng eval_rng(derive_seed(seed, "eval-members"));
    auto pick = eval_rng.permutation(target.size());
    pick.resize(n_members);
    std::sort(pick.begin(), pick.end());
    LabeledDataset members = target.subset(pick);

    if (config.attack.kind == AttackSpecKind::aia) {
        p.eval_records = std::move(members);
        p.eval_membership.assign(p.eval_records.size(), 1);
        return p;
    }
    const LabeledDataset& non = p.splits.eval_nonmembers;
    p.eval_records = members;
    p.eval_records.features = Matrix(members.size() + non.size(), dataset.dim());
    p.eval_records.labels.clear();
    p.eval_records.ids.clear();
    for (const LabeledDataset* src : std::array<const LabeledDataset*, 2>{&members, &non}) {
        for (std::size_t r = 0; r < src->size(); ++r) {
            const std::size_t row = p.eval_records.labels.size();
            std::copy(src->features.row(r).begin(), src->features.row(r).end(), p.eval_records.features.row(row).begin());
            p.eval_records.labels.push_back(src->labels[r]);
            p.eval_records.ids.push_back(src->ids[r]);
            p.eval_membership.push_back(src == &members ? 1 : 0);
        }
    }
    return p;
}

FederationRun run_federation_for(const ExperimentConfig& config, const PreparedRepetition& prep, AdversaryRole role) {
    FederationConfig fc = config.federation;
    fc.adversary_role = role;
    fc.seed = prep.seed;
    return run_federation(fc, prep.initial, prep.splits.do_train,
                          is_aggregator(role) ? &prep.splits.shadow_members : nullptr);
}

AttackOutcome run_attack(const AttackSpec& attack, const ExperimentConfig& config, const PreparedRepetition& prep,
                         const FederationRun& run) {
    const auto start = Clock::now();
    const auto shadows = run.shadow_series();
    const auto targets = run.target_series();
    if (shadows.empty() || targets.empty()) throw ConfigError("the federation run captured no attack snapshots");

    FitOptions fit = attack.fit;
    fit.seed = derive_seed(prep.seed, "attack-fit");
    AttackOutcome out;

    if (attack.kind == AttackSpecKind::aia) {
        const std::size_t k_values = 2;
        const auto c = build_attribute_dataset(shadows, prep.splits.shadow_members, k_values, attack.signal, attack.scope);
        AttackModel model = fit_attack_model(c, attack.classifier, fit);
        model.threshold = attack.threshold;
        const auto inferred = infer_attribute(model, targets, prep.eval_records, k_values, attack.signal, attack.scope);
        for (std::size_t r = 0; r < prep.eval_records.size(); ++r) {
            out.scores.push_back(inferred.probabilities[r][1]);
            out.labels.push_back(static_cast<int>(prep.eval_records.features(r, *prep.eval_records.attribute_column)));
        }
    } else {
        const AdversaryRole role = config.federation.adversary_role;
        const LabeledDataset* members = &prep.splits.shadow_members;
        const LabeledDataset* non_members = &prep.splits.shadow_nonmembers;
        if (role == AdversaryRole::do_semi_honest) {
            members = &prep.splits.do_train[config.federation.adversary_do_index];
            non_members = &prep.splits.do_test[config.federation.adversary_do_index];
        }
        const auto c = build_membership_dataset(shadows, *members, *non_members, attack.signal, attack.scope);
        AttackModel model = fit_attack_model(c, attack.classifier, fit);
        model.threshold = attack.threshold;
        out.scores = infer_membership(model, targets, prep.eval_records, attack.signal, attack.scope);
        out.labels = prep.eval_membership;
    }
    out.metrics = confusion_metrics(out.scores, out.labels, attack.threshold);
    out.roc = roc_auc(out.scores, out.labels);
    out.metrics.auc = out.roc.auc;
    out.seconds = seconds_since(start);
    return out;
}

RepetitionResult run_repetition(const ExperimentConfig& config, const LabeledDataset& dataset, int index) {
    RepetitionResult res;
    res.index = index;
    res.seed = config.base_seed + static_cast<std::uint64_t>(index);
    try {
        const AttackSpec& attack = config.attack;
        const PreparedRepetition prep = prepare_repetition(config, dataset, res.seed);
        res.manifest = manifest_to_json(prep.splits);

        const AdversaryRole role = config.federation.adversary_role;
        const FederationRun run = run_federation_for(config, prep, role);
        res.round_log = round_log(run);
        res.timings.federation_seconds = run.total_seconds;

        if (attack.kind != AttackSpecKind::none) {
            const AttackOutcome outcome = run_attack(attack, config, prep, run);
            res.metrics = outcome.metrics;
            res.roc = outcome.roc;
            res.timings.attack_seconds = outcome.seconds;
        }
        res.timings.attacked_seconds = res.timings.federation_seconds + res.timings.attack_seconds;

        if (config.overhead && role != AdversaryRole::none) {
            const FederationRun baseline = run_federation_for(config, prep, AdversaryRole::none);
            res.timings.baseline_seconds = baseline.total_seconds;
            res.timings.overhead_percent = measure_overhead(baseline.total_seconds, res.timings.attacked_seconds);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        res.ok = false;
        res.error = e.what();
        res.metrics.reset();
        res.roc.reset();
    }
    return res;
}

std::size_t ExperimentReport::failures() const {
    return static_cast<std::size_t>(
        std::count_if(repetitions.begin(), repetitions.end(), [](const RepetitionResult& r) { return !r.ok; }));
}

json ExperimentReport::metrics_json() const {
    json reps = json::array();
    for (const auto& r : repetitions) {
        json entry{{"index", r.index}, {"seed", r.seed}, {"status", r.ok ? "ok" : "failed"}};
        if (!r.ok) entry["error"] = r.error;
        if (r.metrics) entry["metrics"] = to_json(*r.metrics);
        reps.push_back(std::move(entry));
    }
    return json{{"schema_version", kSchemaVersion},
                {"software_version", kSoftwareVersion},
                {"config", config_echo},
                {"repetitions", reps},
                {"failed_repetitions", failures()},
                {"aggregate", to_json(aggregate)}};
}

json ExperimentReport::overhead_json() const {
    json reps = json::array();
    for (const auto& r : repetitions) {
        json entry{{"index", r.index},
                   {"federation_seconds", r.timings.federation_seconds},
                   {"attack_seconds", r.timings.attack_seconds},
                   {"attacked_seconds", r.timings.attacked_seconds},
                   {"baseline_seconds", r.timings.baseline_seconds}};
        if (r.timings.overhead_percent) entry["overhead_percent"] = *r.timings.overhead_percent;
        reps.push_back(std::move(entry));
    }
    json doc{{"repetitions", reps}};
    if (overhead)
        doc["overhead_percent"] = {{"mean", overhead->mean}, {"std", overhead->stddev}, {"n", overhead->count}};
    return doc;
}

ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    const LabeledDataset dataset = load_dataset(config.dataset, config.base_seed);
    if (const auto violations = validate_config(config, dataset.dim()); !violations.empty())
        throw ConfigError(violations.front());
    if (config.model.widths.back() != dataset.num_classes)
        throw ConfigError("/model/widths: output width does not match the dataset's class count");
    if (config.splits.total() > dataset.size()) throw ConfigError("/splits: plan exceeds dataset size");

    ExperimentReport report;
    report.config_echo = config.echo;
    report.repetitions.resize(static_cast<std::size_t>(config.repetitions));

    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::exception_ptr config_failure;
    auto worker = [&] {
        for (int i = next++; i < config.repetitions; i = next++) {
            try {
                report.repetitions[static_cast<std::size_t>(i)] = run_repetition(config, dataset, i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!config_failure) config_failure = std::current_exception();
            }
        }
    };
    const int threads = std::clamp(options.parallel, 1, config.repetitions);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (config_failure) std::rethrow_exception(config_failure);

    std::vector<MetricReport> ok;
    std::vector<double> overheads;
    for (const auto& r : report.repetitions) {
        if (r.ok && r.metrics) ok.push_back(*r.metrics);
        if (r.ok && r.timings.overhead_percent) overheads.push_back(*r.timings.overhead_percent);
    }
    if (!ok.empty()) report.aggregate = aggregate_runs(ok);
    if (!overheads.empty()) report.overhead = summarize(overheads);
    if (options.write_outputs) write_report(report, config.output_dir);
    return report;
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write_json = [&dir](const char* name, const json& doc) {
        std::ofstream out(dir / name);
        if (!out) throw InputError("cannot write " + (dir / name).string());
        out << doc.dump(2) << '\n';
    };
    write_json("metrics.json", report.metrics_json());
    write_json("overhead.json", report.overhead_json());
    json splits = json::object();
    for (const auto& r : report.repetitions) splits["rep" + std::to_string(r.index)] = r.manifest;
    write_json("splits.json", splits);
    for (const auto& r : report.repetitions) {
        if (r.roc) write_roc_csv(dir / ("roc_rep" + std::to_string(r.index) + ".csv"), *r.roc);
        std::ofstream log(dir / ("rounds_rep" + std::to_string(r.index) + ".jsonl"));
        for (const auto& line : r.round_log) log << line.dump() << '\n';
    }
}

std::map<std::string, Summary> reaggregate(const std::filesystem::path& dir) {
    std::ifstream in(dir / "metrics.json");
    if (!in) throw InputError("no metrics.json in " + dir.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed metrics.json: ") + e.what());
    }
    std::vector<MetricReport> reports;
    for (const auto& r : doc.at("repetitions"))
        if (r.at("status") == "ok" && r.contains("metrics")) reports.push_back(metric_report_from_json(r.at("metrics")));
    if (reports.empty()) throw MetricError("metrics.json holds no successful repetition with metrics");
    return aggregate_runs(reports);
}

} // namespace fedmia
