// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// when any criterion fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fedmia/experiment.hpp"
#include "oracles.hpp"

using namespace fedmia;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
    return std::chrono::duration<double>(Clock::now() - t).count();
}

struct Verdict {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const char* title, const Verdict& v) {
    std::printf("criterion %2d %s  %s: %s\n", id, v.pass ? "PASS" : "FAIL", title, v.detail.c_str());
    std::fflush(stdout);
    failures += v.pass ? 0 : 1;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

fs::path source_dir() { return fs::path(FEDMIA_SOURCE_DIR); }

ExperimentConfig config_from(const char* name) {
    auto c = load_config(source_dir() / "configs" / name);
    if (c.dataset.source == DatasetSpec::Source::csv && c.dataset.path.is_relative())
        c.dataset.path = source_dir() / c.dataset.path;
    return c;
}

// 1 ----------------------------------------------------------------------
Verdict gradient_oracle() {
    const auto start = Clock::now();
    Rng rng(20240601);
    double worst = 0;
    int models = 0;
    for (; models < 60; ++models) {
        const LossKind loss = models % 2 ? LossKind::mean_squared_error : LossKind::softmax_cross_entropy;
        const Activation act = models % 3 == 0 ? Activation::relu : Activation::tanh;
        const std::size_t layers = 1 + rng.below(3);
        std::vector<std::size_t> widths{1 + rng.below(16)};
        for (std::size_t i = 0; i < layers; ++i) widths.push_back(2 + rng.below(15));
        const auto m = MlpModel::create(widths, act, loss, rng);
        std::vector<double> x(m.input_width());
        for (auto& v : x) v = rng.uniform(-2, 2);
        Target y;
        if (m.is_classifier()) {
            y = static_cast<int>(rng.below(m.output_width()));
        } else {
            std::vector<double> t(m.output_width());
            for (auto& v : t) v = rng.uniform(-2, 2);
            y = t;
        }
        const auto analytic = oracle::flatten(backward(m, x, y));
        const auto numeric = oracle::numeric_gradient(m, x, y, 1e-6);
        worst = std::max(worst, oracle::max_relative_error(analytic, numeric));
    }
    const double secs = seconds_since(start);
    return {worst <= 1e-5 && secs < 10.0,
            fmt("%d models, max relative error %.2e, %.2f s", models, worst, secs)};
}

// 2 ----------------------------------------------------------------------
Verdict auc_oracle() {
    const auto start = Clock::now();
    Rng rng(77);
    double worst = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.below(199);
        std::vector<double> s(n);
        std::vector<int> y(n);
        const std::uint64_t levels = trial % 3 == 0 ? 4 : 100000;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng.below(levels)) / static_cast<double>(levels);
            y[i] = static_cast<int>(rng.below(2));
        }
        y[0] = 1;
        y[1] = 0;
        worst = std::max(worst, std::abs(roc_auc(s, y).auc - oracle::mann_whitney_auc(s, y)));
    }
    const double secs = seconds_since(start);
    return {worst <= 1e-9 && secs < 5.0, fmt("200 sets, max |difference| %.1e, %.3f s", worst, secs)};
}

// 3 ----------------------------------------------------------------------
Verdict row_alignment() {
    auto c = config_from("synthetic_gradient_agg_semi_honest.json");
    c.federation.n_rounds = 5;
    const auto ds = load_dataset(c.dataset, c.base_seed);
    const auto prep = prepare_repetition(c, ds, c.base_seed);
    const auto run = run_federation_for(c, prep, AdversaryRole::agg_semi_honest);
    const auto shadows = run.shadow_series();
    const auto& members = prep.splits.shadow_members;
    const auto& non = prep.splits.shadow_nonmembers;
    const std::array<const LabeledDataset*, 2> sources{&members, &non};

    const auto canonical = build_membership_dataset(shadows, members, non, SignalKind::last_layer_grad_norm);
    Rng rng(5);
    bool identical = true;
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<std::vector<std::size_t>> orders;
        for (std::size_t r = 0; r < shadows.size(); ++r) orders.push_back(rng.permutation(members.size() + non.size()));
        const auto shuffled =
            build_membership_dataset_by_round(shadows, members, non, SignalKind::last_layer_grad_norm, orders);
        identical = identical && shuffled.rows == canonical.rows;
    }
    const bool clean = verify_row_alignment(canonical, shadows, sources).empty();

    // Inject misalignment the way a per-round reordering would: permute one
    // column's values across rows.
    int detected = 0;
    const int injections = 20;
    for (int trial = 0; trial < injections; ++trial) {
        auto broken = canonical;
        const std::size_t col = rng.below(broken.n_rounds);
        const std::size_t a = rng.below(broken.rows.size());
        std::size_t b = rng.below(broken.rows.size() - 1);
        if (b >= a) ++b;
        std::swap(broken.rows[a].features[col], broken.rows[b].features[col]);
        const auto bad = verify_row_alignment(broken, shadows, sources);
        detected += bad.size() == 2 && bad[0].column == col;
    }
    return {identical && clean && detected == injections,
            fmt("%zu rows x %zu rounds; shuffled orders identical: %s; injections detected %d/%d", canonical.rows.size(),
                canonical.n_rounds, identical ? "yes" : "no", detected, injections)};
}

// 4 ----------------------------------------------------------------------
Verdict fedavg_algebra() {
    Rng rng(4);
    bool idempotent = true;
    double mean_err = 0, linear_err = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::vector<std::size_t> widths{2 + rng.below(10), 2 + rng.below(10), 2 + rng.below(10)};
        const auto m = MlpModel::create(widths, Activation::relu, LossKind::softmax_cross_entropy, rng);
        const std::vector<MlpModel> copies(1 + rng.below(5), m);
        idempotent = idempotent && aggregate(copies) == m;

        const std::size_t k = 1 + rng.below(6);
        std::vector<MlpModel> a, b, combo;
        const double alpha = rng.uniform(-2, 2), beta = rng.uniform(-2, 2);
        for (std::size_t i = 0; i < k; ++i) {
            a.push_back(MlpModel::create(widths, Activation::relu, LossKind::softmax_cross_entropy, rng));
            b.push_back(MlpModel::create(widths, Activation::relu, LossKind::softmax_cross_entropy, rng));
            MlpModel c = a.back();
            for (std::size_t l = 0; l < c.layers().size(); ++l) {
                auto& cl = c.layers()[l];
                const auto& bl = b.back().layers()[l];
                for (std::size_t j = 0; j < cl.weights.data.size(); ++j)
                    cl.weights.data[j] = alpha * cl.weights.data[j] + beta * bl.weights.data[j];
                for (std::size_t j = 0; j < cl.bias.size(); ++j) cl.bias[j] = alpha * cl.bias[j] + beta * bl.bias[j];
            }
            combo.push_back(std::move(c));
        }
        const auto got = oracle::parameters(aggregate(a));
        const auto want = oracle::scalar_mean(a);
        for (std::size_t j = 0; j < got.size(); ++j) mean_err = std::max(mean_err, std::abs(got[j] - want[j]));

        const auto lhs = oracle::parameters(aggregate(combo));
        const auto pa = oracle::parameters(aggregate(a));
        const auto pb = oracle::parameters(aggregate(b));
        for (std::size_t j = 0; j < lhs.size(); ++j)
            linear_err = std::max(linear_err, std::abs(lhs[j] - (alpha * pa[j] + beta * pb[j])));
    }
    return {idempotent && mean_err <= 1e-12 && linear_err <= 1e-12,
            fmt("idempotent: %s; mean vs scalar loop %.1e; linearity %.1e", idempotent ? "exact" : "no", mean_err,
                linear_err)};
}

// 5 ----------------------------------------------------------------------
Verdict breast_cancer_aia() {
    const auto c = config_from("breast_cancer_aia.json");
    const auto start = Clock::now();
    const auto report = run_experiment(c, {1, false});
    const double secs = seconds_since(start);
    const auto& agg = report.aggregate;
    const Summary acc = agg.at("accuracy"), auc = agg.at("auc");
    return {report.failures() == 0 && report.repetitions.size() == 30 && acc.mean >= 0.80 && auc.mean >= 0.85 &&
                secs < 300.0,
            fmt("30 repetitions, accuracy %s, AUC %s, precision %s, %.1f s", format_summary(acc).c_str(),
                format_summary(auc).c_str(), format_summary(agg.at("precision")).c_str(), secs)};
}

// 6-9 --------------------------------------------------------------------
struct RoleStats {
    std::vector<double> gradient_auc, csmia_auc, overhead, seconds;
};

struct MiaStudy {
    RoleStats agg_sh, agg_mal, do_sh;
    std::vector<double> null_auc;
    double max_seed_seconds = 0;
};

double mean(const std::vector<double>& v) { return summarize(v).mean; }

MiaStudy run_mia_study(int seeds) {
    MiaStudy study;
    const auto grad_cfg = config_from("synthetic_gradient_agg_semi_honest.json");
    const auto cs_cfg = config_from("synthetic_csmia_agg_semi_honest.json");
    const auto ds = load_dataset(grad_cfg.dataset, grad_cfg.base_seed);

    for (int i = 0; i < seeds; ++i) {
        const auto seed_start = Clock::now();
        const std::uint64_t seed = grad_cfg.base_seed + static_cast<std::uint64_t>(i);
        const auto prep = prepare_repetition(grad_cfg, ds, seed);
        const auto baseline = run_federation_for(grad_cfg, prep, AdversaryRole::none);

        const std::pair<AdversaryRole, RoleStats*> roles[] = {{AdversaryRole::agg_semi_honest, &study.agg_sh},
                                                              {AdversaryRole::agg_malicious, &study.agg_mal},
                                                              {AdversaryRole::do_semi_honest, &study.do_sh}};
        for (const auto& [role, stats] : roles) {
            auto g = grad_cfg;
            g.federation.adversary_role = role;
            auto cs = cs_cfg;
            cs.federation.adversary_role = role;
            const auto run = run_federation_for(g, prep, role);
            const auto grad = run_attack(g.attack, g, prep, run);
            const auto conf = run_attack(cs.attack, cs, prep, run);
            stats->gradient_auc.push_back(grad.roc.auc);
            stats->csmia_auc.push_back(conf.roc.auc);
            stats->overhead.push_back(measure_overhead(baseline.total_seconds, run.total_seconds + grad.seconds));
            stats->seconds.push_back(run.total_seconds + grad.seconds);

            if (role == AdversaryRole::agg_semi_honest) {
                // Null control: the attack learns from C with its membership
                // labels permuted.
                auto c = build_membership_dataset(run.shadow_series(), prep.splits.shadow_members,
                                                  prep.splits.shadow_nonmembers, SignalKind::last_layer_grad_norm);
                auto labels = c.labels();
                Rng rng(derive_seed(seed, "null-control"));
                rng.shuffle(labels);
                for (std::size_t r = 0; r < labels.size(); ++r) c.rows[r].label = labels[r];
                const auto model = fit_attack_model(c, AttackKind::logistic_regression);
                const auto scores = infer_membership(model, run.target_series(), prep.eval_records,
                                                     SignalKind::last_layer_grad_norm);
                study.null_auc.push_back(roc_auc(scores, prep.eval_membership).auc);
            }
        }
        const double secs = seconds_since(seed_start);
        study.max_seed_seconds = std::max(study.max_seed_seconds, secs);
        std::printf("  seed %llu: AUC agg_sh %.3f/%.3f agg_mal %.3f/%.3f do_sh %.3f/%.3f (gradient/cs), null %.3f, "
                    "%.1f s\n",
                    static_cast<unsigned long long>(seed), study.agg_sh.gradient_auc.back(),
                    study.agg_sh.csmia_auc.back(), study.agg_mal.gradient_auc.back(), study.agg_mal.csmia_auc.back(),
                    study.do_sh.gradient_auc.back(), study.do_sh.csmia_auc.back(), study.null_auc.back(), secs);
        std::fflush(stdout);
    }
    return study;
}

Verdict desk_scale_mia(const MiaStudy& s) {
    const double auc = mean(s.agg_sh.gradient_auc);
    const double null_mean = mean(s.null_auc);
    const double null_lo = *std::min_element(s.null_auc.begin(), s.null_auc.end());
    const double null_hi = *std::max_element(s.null_auc.begin(), s.null_auc.end());
    return {auc >= 0.65 && null_mean >= 0.45 && null_mean <= 0.55 && s.max_seed_seconds < 900.0,
            fmt("Agg-SH AUC %s; null control mean %.3f (range %.3f-%.3f); slowest seed %.1f s",
                format_summary(summarize(s.agg_sh.gradient_auc)).c_str(), null_mean, null_lo, null_hi,
                s.max_seed_seconds)};
}

Verdict adversary_ordering(const MiaStudy& s) {
    const double mal = mean(s.agg_mal.gradient_auc), sh = mean(s.agg_sh.gradient_auc), dosh = mean(s.do_sh.gradient_auc);
    return {mal >= sh && sh >= dosh - 0.02,
            fmt("mean AUC Agg-Mal %.3f >= Agg-SH %.3f >= DO-SH %.3f - 0.02", mal, sh, dosh)};
}

Verdict csmia_parity(const MiaStudy& s) {
    double worst = 0;
    std::string detail;
    for (const auto& [name, r] : {std::pair<const char*, const RoleStats*>{"Agg-SH", &s.agg_sh},
                                  {"Agg-Mal", &s.agg_mal},
                                  {"DO-SH", &s.do_sh}}) {
        const double gap = mean(r->csmia_auc) - mean(r->gradient_auc);
        worst = std::max(worst, std::abs(gap));
        detail += fmt("%s%s CS-MIA %.3f vs gradient %.3f", detail.empty() ? "" : "; ", name, mean(r->csmia_auc),
                      mean(r->gradient_auc));
    }
    return {worst <= 0.07, detail + fmt(" (max gap %.3f)", worst)};
}

Verdict overhead_accounting(const MiaStudy& s) {
    const double dosh = mean(s.do_sh.overhead), sh = mean(s.agg_sh.overhead), mal = mean(s.agg_mal.overhead);
    return {dosh < sh && dosh < mal,
            fmt("mean overhead DO-SH %+.1f%% < Agg-SH %+.1f%%, Agg-Mal %+.1f%%", dosh, sh, mal)};
}

// 10 ---------------------------------------------------------------------
std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Verdict determinism() {
    const fs::path root = fs::temp_directory_path() / "fedmia_acceptance_determinism";
    fs::remove_all(root);
    bool same = true;
    std::string detail;
    auto twice = [&](ExperimentConfig c, const char* tag) {
        c.output_dir = root / tag / "first";
        run_experiment(c);
        c.output_dir = root / tag / "second";
        run_experiment(c);
        for (const char* file : {"metrics.json", "splits.json"}) {
            const bool eq = read_file(root / tag / "first" / file) == read_file(root / tag / "second" / file);
            same = same && eq;
            detail += fmt("%s%s/%s %s", detail.empty() ? "" : ", ", tag, file, eq ? "identical" : "DIFFERENT");
        }
    };
    twice(config_from("breast_cancer_aia.json"), "breast_cancer_aia");
    auto syn = config_from("synthetic_csmia_agg_malicious.json");
    syn.repetitions = 2;
    twice(syn, "synthetic_csmia");
    fs::remove_all(root);
    return {same, detail};
}

} // namespace

int main() {
    const auto start = Clock::now();
    report(1, "gradient oracle", gradient_oracle());
    report(2, "AUC oracle equivalence", auc_oracle());
    report(3, "row alignment", row_alignment());
    report(4, "FedAvg algebra", fedavg_algebra());
    report(5, "Breast Cancer attribute inference", breast_cancer_aia());

    std::printf("  running the desk-scale membership study (10 seeds x 3 adversaries)\n");
    const MiaStudy study = run_mia_study(10);
    report(6, "desk-scale gradient MIA", desk_scale_mia(study));
    report(7, "adversary ordering", adversary_ordering(study));
    report(8, "CS-MIA parity", csmia_parity(study));
    report(9, "overhead accounting", overhead_accounting(study));

    report(10, "determinism", determinism());
    std::printf("%d of 10 criteria failed, %.1f s\n", failures, seconds_since(start));
    return failures == 0 ? 0 : 1;
}
