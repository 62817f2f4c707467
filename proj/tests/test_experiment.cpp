#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedmia/errors.hpp"
#include "fedmia/experiment.hpp"

using namespace fedmia;
using nlohmann::json;

namespace {

json breast_cancer_doc() {
    std::ifstream in(std::filesystem::path(FEDMIA_TEST_CONFIGS) / "breast_cancer_aia.json");
    json doc;
    in >> doc;
    doc["dataset"]["path"] = (std::filesystem::path(FEDMIA_TEST_CONFIGS) / ".." / "data" / "breast_cancer_wisconsin.csv").string();
    return doc;
}

json small_synthetic_doc(const char* attack, const char* role) {
    return json{{"schema_version", 1},
                {"name", "small"},
                {"dataset", {{"source", "synthetic"}, {"n", 400}, {"d", 20}, {"k", 4}, {"class_separation", 0.6}}},
                {"model", {{"widths", {20, 16, 4}}}},
                {"federation",
                 {{"rounds", 3}, {"data_owners", 3}, {"local_epochs", 2}, {"batch_size", 32}, {"adversary", role}}},
                {"splits",
                 {{"do_train", 60},
                  {"do_test", 20},
                  {"shadow_members", 60},
                  {"shadow_nonmembers", 40},
                  {"eval_members", 40},
                  {"eval_nonmembers", 40}}},
                {"attack", {{"kind", attack}}},
                {"repetitions", 2},
                {"base_seed", 3}};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool mentions(const std::vector<std::string>& violations, const std::string& needle) {
    for (const auto& v : violations)
        if (v.find(needle) != std::string::npos) return true;
    return false;
}

} // namespace

TEST_SUITE("experiment") {

TEST_CASE("breast cancer config is valid") {
    const auto c = parse_config(breast_cancer_doc());
    CHECK(validate_config(c, 30).empty());
    CHECK(c.federation.n_rounds == 10);
    CHECK(c.repetitions == 30);
    CHECK(c.attack.kind == AttackSpecKind::aia);
    CHECK(c.model.widths == std::vector<std::size_t>{30, 16, 6, 2});
    CHECK_FALSE(c.echo.contains("output_dir"));
}

TEST_CASE("cross-field violations are named") {
    auto doc = breast_cancer_doc();
    doc["federation"]["target_do"] = 3;
    CHECK(mentions(validate_config(parse_config(doc), 30), "/federation/target_do"));

    doc = breast_cancer_doc();
    doc["federation"]["adversary"] = "do_semi_honest";
    CHECK(mentions(validate_config(parse_config(doc), 30), "aia is only supported"));

    doc = breast_cancer_doc();
    doc["model"]["widths"] = {31, 16, 2};
    CHECK(mentions(validate_config(parse_config(doc), 30), "/model/widths"));

    auto syn = small_synthetic_doc("mia_gradient", "do_semi_honest");
    syn["federation"]["adversary_do"] = 0;
    CHECK(mentions(validate_config(parse_config(syn)), "/federation/adversary_do"));

    syn = small_synthetic_doc("mia_gradient", "none");
    CHECK(mentions(validate_config(parse_config(syn)), "/federation/adversary"));

    syn = small_synthetic_doc("mia_gradient", "agg_semi_honest");
    syn["splits"]["do_train"] = 500;
    CHECK(mentions(validate_config(parse_config(syn)), "/splits"));
}

TEST_CASE("structural errors carry a field path") {
    auto doc = breast_cancer_doc();
    doc["federation"].erase("rounds");
    try {
        parse_config(doc);
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("/federation/rounds") != std::string::npos);
    }
    doc = breast_cancer_doc();
    doc["federation"]["adversary"] = "eavesdropper";
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
    doc = breast_cancer_doc();
    doc["schema_version"] = 2;
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
}

TEST_CASE("csmia defaults") {
    const auto c = parse_config(small_synthetic_doc("mia_csmia", "agg_semi_honest"));
    CHECK(c.attack.signal == SignalKind::true_class_prob);
    CHECK(c.attack.classifier == AttackKind::mlp_64);
    const auto g = parse_config(small_synthetic_doc("mia_gradient", "agg_semi_honest"));
    CHECK(g.attack.signal == SignalKind::last_layer_grad_norm);
    CHECK(g.attack.classifier == AttackKind::logistic_regression);
}

TEST_CASE("honest run reports timings only") {
    auto doc = small_synthetic_doc("none", "none");
    doc["repetitions"] = 1;
    const auto c = parse_config(doc);
    const auto report = run_experiment(c, {1, false});
    REQUIRE(report.repetitions.size() == 1);
    CHECK(report.repetitions[0].ok);
    CHECK_FALSE(report.repetitions[0].metrics.has_value());
    CHECK(report.aggregate.empty());
    CHECK(report.repetitions[0].timings.federation_seconds > 0.0);
    CHECK(report.metrics_json()["repetitions"][0].contains("metrics") == false);
}

TEST_CASE("evaluation records") {
    const auto c = parse_config(small_synthetic_doc("mia_gradient", "agg_semi_honest"));
    const auto ds = load_dataset(c.dataset, c.base_seed);
    const auto prep = prepare_repetition(c, ds, 3);
    CHECK(prep.eval_records.size() == 80);
    const auto& target = prep.splits.do_train[0];
    for (std::size_t r = 0; r < prep.eval_records.size(); ++r) {
        const bool in_target = target.find(prep.eval_records.ids[r]).has_value();
        CHECK(in_target == (prep.eval_membership[r] == 1));
    }
}

TEST_CASE("runs are reproducible and written to disk") {
    const auto dir = std::filesystem::temp_directory_path() / "fedmia_experiment_test";
    std::filesystem::remove_all(dir);
    auto c = parse_config(small_synthetic_doc("mia_gradient", "agg_malicious"));
    c.output_dir = dir / "a";
    const auto first = run_experiment(c);
    c.output_dir = dir / "b";
    const auto second = run_experiment(c, {2, true});
    CHECK(first.failures() == 0);
    CHECK(slurp(dir / "a" / "metrics.json") == slurp(dir / "b" / "metrics.json"));
    CHECK(slurp(dir / "a" / "splits.json") == slurp(dir / "b" / "splits.json"));
    for (const char* f : {"overhead.json", "roc_rep0.csv", "rounds_rep1.jsonl"}) CHECK(std::filesystem::exists(dir / "a" / f));
    const auto again = reaggregate(dir / "a");
    CHECK(again.at("auc").mean == first.aggregate.at("auc").mean);
    std::filesystem::remove_all(dir);
}

TEST_CASE("every role runs end to end") {
    for (const char* role : {"agg_semi_honest", "agg_malicious", "do_semi_honest"}) {
        for (const char* attack : {"mia_gradient", "mia_csmia"}) {
            auto doc = small_synthetic_doc(attack, role);
            doc["repetitions"] = 1;
            doc["attack"]["mlp_epochs"] = 5;
            const auto report = run_experiment(parse_config(doc), {1, false});
            CHECK(report.failures() == 0);
            CHECK(report.aggregate.count("auc") == 1);
            CHECK(report.overhead.has_value());
        }
    }
}

TEST_CASE("a shuffled attribute cannot be inferred") {
    auto doc = small_synthetic_doc("aia", "agg_semi_honest");
    doc["dataset"]["n"] = 1200;
    doc["splits"] = {{"do_train", 200}, {"shadow_members", 200}, {"eval_members", 200}, {"eval_nonmembers", 0}};
    doc["federation"]["rounds"] = 5;
    const auto c = parse_config(doc);
    double total = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto ds = load_dataset(c.dataset, seed);
        // A balanced attribute drawn independently of every record.
        Rng rng(seed);
        std::vector<double> column(ds.size());
        for (std::size_t r = 0; r < ds.size(); ++r) column[r] = static_cast<double>(r % 2);
        rng.shuffle(column);
        for (std::size_t r = 0; r < ds.size(); ++r) ds.features(r, 0) = column[r];
        ds.attribute_column = 0;
        const auto prep = prepare_repetition(c, ds, seed);
        const auto run = run_federation_for(c, prep, AdversaryRole::agg_semi_honest);
        total += run_attack(c.attack, c, prep, run).metrics.accuracy;
    }
    const double mean = total / 10;
    CHECK(mean >= 0.40);
    CHECK(mean <= 0.60);
}

}
