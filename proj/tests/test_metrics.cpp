#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fedmia/errors.hpp"
#include "fedmia/metrics.hpp"
#include "fedmia/rng.hpp"
#include "oracles.hpp"

using namespace fedmia;

TEST_SUITE("metrics") {

TEST_CASE("confusion counts") {
    const std::vector<double> s{0.9, 0.8, 0.4};
    const std::vector<int> y{1, 0, 0};
    const auto r = confusion_metrics(s, y, 0.5);
    CHECK(r.tp == 1);
    CHECK(r.fp == 1);
    CHECK(r.tn == 1);
    CHECK(r.fn == 0);
    CHECK(r.precision == 0.5);
    CHECK(r.recall == 1.0);
    CHECK(r.accuracy == doctest::Approx(2.0 / 3.0));
    CHECK(r.f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("perfect and constant predictors") {
    const std::vector<int> y{1, 0, 1, 0};
    const auto perfect = confusion_metrics(std::vector<double>{1, 0, 1, 0}, y);
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.f1 == 1.0);
    const auto constant = confusion_metrics(std::vector<double>{1, 1, 1, 1}, y);
    CHECK(constant.recall == 1.0);
    CHECK(constant.precision == 0.5);
    CHECK(constant.accuracy == 0.5);
    const auto never = confusion_metrics(std::vector<double>{0, 0, 0, 0}, y);
    CHECK(never.degenerate);
    CHECK(never.precision == 0.0);
}

TEST_CASE("auc values") {
    const std::vector<int> y{1, 0, 1, 0};
    CHECK(roc_auc(std::vector<double>{0.9, 0.6, 0.4, 0.1}, y).auc == 0.75);
    CHECK(roc_auc(std::vector<double>{0.9, 0.1, 0.8, 0.2}, y).auc == 1.0);
    CHECK(roc_auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y).auc == 0.5);
    CHECK_THROWS_AS(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), MetricError);
}

TEST_CASE("auc equals the pairwise statistic with ties") {
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.below(199);
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng.below(trial % 2 ? 5 : 1000)) / 10.0;
            y[i] = static_cast<int>(rng.below(2));
        }
        y[0] = 1;
        y[1] = 0;
        CHECK(std::abs(roc_auc(s, y).auc - oracle::mann_whitney_auc(s, y)) <= 1e-9);
    }
}

TEST_CASE("random scores give chance auc") {
    Rng rng(5);
    std::vector<double> s(1000);
    std::vector<int> y(1000);
    for (std::size_t i = 0; i < 1000; ++i) {
        s[i] = rng.uniform();
        y[i] = static_cast<int>(rng.below(2));
    }
    CHECK(std::abs(roc_auc(s, y).auc - 0.5) <= 0.05);
}

TEST_CASE("roc curve shape") {
    const std::vector<double> s{0.9, 0.6, 0.6, 0.1};
    const std::vector<int> y{1, 1, 0, 0};
    const auto roc = roc_auc(s, y);
    REQUIRE(roc.points.size() == 4);
    CHECK(roc.points.front().fpr == 0.0);
    CHECK(roc.points.front().tpr == 0.0);
    CHECK(roc.points.back().fpr == 1.0);
    CHECK(roc.points.back().tpr == 1.0);
    for (std::size_t i = 1; i < roc.points.size(); ++i) {
        CHECK(roc.points[i].fpr >= roc.points[i - 1].fpr);
        CHECK(roc.points[i].tpr >= roc.points[i - 1].tpr);
    }
    const auto path = std::filesystem::temp_directory_path() / "fedmia_roc.csv";
    write_roc_csv(path, roc);
    std::ifstream in(path);
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    CHECK(header == "fpr,tpr,threshold");
    CHECK(first.find("inf") != std::string::npos);
}

TEST_CASE("summaries") {
    const std::vector<double> same{0.73, 0.73, 0.73};
    CHECK(format_summary(summarize(same)) == "0.73 ± 0.00");
    const auto s = summarize(std::vector<double>{0.6, 0.8});
    CHECK(s.mean == doctest::Approx(0.7));
    CHECK(format_summary(s) == "0.70 ± 0.14");

    const std::vector<double> table{0.72, 0.73, 0.74, 0.73, 0.72, 0.74, 0.73, 0.73, 0.72, 0.74};
    const auto t = format_summary(summarize(table));
    CHECK(t.size() == std::string("0.73 ± 0.01").size());
    CHECK(t.rfind("0.73 ± 0.0", 0) == 0);
    CHECK_THROWS_AS(summarize(std::vector<double>{}), MetricError);
}

TEST_CASE("aggregating repetitions") {
    MetricReport a, b;
    a.accuracy = 0.6;
    b.accuracy = 0.8;
    a.auc = 0.7;
    b.auc = 0.9;
    const std::vector<MetricReport> both{a, b};
    const auto agg = aggregate_runs(both);
    CHECK(agg.at("accuracy").mean == doctest::Approx(0.7));
    CHECK(agg.at("auc").mean == doctest::Approx(0.8));
    b.auc.reset();
    const std::vector<MetricReport> partial{a, b};
    CHECK(aggregate_runs(partial).count("auc") == 0);
    const std::vector<MetricReport> single{a};
    CHECK(aggregate_runs(single).at("accuracy").stddev == 0.0);
    CHECK_THROWS_AS(aggregate_runs(std::vector<MetricReport>{}), MetricError);
}

TEST_CASE("report json round trip") {
    auto r = evaluate_binary(std::vector<double>{0.9, 0.2, 0.7}, std::vector<int>{1, 0, 0});
    const auto back = metric_report_from_json(to_json(r));
    CHECK(back.accuracy == r.accuracy);
    CHECK(back.auc == r.auc);
    CHECK(back.tp == r.tp);
    CHECK(back.fp == r.fp);
}

TEST_CASE("input checks") {
    CHECK_THROWS_AS(confusion_metrics(std::vector<double>{0.1}, std::vector<int>{2}), MetricError);
    CHECK_THROWS_AS(confusion_metrics(std::vector<double>{0.1, 0.2}, std::vector<int>{1}), MetricError);
    CHECK_THROWS_AS(confusion_metrics(std::vector<double>{NAN}, std::vector<int>{1}), MetricError);
}

}
