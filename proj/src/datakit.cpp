#include "fedmia/datakit.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "fedmia/errors.hpp"

namespace fedmia {

void LabeledDataset::validate() const {
    if (features.rows != labels.size()) throw DatasetError("feature rows and label count differ");
    if (ids.size() != labels.size()) throw DatasetError("record id count and label count differ");
    std::set<RecordId> seen;
    for (RecordId id : ids)
        if (!seen.insert(id).second) throw DatasetError("duplicate record id " + std::to_string(id));
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes)
            throw DatasetError("label " + std::to_string(y) + " outside [0, " + std::to_string(num_classes) + ")");
    for (double v : features.data)
        if (!std::isfinite(v)) throw DatasetError("non-finite feature value");
    if (attribute_column && *attribute_column >= features.cols) throw DatasetError("attribute column out of range");
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
    LabeledDataset out;
    out.features = Matrix(rows.size(), features.cols);
    out.num_classes = num_classes;
    out.attribute_column = attribute_column;
    out.labels.reserve(rows.size());
    out.ids.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = features.row(rows[i]);
        std::copy(src.begin(), src.end(), out.features.row(i).begin());
        out.labels.push_back(labels[rows[i]]);
        out.ids.push_back(ids[rows[i]]);
    }
    return out;
}

std::optional<std::size_t> LabeledDataset::find(RecordId id) const {
    const auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) return std::nullopt;
    return static_cast<std::size_t>(it - ids.begin());
}

LabeledDataset make_dataset(Matrix features, std::vector<int> labels) {
    LabeledDataset ds;
    ds.features = std::move(features);
    ds.labels = std::move(labels);
    ds.ids.resize(ds.labels.size());
    for (std::size_t i = 0; i < ds.ids.size(); ++i) ds.ids[i] = static_cast<RecordId>(i);
    int max_label = -1;
    for (int y : ds.labels) max_label = std::max(max_label, y);
    ds.num_classes = static_cast<std::size_t>(max_label + 1);
    ds.validate();
    return ds;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_number(const std::string& cell, std::size_t row) {
    if (cell.empty()) throw ParseError("empty cell", row);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size() || errno == ERANGE || !std::isfinite(v))
        throw ParseError("unparsable cell '" + cell + "'", row);
    return v;
}

} // namespace

LabeledDataset load_csv(const std::filesystem::path& path, int label_column, bool has_header) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::optional<std::size_t> width;
    std::size_t label_index = 0;
    std::string line;
    std::size_t row = 0;
    bool header_pending = has_header;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (!width) {
            width = cells.size();
            if (*width < 2) throw ParseError("need at least one feature and a label column", row);
            const long idx = label_column < 0 ? static_cast<long>(*width) + label_column : label_column;
            if (idx < 0 || idx >= static_cast<long>(*width)) throw ParseError("label column out of range", row);
            label_index = static_cast<std::size_t>(idx);
        }
        if (cells.size() != *width)
            throw ParseError("ragged row: expected " + std::to_string(*width) + " cells, got " +
                                 std::to_string(cells.size()),
                             row);
        if (header_pending) {
            header_pending = false;
            continue;
        }
        std::vector<double> feats;
        feats.reserve(*width - 1);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const double v = parse_number(cells[c], row);
            if (c == label_index) {
                if (v < 0 || v != std::floor(v)) throw ParseError("label must be a non-negative integer", row);
                labels.push_back(static_cast<int>(v));
            } else {
                feats.push_back(v);
            }
        }
        rows.push_back(std::move(feats));
    }
    if (rows.empty()) throw InputError("no data rows in " + path.string());

    Matrix features(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), features.row(r).begin());
    return make_dataset(std::move(features), std::move(labels));
}

std::map<std::string, std::vector<RecordId>> Splits::manifest() const {
    std::map<std::string, std::vector<RecordId>> m;
    for (std::size_t i = 0; i < do_train.size(); ++i) m["do" + std::to_string(i) + "_train"] = do_train[i].ids;
    for (std::size_t i = 0; i < do_test.size(); ++i) m["do" + std::to_string(i) + "_test"] = do_test[i].ids;
    m["shadow_members"] = shadow_members.ids;
    m["shadow_nonmembers"] = shadow_nonmembers.ids;
    m["eval_nonmembers"] = eval_nonmembers.ids;
    m["reserve"] = reserve.ids;
    return m;
}

nlohmann::json manifest_to_json(const Splits& splits) {
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& [name, ids] : splits.manifest()) doc[name] = ids;
    return doc;
}

Splits partition(const LabeledDataset& dataset, const SplitPlan& plan, Rng& rng) {
    if (plan.n_data_owners == 0 || plan.do_train_size == 0)
        throw ConfigError("split plan needs at least one data owner with training data");
    if (plan.total() > dataset.size())
        throw ConfigError("split plan requests " + std::to_string(plan.total()) + " records but dataset has " +
                          std::to_string(dataset.size()));

    const auto order = rng.permutation(dataset.size());
    std::size_t cursor = 0;
    auto take = [&](std::size_t count) {
        std::span<const std::size_t> rows(order.data() + cursor, count);
        cursor += count;
        return dataset.subset(rows);
    };

    Splits s;
    for (std::size_t i = 0; i < plan.n_data_owners; ++i) s.do_train.push_back(take(plan.do_train_size));
    for (std::size_t i = 0; i < plan.n_data_owners; ++i) s.do_test.push_back(take(plan.do_test_size));
    s.shadow_members = take(plan.shadow_member_size);
    s.shadow_nonmembers = take(plan.shadow_nonmember_size);
    s.eval_nonmembers = take(plan.eval_nonmember_size);
    s.reserve = take(dataset.size() - cursor);
    return s;
}

LabeledDataset synth_classification(std::size_t n, std::size_t d, std::size_t k, double class_separation, Rng& rng) {
    if (n == 0 || d == 0 || k == 0) throw ConfigError("synthetic dataset needs n, d, k >= 1");
    if (k > n) throw ConfigError("more classes than records");
    if (!(class_separation >= 0.0 && class_separation <= 1.0))
        throw ConfigError("class_separation must lie in [0, 1]");

    Matrix prototypes(k, d);
    for (double& v : prototypes.data) v = rng.bernoulli(0.5) ? 1.0 : 0.0;

    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % k);
    rng.shuffle(labels);

    const double noise = 1.0 - class_separation;
    Matrix features(n, d);
    for (std::size_t r = 0; r < n; ++r) {
        const auto proto = prototypes.row(static_cast<std::size_t>(labels[r]));
        auto row = features.row(r);
        for (std::size_t c = 0; c < d; ++c)
            row[c] = rng.bernoulli(noise) ? (rng.bernoulli(0.5) ? 1.0 : 0.0) : proto[c];
    }
    LabeledDataset ds = make_dataset(std::move(features), std::move(labels));
    ds.num_classes = k;
    return ds;
}

KMeansBinarization kmeans_binarize(std::span<const double> values) {
    if (values.empty()) throw InputError("k-means needs at least two distinct values");
    for (double v : values)
        if (!std::isfinite(v)) throw InputError("non-finite value in k-means input");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (*lo == *hi) throw InputError("k-means input is constant");

    KMeansBinarization out;
    out.low_centroid = *lo;
    out.high_centroid = *hi;
    out.labels.assign(values.size(), -1);
    for (;;) {
        ++out.iterations;
        bool changed = false;
        double sum[2] = {0.0, 0.0};
        std::size_t count[2] = {0, 0};
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double v = values[i];
            const int label = std::abs(v - out.high_centroid) < std::abs(v - out.low_centroid) ? 1 : 0;
            if (label != out.labels[i]) changed = true;
            out.labels[i] = label;
            sum[label] += v;
            count[label] += 1;
        }
        if (!changed) break;
        // Both extremes stay closest to their own initial centroid's side, so
        // neither cluster can empty out in one dimension.
        out.low_centroid = sum[0] / static_cast<double>(count[0]);
        out.high_centroid = sum[1] / static_cast<double>(count[1]);
    }
    return out;
}

KMeansBinarization binarize_attribute(LabeledDataset& dataset, std::size_t column) {
    if (column >= dataset.dim()) throw ConfigError("attribute column out of range");
    std::vector<double> values(dataset.size());
    for (std::size_t r = 0; r < dataset.size(); ++r) values[r] = dataset.features(r, column);
    auto km = kmeans_binarize(values);
    for (std::size_t r = 0; r < dataset.size(); ++r) dataset.features(r, column) = km.labels[r];
    dataset.attribute_column = column;
    return km;
}

void standardize_columns(LabeledDataset& dataset, std::optional<std::size_t> skip) {
    const std::size_t n = dataset.size();
    if (n == 0) return;
    for (std::size_t c = 0; c < dataset.dim(); ++c) {
        if (skip && *skip == c) continue;
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) mean += dataset.features(r, c);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double e = dataset.features(r, c) - mean;
            var += e * e;
        }
        const double sd = std::sqrt(var / static_cast<double>(n));
        for (std::size_t r = 0; r < n; ++r) {
            double& v = dataset.features(r, c);
            v = sd > 0.0 ? (v - mean) / sd : v - mean;
        }
    }
}

} // namespace fedmia
