#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedmia/matrix.hpp"
#include "fedmia/rng.hpp"

namespace fedmia {

using RecordId = std::int64_t;

/// Feature matrix plus integer class labels. Record ids follow load order and
/// travel with rows through every subset so provenance can be re-derived.
struct LabeledDataset {
    Matrix features;
    std::vector<int> labels;
    std::vector<RecordId> ids;
    std::size_t num_classes = 0;
    std::optional<std::size_t> attribute_column;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dim() const noexcept { return features.cols; }
    bool empty() const noexcept { return labels.empty(); }

    /// Throws DatasetError if rows/labels/ids disagree, ids repeat, a label is
    /// outside [0, num_classes) or a feature is non-finite.
    void validate() const;

    LabeledDataset subset(std::span<const std::size_t> rows) const;
    /// Index of a record id in this dataset, if present.
    std::optional<std::size_t> find(RecordId id) const;
};

/// Builds a dataset with ids 0..n-1 and num_classes = max label + 1.
LabeledDataset make_dataset(Matrix features, std::vector<int> labels);

/// Parses a numeric CSV. `label_column` may be negative to count from the end.
LabeledDataset load_csv(const std::filesystem::path& path, int label_column, bool has_header);

struct SplitPlan {
    std::size_t n_data_owners = 3;
    std::size_t do_train_size = 100;
    std::size_t do_test_size = 0;
    std::size_t shadow_member_size = 0;
    std::size_t shadow_nonmember_size = 0;
    std::size_t eval_nonmember_size = 0;

    std::size_t total() const noexcept {
        return n_data_owners * (do_train_size + do_test_size) + shadow_member_size + shadow_nonmember_size +
               eval_nonmember_size;
    }
};

struct Splits {
    std::vector<LabeledDataset> do_train;
    std::vector<LabeledDataset> do_test;
    LabeledDataset shadow_members;
    LabeledDataset shadow_nonmembers;
    LabeledDataset eval_nonmembers;
    LabeledDataset reserve;

    /// Split name -> record ids.
    std::map<std::string, std::vector<RecordId>> manifest() const;
};

/// Uniform, disjoint sampling of the plan's splits. Leftover records form the reserve.
Splits partition(const LabeledDataset& dataset, const SplitPlan& plan, Rng& rng);

nlohmann::json manifest_to_json(const Splits& splits);

/// Each class gets a random binary prototype of width d. A record copies its
/// class prototype and, with probability 1 - class_separation per feature,
/// replaces the bit with a fresh fair coin. Labels cycle through the classes
/// before shuffling, so class counts differ by at most one.
LabeledDataset synth_classification(std::size_t n, std::size_t d, std::size_t k, double class_separation,
                                    Rng& rng);

struct KMeansBinarization {
    std::vector<int> labels;
    double low_centroid = 0.0;
    double high_centroid = 0.0;
    std::size_t iterations = 0;
};

/// Two-cluster Lloyd's algorithm in one dimension, initialized at min and max.
KMeansBinarization kmeans_binarize(std::span<const double> values);

/// Replaces `column` with its k-means cluster id and marks it as the attribute column.
KMeansBinarization binarize_attribute(LabeledDataset& dataset, std::size_t column);

/// Z-scores every column except `skip`. Constant columns are centered only.
void standardize_columns(LabeledDataset& dataset, std::optional<std::size_t> skip);

} // namespace fedmia
