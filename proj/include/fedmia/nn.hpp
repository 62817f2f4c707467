#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fedmia/matrix.hpp"
#include "fedmia/rng.hpp"

namespace fedmia {

enum class Activation { relu, tanh, identity };
enum class LossKind { softmax_cross_entropy, mean_squared_error };

std::string_view to_string(Activation a);
std::string_view to_string(LossKind k);
Activation parse_activation(std::string_view s);
LossKind parse_loss_kind(std::string_view s);

struct DenseLayer {
    Matrix weights;  // out_width x in_width
    std::vector<double> bias;
    Activation activation = Activation::identity;

    std::size_t in_width() const noexcept { return weights.cols; }
    std::size_t out_width() const noexcept { return weights.rows; }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Feed-forward network. For softmax-cross-entropy models the final layer
/// produces logits and the softmax is part of the output transform.
class MlpModel {
public:
    MlpModel() = default;
    MlpModel(std::vector<DenseLayer> layers, LossKind loss);

    /// Builds a model with widths[0] inputs and widths.back() outputs. Hidden
    /// layers use `hidden`, the output layer is identity. Weights and biases are
    /// drawn uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)].
    static MlpModel create(std::span<const std::size_t> widths, Activation hidden, LossKind loss,
                           Rng& rng);
    /// All parameters zero.
    static MlpModel zeros(std::span<const std::size_t> widths, Activation hidden, LossKind loss);

    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<DenseLayer>& layers() noexcept { return layers_; }
    LossKind loss_kind() const noexcept { return loss_; }
    bool is_classifier() const noexcept { return loss_ == LossKind::softmax_cross_entropy; }

    std::size_t input_width() const noexcept;
    std::size_t output_width() const noexcept;
    std::vector<std::size_t> widths() const;
    std::size_t parameter_count() const noexcept;

    /// Throws ShapeError when consecutive layer widths disagree.
    void check_shape() const;
    bool same_architecture(const MlpModel& other) const noexcept;

    friend bool operator==(const MlpModel&, const MlpModel&) = default;

private:
    std::vector<DenseLayer> layers_;
    LossKind loss_ = LossKind::softmax_cross_entropy;
};

/// FNV-1a over the raw parameter bits, in layer order.
std::uint64_t parameter_hash(const MlpModel& model);

/// activations[0] is the input batch, activations[i + 1] the post-activation
/// output of layer i. `outputs` are softmax probabilities for classifiers and
/// equal to the last activation otherwise.
struct ForwardTrace {
    std::vector<Matrix> activations;
    Matrix outputs;
};

ForwardTrace forward(const MlpModel& model, const Matrix& inputs);
/// Single-row convenience wrapper; returns the output vector.
std::vector<double> predict(const MlpModel& model, std::span<const double> x);

/// Class index for classifiers, target vector for regression models.
using Target = std::variant<int, std::vector<double>>;

/// Mean per-sample loss. Cross-entropy uses ln(max(p_y, 1e-12)); squared error
/// is the mean over output dimensions.
double loss(const MlpModel& model, const Matrix& outputs, std::span<const Target> targets);
double loss(const MlpModel& model, const Matrix& outputs, std::span<const int> labels);

struct GradientBundle {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    static GradientBundle zeros_like(const MlpModel& model);
    friend bool operator==(const GradientBundle&, const GradientBundle&) = default;
};

/// Exact gradient of the per-sample loss at (x, y).
GradientBundle backward(const MlpModel& model, std::span<const double> x, const Target& y);
/// Gradient of the mean loss over a batch, reusing a forward trace.
GradientBundle backward_batch(const MlpModel& model, const ForwardTrace& trace,
                              std::span<const int> labels);

struct LastLayerGradient {
    Matrix weights;
    std::vector<double> bias;
};

/// Final-layer slice of backward(); skips the earlier layers.
LastLayerGradient last_layer_gradient(const MlpModel& model, std::span<const double> x,
                                      const Target& y);

struct AdamHyper {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
};

struct AdamState {
    AdamHyper hyper;
    std::uint64_t step_count = 0;
    GradientBundle first_moment;
    GradientBundle second_moment;

    AdamState() = default;
    AdamState(const MlpModel& model, AdamHyper h);
};

/// Bias-corrected Adam update in place. Weight decay, when non-zero, is added
/// to the gradient as an L2 term before the moment updates.
void adam_step(MlpModel& model, const GradientBundle& grads, AdamState& state);

struct TrainOptions {
    int epochs = 5;
    std::size_t batch_size = 64;
    AdamHyper adam;
};

struct TrainStats {
    std::uint64_t steps = 0;
    double final_epoch_loss = 0.0;
};

/// Mini-batch Adam on (features, labels), reshuffled each epoch from `rng`.
/// A fresh optimizer state is created per call.
TrainStats train_local(MlpModel& model, const Matrix& features, std::span<const int> labels,
                       const TrainOptions& options, Rng& rng);

double accuracy(const MlpModel& model, const Matrix& features, std::span<const int> labels);

} // namespace fedmia
