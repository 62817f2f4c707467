#include "fedmia/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "fedmia/errors.hpp"

namespace fedmia {

namespace {

constexpr double kProbFloor = 1e-12;

// Four independent accumulators; the summation order is fixed so results are
// reproducible while still letting the compiler pipeline the adds.
double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double activate(Activation a, double z) {
    switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
    case Activation::identity: return z;
    }
    return z;
}

// Derivative expressed through the post-activation value.
double activation_slope(Activation a, double out) {
    switch (a) {
    case Activation::relu: return out > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - out * out;
    case Activation::identity: return 1.0;
    }
    return 1.0;
}

void softmax_inplace(std::span<double> v) {
    const double m = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double& x : v) {
        x = std::exp(x - m);
        sum += x;
    }
    for (double& x : v) x /= sum;
}

void check_class(int y, std::size_t k) {
    if (y < 0 || static_cast<std::size_t>(y) >= k)
        throw LabelError("class label " + std::to_string(y) + " outside [0, " + std::to_string(k) + ")");
}

// dL/d(pre-activation) of the final layer for one sample.
std::vector<double> output_delta(const MlpModel& model, std::span<const double> last_activation,
                                 std::span<const double> outputs, const Target& y) {
    const std::size_t k = outputs.size();
    const Activation act = model.layers().back().activation;
    std::vector<double> delta(k);
    if (model.is_classifier()) {
        const int* cls = std::get_if<int>(&y);
        if (cls == nullptr) throw LabelError("classifier requires an integer class target");
        check_class(*cls, k);
        for (std::size_t j = 0; j < k; ++j) delta[j] = outputs[j];
        delta[static_cast<std::size_t>(*cls)] -= 1.0;
    } else {
        const auto* t = std::get_if<std::vector<double>>(&y);
        if (t == nullptr || t->size() != k) throw LabelError("regression target width mismatch");
        for (std::size_t j = 0; j < k; ++j) {
            if (!std::isfinite((*t)[j])) throw LabelError("non-finite regression target");
            delta[j] = 2.0 * (outputs[j] - (*t)[j]) / static_cast<double>(k);
        }
    }
    for (std::size_t j = 0; j < k; ++j) delta[j] *= activation_slope(act, last_activation[j]);
    return delta;
}

// Accumulates delta[r] (x) a[r] into gw and delta into gb.
void accumulate_layer(const Matrix& delta, const Matrix& input, Matrix& gw, std::vector<double>& gb) {
    for (std::size_t r = 0; r < delta.rows; ++r) {
        const double* a = input.row(r).data();
        for (std::size_t o = 0; o < delta.cols; ++o) {
            const double d = delta(r, o);
            gb[o] += d;
            if (d != 0.0) axpy(d, a, gw.row(o).data(), input.cols);
        }
    }
}

// Propagates output deltas through every layer. `delta` holds dL/dz for the
// final layer, one row per sample, already scaled for the reduction.
GradientBundle backprop(const MlpModel& model, const ForwardTrace& trace, Matrix delta) {
    const auto& layers = model.layers();
    GradientBundle g = GradientBundle::zeros_like(model);
    for (std::size_t li = layers.size(); li-- > 0;) {
        const Matrix& input = trace.activations[li];
        accumulate_layer(delta, input, g.weights[li], g.biases[li]);
        if (li == 0) break;
        const DenseLayer& layer = layers[li];
        const Activation prev_act = layers[li - 1].activation;
        Matrix next(delta.rows, layer.in_width());
        for (std::size_t r = 0; r < delta.rows; ++r) {
            double* dst = next.row(r).data();
            for (std::size_t o = 0; o < delta.cols; ++o) {
                const double d = delta(r, o);
                if (d != 0.0) axpy(d, layer.weights.row(o).data(), dst, layer.in_width());
            }
            const auto a = input.row(r);
            for (std::size_t i = 0; i < next.cols; ++i) dst[i] *= activation_slope(prev_act, a[i]);
        }
        delta = std::move(next);
    }
    return g;
}

} // namespace

std::string_view to_string(Activation a) {
    switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
    }
    return "identity";
}

std::string_view to_string(LossKind k) {
    return k == LossKind::softmax_cross_entropy ? "softmax_cross_entropy" : "mean_squared_error";
}

Activation parse_activation(std::string_view s) {
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    if (s == "identity") return Activation::identity;
    throw ConfigError("unknown activation '" + std::string(s) + "'");
}

LossKind parse_loss_kind(std::string_view s) {
    if (s == "softmax_cross_entropy") return LossKind::softmax_cross_entropy;
    if (s == "mean_squared_error") return LossKind::mean_squared_error;
    throw ConfigError("unknown loss kind '" + std::string(s) + "'");
}

MlpModel::MlpModel(std::vector<DenseLayer> layers, LossKind loss) : layers_(std::move(layers)), loss_(loss) {
    check_shape();
}

MlpModel MlpModel::create(std::span<const std::size_t> widths, Activation hidden, LossKind loss, Rng& rng) {
    if (widths.size() < 2) throw ShapeError("a model needs at least an input and an output width");
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const std::size_t in = widths[i], out = widths[i + 1];
        if (in == 0 || out == 0) throw ShapeError("layer widths must be positive");
        DenseLayer layer{Matrix(out, in), std::vector<double>(out),
                         i + 2 == widths.size() ? Activation::identity : hidden};
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        for (double& w : layer.weights.data) w = rng.uniform(-bound, bound);
        for (double& b : layer.bias) b = rng.uniform(-bound, bound);
        layers.push_back(std::move(layer));
    }
    return MlpModel(std::move(layers), loss);
}

MlpModel MlpModel::zeros(std::span<const std::size_t> widths, Activation hidden, LossKind loss) {
    if (widths.size() < 2) throw ShapeError("a model needs at least an input and an output width");
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i)
        layers.push_back({Matrix(widths[i + 1], widths[i]), std::vector<double>(widths[i + 1]),
                          i + 2 == widths.size() ? Activation::identity : hidden});
    return MlpModel(std::move(layers), loss);
}

std::size_t MlpModel::input_width() const noexcept { return layers_.empty() ? 0 : layers_.front().in_width(); }
std::size_t MlpModel::output_width() const noexcept { return layers_.empty() ? 0 : layers_.back().out_width(); }

std::vector<std::size_t> MlpModel::widths() const {
    std::vector<std::size_t> w;
    if (layers_.empty()) return w;
    w.push_back(input_width());
    for (const auto& l : layers_) w.push_back(l.out_width());
    return w;
}

std::size_t MlpModel::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
}

void MlpModel::check_shape() const {
    if (layers_.empty()) throw ShapeError("model has no layers");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        if (l.weights.rows == 0 || l.weights.cols == 0 || l.weights.data.size() != l.weights.rows * l.weights.cols)
            throw ShapeError("layer " + std::to_string(i) + " has malformed weights");
        if (l.bias.size() != l.out_width())
            throw ShapeError("layer " + std::to_string(i) + " bias width mismatch");
        if (i > 0 && layers_[i - 1].out_width() != l.in_width())
            throw ShapeError("layer " + std::to_string(i) + " input width " + std::to_string(l.in_width()) +
                             " does not match previous output width " +
                             std::to_string(layers_[i - 1].out_width()));
    }
}

bool MlpModel::same_architecture(const MlpModel& other) const noexcept {
    if (loss_ != other.loss_ || layers_.size() != other.layers_.size()) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& a = layers_[i];
        const auto& b = other.layers_[i];
        if (a.in_width() != b.in_width() || a.out_width() != b.out_width() || a.activation != b.activation)
            return false;
    }
    return true;
}

std::uint64_t parameter_hash(const MlpModel& model) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& l : model.layers()) {
        for (double w : l.weights.data) mix(w);
        for (double b : l.bias) mix(b);
    }
    return h;
}

ForwardTrace forward(const MlpModel& model, const Matrix& inputs) {
    if (inputs.cols != model.input_width())
        throw ShapeError("input width " + std::to_string(inputs.cols) + " does not match model input width " +
                         std::to_string(model.input_width()));
    for (double v : inputs.data)
        if (!std::isfinite(v)) throw InputError("non-finite input feature");

    ForwardTrace trace;
    trace.activations.reserve(model.layers().size() + 1);
    trace.activations.push_back(inputs);
    for (const auto& layer : model.layers()) {
        const Matrix& in = trace.activations.back();
        Matrix out(in.rows, layer.out_width());
        for (std::size_t r = 0; r < in.rows; ++r) {
            const double* x = in.row(r).data();
            double* y = out.row(r).data();
            for (std::size_t o = 0; o < layer.out_width(); ++o)
                y[o] = activate(layer.activation, layer.bias[o] + dot(layer.weights.row(o).data(), x, in.cols));
        }
        trace.activations.push_back(std::move(out));
    }
    trace.outputs = trace.activations.back();
    if (model.is_classifier())
        for (std::size_t r = 0; r < trace.outputs.rows; ++r) softmax_inplace(trace.outputs.row(r));
    return trace;
}

std::vector<double> predict(const MlpModel& model, std::span<const double> x) {
    Matrix in(1, x.size());
    std::copy(x.begin(), x.end(), in.data.begin());
    return forward(model, in).outputs.data;
}

double loss(const MlpModel& model, const Matrix& outputs, std::span<const Target> targets) {
    if (outputs.rows != targets.size()) throw ShapeError("outputs/targets row count mismatch");
    if (outputs.rows == 0) throw ShapeError("empty batch");
    double total = 0.0;
    for (std::size_t r = 0; r < outputs.rows; ++r) {
        const auto out = outputs.row(r);
        if (model.is_classifier()) {
            const int* cls = std::get_if<int>(&targets[r]);
            if (cls == nullptr) throw LabelError("classifier requires an integer class target");
            check_class(*cls, outputs.cols);
            total += -std::log(std::clamp(out[static_cast<std::size_t>(*cls)], kProbFloor, 1.0));
        } else {
            const auto* t = std::get_if<std::vector<double>>(&targets[r]);
            if (t == nullptr || t->size() != outputs.cols) throw LabelError("regression target width mismatch");
            double s = 0.0;
            for (std::size_t j = 0; j < outputs.cols; ++j) {
                if (!std::isfinite((*t)[j])) throw LabelError("non-finite regression target");
                const double e = out[j] - (*t)[j];
                s += e * e;
            }
            total += s / static_cast<double>(outputs.cols);
        }
    }
    return total / static_cast<double>(outputs.rows);
}

double loss(const MlpModel& model, const Matrix& outputs, std::span<const int> labels) {
    std::vector<Target> t(labels.begin(), labels.end());
    return loss(model, outputs, t);
}

GradientBundle GradientBundle::zeros_like(const MlpModel& model) {
    GradientBundle g;
    for (const auto& l : model.layers()) {
        g.weights.emplace_back(l.out_width(), l.in_width());
        g.biases.emplace_back(l.out_width(), 0.0);
    }
    return g;
}

GradientBundle backward(const MlpModel& model, std::span<const double> x, const Target& y) {
    Matrix in(1, x.size());
    std::copy(x.begin(), x.end(), in.data.begin());
    const ForwardTrace trace = forward(model, in);
    const auto delta = output_delta(model, trace.activations.back().row(0), trace.outputs.row(0), y);
    Matrix d(1, delta.size());
    std::copy(delta.begin(), delta.end(), d.data.begin());
    return backprop(model, trace, std::move(d));
}

GradientBundle backward_batch(const MlpModel& model, const ForwardTrace& trace, std::span<const int> labels) {
    const std::size_t n = trace.outputs.rows;
    if (labels.size() != n) throw ShapeError("labels/batch size mismatch");
    if (n == 0) throw ShapeError("empty batch");
    Matrix delta(n, trace.outputs.cols);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto d = output_delta(model, trace.activations.back().row(r), trace.outputs.row(r), Target{labels[r]});
        for (std::size_t j = 0; j < d.size(); ++j) delta(r, j) = d[j] * scale;
    }
    return backprop(model, trace, std::move(delta));
}

LastLayerGradient last_layer_gradient(const MlpModel& model, std::span<const double> x, const Target& y) {
    Matrix in(1, x.size());
    std::copy(x.begin(), x.end(), in.data.begin());
    const ForwardTrace trace = forward(model, in);
    const auto delta = output_delta(model, trace.activations.back().row(0), trace.outputs.row(0), y);
    Matrix d(1, delta.size());
    std::copy(delta.begin(), delta.end(), d.data.begin());
    const std::size_t last = model.layers().size() - 1;
    LastLayerGradient g{Matrix(model.output_width(), model.layers()[last].in_width()),
                        std::vector<double>(model.output_width(), 0.0)};
    accumulate_layer(d, trace.activations[last], g.weights, g.bias);
    return g;
}

AdamState::AdamState(const MlpModel& model, AdamHyper h)
    : hyper(h), first_moment(GradientBundle::zeros_like(model)), second_moment(GradientBundle::zeros_like(model)) {}

void adam_step(MlpModel& model, const GradientBundle& grads, AdamState& state) {
    auto& layers = model.layers();
    if (grads.weights.size() != layers.size() || state.first_moment.weights.size() != layers.size())
        throw ShapeError("gradient bundle does not match model depth");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (grads.weights[i].rows != layers[i].weights.rows || grads.weights[i].cols != layers[i].weights.cols ||
            grads.biases[i].size() != layers[i].bias.size() ||
            state.first_moment.weights[i].size() != layers[i].weights.size() ||
            state.first_moment.biases[i].size() != layers[i].bias.size())
            throw ShapeError("gradient bundle shape mismatch at layer " + std::to_string(i));
    }

    const AdamHyper& h = state.hyper;
    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double c1 = 1.0 - std::pow(h.beta1, t);
    const double c2 = 1.0 - std::pow(h.beta2, t);

    auto update = [&](std::span<double> param, std::span<const double> grad, std::span<double> m,
                      std::span<double> v) {
        for (std::size_t j = 0; j < param.size(); ++j) {
            const double g = grad[j] + h.weight_decay * param[j];
            m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g;
            v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g * g;
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            param[j] -= h.learning_rate * mhat / (std::sqrt(vhat) + h.epsilon);
        }
    };
    for (std::size_t i = 0; i < layers.size(); ++i) {
        update(layers[i].weights.data, grads.weights[i].data, state.first_moment.weights[i].data,
               state.second_moment.weights[i].data);
        update(layers[i].bias, grads.biases[i], state.first_moment.biases[i], state.second_moment.biases[i]);
    }
}

TrainStats train_local(MlpModel& model, const Matrix& features, std::span<const int> labels,
                       const TrainOptions& options, Rng& rng) {
    if (features.rows == 0) throw ConfigError("cannot train on an empty dataset");
    if (labels.size() != features.rows) throw ShapeError("features/labels row count mismatch");
    if (options.epochs < 0) throw ConfigError("epochs must be >= 0");
    if (options.batch_size == 0) throw ConfigError("batch_size must be >= 1");

    TrainStats stats;
    if (options.epochs == 0) return stats;

    AdamState state(model, options.adam);
    const std::size_t n = features.rows;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += options.batch_size) {
            const std::size_t end = std::min(n, start + options.batch_size);
            Matrix batch(end - start, features.cols);
            std::vector<int> batch_labels(end - start);
            for (std::size_t r = start; r < end; ++r) {
                const auto src = features.row(order[r]);
                std::copy(src.begin(), src.end(), batch.row(r - start).begin());
                batch_labels[r - start] = labels[order[r]];
            }
            const ForwardTrace trace = forward(model, batch);
            epoch_loss += loss(model, trace.outputs, batch_labels) * static_cast<double>(end - start);
            adam_step(model, backward_batch(model, trace, batch_labels), state);
            ++stats.steps;
        }
        stats.final_epoch_loss = epoch_loss / static_cast<double>(n);
    }
    return stats;
}

double accuracy(const MlpModel& model, const Matrix& features, std::span<const int> labels) {
    const ForwardTrace trace = forward(model, features);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < trace.outputs.rows; ++r) {
        const auto row = trace.outputs.row(r);
        const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
        if (best == labels[r]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(trace.outputs.rows);
}

} // namespace fedmia
