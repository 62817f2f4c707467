#include "fedmia/serialize.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "fedmia/errors.hpp"

namespace fedmia {

std::string encode_double(double v) {
    if (!std::isfinite(v)) throw NumericError("cannot encode a non-finite parameter");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double decode_double(const std::string& s) {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE || !std::isfinite(v))
        throw InputError("malformed encoded double '" + s + "'");
    return v;
}

namespace {

nlohmann::json encode_array(std::span<const double> values) {
    auto arr = nlohmann::json::array();
    for (double v : values) arr.push_back(encode_double(v));
    return arr;
}

std::vector<double> decode_array(const nlohmann::json& arr, std::size_t expected, const char* what) {
    if (!arr.is_array() || arr.size() != expected)
        throw ShapeError(std::string("checkpoint ") + what + " has wrong length");
    std::vector<double> out;
    out.reserve(expected);
    for (const auto& v : arr) out.push_back(decode_double(v.get<std::string>()));
    return out;
}

} // namespace

nlohmann::json model_to_json(const MlpModel& model) {
    nlohmann::json doc;
    doc["format"] = "fedmia-mlp";
    doc["version"] = 1;
    doc["loss"] = std::string(to_string(model.loss_kind()));
    doc["widths"] = model.widths();
    auto layers = nlohmann::json::array();
    for (const auto& l : model.layers()) {
        layers.push_back({{"activation", std::string(to_string(l.activation))},
                          {"weights", encode_array(l.weights.data)},
                          {"bias", encode_array(l.bias)}});
    }
    doc["layers"] = std::move(layers);
    return doc;
}

MlpModel model_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format") != "fedmia-mlp") throw InputError("not a fedmia model checkpoint");
        const auto widths = doc.at("widths").get<std::vector<std::size_t>>();
        const auto& layers_doc = doc.at("layers");
        if (widths.size() < 2 || layers_doc.size() + 1 != widths.size())
            throw ShapeError("checkpoint widths do not match layer count");
        std::vector<DenseLayer> layers;
        for (std::size_t i = 0; i < layers_doc.size(); ++i) {
            const auto& ld = layers_doc[i];
            DenseLayer layer;
            layer.activation = parse_activation(ld.at("activation").get<std::string>());
            layer.weights = Matrix(widths[i + 1], widths[i]);
            layer.weights.data = decode_array(ld.at("weights"), widths[i + 1] * widths[i], "weights");
            layer.bias = decode_array(ld.at("bias"), widths[i + 1], "bias");
            layers.push_back(std::move(layer));
        }
        return MlpModel(std::move(layers), parse_loss_kind(doc.at("loss").get<std::string>()));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed model checkpoint: ") + e.what());
    }
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << model_to_json(model).dump() << '\n';
}

MlpModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed model checkpoint: ") + e.what());
    }
    return model_from_json(doc);
}

} // namespace fedmia
