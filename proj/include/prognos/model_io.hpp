// Model persistence. The file is versioned JSON: a human-inspectable header
// (dims, dropout rates, training hyperparameters, normalization stats) plus
// the weights as base64-encoded little-endian 64-bit floats, row-major per
// matrix. Weight round-trips are bit-exact.
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "prognos/cmapss.hpp"
#include "prognos/lstm.hpp"
#include "prognos/training.hpp"

namespace prognos {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline std::string base64_encode(const unsigned char* data, std::size_t n) {
    std::string out;
    out.reserve((n + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= n; i += 3) {
        const unsigned v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
        out += kB64Alphabet[(v >> 18) & 63];
        out += kB64Alphabet[(v >> 12) & 63];
        out += kB64Alphabet[(v >> 6) & 63];
        out += kB64Alphabet[v & 63];
    }
    if (i + 1 == n) {
        const unsigned v = data[i] << 16;
        out += kB64Alphabet[(v >> 18) & 63];
        out += kB64Alphabet[(v >> 12) & 63];
        out += "==";
    } else if (i + 2 == n) {
        const unsigned v = (data[i] << 16) | (data[i + 1] << 8);
        out += kB64Alphabet[(v >> 18) & 63];
        out += kB64Alphabet[(v >> 12) & 63];
        out += kB64Alphabet[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

inline std::vector<unsigned char> base64_decode(const std::string& text) {
    static constexpr auto table = [] {
        std::array<int, 256> t{};
        t.fill(-1);
        for (int k = 0; k < 64; ++k) t[static_cast<unsigned char>(kB64Alphabet[k])] = k;
        return t;
    }();
    std::vector<unsigned char> out;
    out.reserve(text.size() / 4 * 3);
    unsigned acc = 0;
    int bits = 0;
    for (char ch : text) {
        if (ch == '=' || ch == '\n' || ch == '\r') continue;
        const int v = table[static_cast<unsigned char>(ch)];
        if (v < 0) throw std::runtime_error("base64: invalid character");
        acc = (acc << 6) | static_cast<unsigned>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<unsigned char>((acc >> bits) & 0xFF));
        }
    }
    return out;
}

// Doubles as little-endian bytes regardless of host order.
inline std::string encode_doubles(const std::vector<double>& values) {
    std::vector<unsigned char> bytes(values.size() * 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint64_t u = std::bit_cast<std::uint64_t>(values[i]);
        for (int b = 0; b < 8; ++b) bytes[i * 8 + static_cast<std::size_t>(b)] =
            static_cast<unsigned char>((u >> (8 * b)) & 0xFF);
    }
    return base64_encode(bytes.data(), bytes.size());
}

inline std::vector<double> decode_doubles(const std::string& text, std::size_t expected,
                                          const std::string& what) {
    const auto bytes = base64_decode(text);
    if (bytes.size() != expected * 8)
        throw std::runtime_error("model file: " + what + " has " + std::to_string(bytes.size() / 8) +
                                 " values, expected " + std::to_string(expected));
    std::vector<double> out(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        std::uint64_t u = 0;
        for (int b = 7; b >= 0; --b)
            u = (u << 8) | bytes[i * 8 + static_cast<std::size_t>(b)];
        out[i] = std::bit_cast<double>(u);
    }
    return out;
}

}  // namespace detail

// Everything inference needs: weights, the dropout spec they were trained
// with, window/horizon settings, and the normalization fitted on the
// training fleet.
struct ModelFile {
    NetworkParams params;
    TrainConfig config;
    NormStats stats;
};

inline nlohmann::json model_to_json(const ModelFile& model) {
    const TrainConfig& c = model.config;
    nlohmann::json j;
    j["format_version"] = kModelFormatVersion;
    j["dims"] = {{"input", c.dims.input}, {"hidden1", c.dims.hidden1}, {"hidden2", c.dims.hidden2}};
    j["window_length"] = c.window_length;
    j["horizon"] = c.horizon;
    j["dropout"] = {{"layer2_input", c.dropout.layer2_input},
                    {"recurrent", c.dropout.recurrent},
                    {"dense_input", c.dropout.dense_input}};
    j["train"] = {{"validation_fraction", c.validation_fraction},
                  {"learning_rate", c.learning_rate},
                  {"beta1", c.beta1},
                  {"beta2", c.beta2},
                  {"epsilon", c.epsilon},
                  {"batch_size", c.batch_size},
                  {"max_epochs", c.max_epochs},
                  {"patience", c.patience},
                  {"seed", c.seed}};
    nlohmann::json norm;
    norm["per_regime"] = model.stats.per_regime;
    norm["mean"] = model.stats.mean;
    norm["stddev"] = model.stats.stddev;
    if (model.stats.per_regime) {
        nlohmann::json regimes = nlohmann::json::object();
        for (const auto& [key, ms] : model.stats.regimes)
            regimes[key] = {{"mean", ms.first}, {"stddev", ms.second}};
        norm["regimes"] = regimes;
    }
    j["normalization"] = norm;
    j["weights"] = {
        {"layer1",
         {{"w", detail::encode_doubles(model.params.layer1.W.values)},
          {"u", detail::encode_doubles(model.params.layer1.U.values)},
          {"b", detail::encode_doubles(model.params.layer1.b)}}},
        {"layer2",
         {{"w", detail::encode_doubles(model.params.layer2.W.values)},
          {"u", detail::encode_doubles(model.params.layer2.U.values)},
          {"b", detail::encode_doubles(model.params.layer2.b)}}},
        {"dense",
         {{"w", detail::encode_doubles(model.params.dense_w)},
          {"b", detail::encode_doubles({model.params.dense_b})}}},
    };
    return j;
}

inline ModelFile model_from_json(const nlohmann::json& j) {
    if (!j.contains("format_version") || j.at("format_version").get<int>() != kModelFormatVersion)
        throw std::runtime_error("model file: unsupported format_version");
    ModelFile model;
    TrainConfig& c = model.config;
    const auto& dims = j.at("dims");
    c.dims.input = dims.at("input").get<std::size_t>();
    c.dims.hidden1 = dims.at("hidden1").get<std::size_t>();
    c.dims.hidden2 = dims.at("hidden2").get<std::size_t>();
    c.window_length = j.at("window_length").get<int>();
    c.horizon = j.at("horizon").get<int>();
    const auto& drop = j.at("dropout");
    c.dropout.layer2_input = drop.at("layer2_input").get<double>();
    c.dropout.recurrent = drop.at("recurrent").get<double>();
    c.dropout.dense_input = drop.at("dense_input").get<double>();
    const auto& tr = j.at("train");
    c.validation_fraction = tr.at("validation_fraction").get<double>();
    c.learning_rate = tr.at("learning_rate").get<double>();
    c.beta1 = tr.at("beta1").get<double>();
    c.beta2 = tr.at("beta2").get<double>();
    c.epsilon = tr.at("epsilon").get<double>();
    c.batch_size = tr.at("batch_size").get<int>();
    c.max_epochs = tr.at("max_epochs").get<int>();
    c.patience = tr.at("patience").get<int>();
    c.seed = tr.at("seed").get<std::uint64_t>();

    const auto& norm = j.at("normalization");
    model.stats.per_regime = norm.at("per_regime").get<bool>();
    model.stats.mean = norm.at("mean").get<std::vector<double>>();
    model.stats.stddev = norm.at("stddev").get<std::vector<double>>();
    if (model.stats.mean.size() != kNumFeatures || model.stats.stddev.size() != kNumFeatures)
        throw std::runtime_error("model file: normalization stats have wrong feature count");
    if (model.stats.per_regime) {
        for (const auto& [key, ms] : norm.at("regimes").items()) {
            model.stats.regimes[key] = {ms.at("mean").get<std::vector<double>>(),
                                        ms.at("stddev").get<std::vector<double>>()};
        }
    }

    model.params = NetworkParams(c.dims);
    const auto& w = j.at("weights");
    auto load_layer = [](const nlohmann::json& lj, LstmLayerParams& layer, const std::string& name) {
        layer.W.values = detail::decode_doubles(lj.at("w").get<std::string>(),
                                                layer.W.rows * layer.W.cols, name + ".w");
        layer.U.values = detail::decode_doubles(lj.at("u").get<std::string>(),
                                                layer.U.rows * layer.U.cols, name + ".u");
        layer.b = detail::decode_doubles(lj.at("b").get<std::string>(), layer.b.size(), name + ".b");
    };
    load_layer(w.at("layer1"), model.params.layer1, "layer1");
    load_layer(w.at("layer2"), model.params.layer2, "layer2");
    model.params.dense_w = detail::decode_doubles(w.at("dense").at("w").get<std::string>(),
                                                  c.dims.hidden2, "dense.w");
    model.params.dense_b =
        detail::decode_doubles(w.at("dense").at("b").get<std::string>(), 1, "dense.b")[0];
    return model;
}

inline void save_model(const ModelFile& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << model_to_json(model).dump(2) << '\n';
}

inline ModelFile load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("model file " + path + " is not valid JSON: " + e.what());
    }
    try {
        return model_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("model file " + path + " is malformed: " + e.what());
    }
}

}  // namespace prognos
