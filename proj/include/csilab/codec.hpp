// SPDX-License-Identifier: Apache-2.0
//
// csilab: learned CSI compression and feedback laboratory
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef CSILAB_CODEC_HPP
#define CSILAB_CODEC_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "csilab/channel_gen.hpp"
#include "csilab/dataset.hpp"
#include "csilab/entropy_model.hpp"
#include "csilab/latent.hpp"
#include "csilab/nn.hpp"

namespace csilab {

/// One convolutional stage: feature count, kernel, and the spatial factor
/// (downsampling in the encoder, upsampling in the decoder).
struct ConvLayerSpec {
    int features = 1;
    int kernel_h = 3;
    int kernel_w = 3;
    int factor_h = 1;
    int factor_w = 1;

    bool operator==(const ConvLayerSpec&) const = default;
};

struct CodecConfig {
    int input_channels = 2;  // real and imaginary plane per UE antenna
    std::vector<ConvLayerSpec> encoder_layers;
    std::vector<ConvLayerSpec> decoder_layers;
    int residual_block_count = 2;
    double latent_step = 1.0;
    double rd_lambda = 0.0;

    int total_down_h() const {
        int f = 1;
        for (const auto& l : encoder_layers) f *= l.factor_h;
        return f;
    }
    int total_down_w() const {
        int f = 1;
        for (const auto& l : encoder_layers) f *= l.factor_w;
        return f;
    }
    int latent_channels() const { return encoder_layers.empty() ? 0 : encoder_layers.back().features; }

    void validate() const {
        require(input_channels >= 1, "CodecConfig: input_channels must be >= 1");
        require(!encoder_layers.empty() && !decoder_layers.empty(), "CodecConfig: encoder and decoder need layers");
        for (const auto* list : {&encoder_layers, &decoder_layers})
            for (const auto& l : *list)
                require(l.features >= 1 && l.kernel_h >= 1 && l.kernel_w >= 1 && l.factor_h >= 1 && l.factor_w >= 1,
                        "CodecConfig: layer sizes must be positive");
        int up_h = 1, up_w = 1;
        for (const auto& l : decoder_layers) {
            up_h *= l.factor_h;
            up_w *= l.factor_w;
        }
        require(up_h == total_down_h() && up_w == total_down_w(),
                "CodecConfig: decoder upsampling must mirror encoder downsampling");
        require(decoder_layers.back().features == input_channels,
                "CodecConfig: last decoder layer must produce input_channels features");
        require(residual_block_count >= 0 && residual_block_count < static_cast<int>(decoder_layers.size()),
                "CodecConfig: residual blocks sit between decoder convolutions");
        require(latent_step > 0.0 && std::isfinite(latent_step), "CodecConfig: latent_step must be > 0");
        require(rd_lambda >= 0.0 && std::isfinite(rd_lambda), "CodecConfig: rd_lambda must be >= 0");
    }

    /// Desk-scale default: 4x4 total downsampling, two residual blocks in the decoder.
    static CodecConfig desk_default(int latent_channels = 8) {
        CodecConfig c;
        c.encoder_layers = {{32, 5, 5, 2, 2}, {32, 3, 3, 2, 2}, {latent_channels, 3, 3, 1, 1}};
        c.decoder_layers = {{32, 3, 3, 2, 2}, {16, 3, 3, 2, 2}, {2, 3, 3, 1, 1}};
        c.residual_block_count = 2;
        return c;
    }
};

inline nlohmann::json to_json(const ConvLayerSpec& l) {
    return {{"features", l.features}, {"kernel", {l.kernel_h, l.kernel_w}}, {"factor", {l.factor_h, l.factor_w}}};
}

inline ConvLayerSpec conv_layer_from_json(const nlohmann::json& j) {
    ConvLayerSpec l;
    l.features = j.at("features").get<int>();
    l.kernel_h = j.at("kernel").at(0).get<int>();
    l.kernel_w = j.at("kernel").at(1).get<int>();
    if (j.contains("factor")) {
        l.factor_h = j.at("factor").at(0).get<int>();
        l.factor_w = j.at("factor").at(1).get<int>();
    }
    return l;
}

inline nlohmann::json to_json(const CodecConfig& c) {
    nlohmann::json enc = nlohmann::json::array(), dec = nlohmann::json::array();
    for (const auto& l : c.encoder_layers) enc.push_back(to_json(l));
    for (const auto& l : c.decoder_layers) dec.push_back(to_json(l));
    return {{"format_version", kFormatVersion},
            {"input_channels", c.input_channels},
            {"encoder_layers", enc},
            {"decoder_layers", dec},
            {"residual_block_count", c.residual_block_count},
            {"latent_step", c.latent_step},
            {"rd_lambda", c.rd_lambda}};
}

inline CodecConfig codec_config_from_json(const nlohmann::json& j) {
    CodecConfig c = CodecConfig::desk_default();
    try {
        if (j.contains("format_version") && j.at("format_version").get<int>() != kFormatVersion)
            throw ConfigError("unsupported codec config format_version");
        c.input_channels = j.value("input_channels", c.input_channels);
        if (j.contains("encoder_layers")) {
            c.encoder_layers.clear();
            for (const auto& l : j.at("encoder_layers")) c.encoder_layers.push_back(conv_layer_from_json(l));
        }
        if (j.contains("decoder_layers")) {
            c.decoder_layers.clear();
            for (const auto& l : j.at("decoder_layers")) c.decoder_layers.push_back(conv_layer_from_json(l));
        }
        c.residual_block_count = j.value("residual_block_count", c.residual_block_count);
        c.latent_step = j.value("latent_step", c.latent_step);
        c.rd_lambda = j.value("rd_lambda", c.rd_lambda);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("codec config: ") + e.what());
    }
    try {
        c.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("codec config: ") + e.what());
    }
    return c;
}

// --- tensor <-> network planes ------------------------------------------------

/// (2*N_U, K, N_B) planes: channel p*N_U + u holds part p (0 real, 1 imag) of UE antenna u.
template <class T>
std::vector<T> to_planes(const ChannelTensor& h, double scale) {
    const int k = h.n_subcarriers, nb = h.n_bs, nu = h.n_ue;
    std::vector<T> x(2 * h.size());
    for (int part = 0; part < 2; ++part)
        for (int u = 0; u < nu; ++u)
            for (int kk = 0; kk < k; ++kk)
                for (int b = 0; b < nb; ++b) {
                    const cplx v = h(kk, b, u) * scale;
                    x[((static_cast<std::size_t>(part) * nu + u) * k + kk) * nb + b] =
                        static_cast<T>(part == 0 ? v.real() : v.imag());
                }
    return x;
}

template <class T>
ChannelTensor from_planes(std::span<const T> x, int k, int nb, int nu, double scale, const std::string& id = {}) {
    require(x.size() == 2 * static_cast<std::size_t>(k) * nb * nu, "from_planes: size mismatch");
    ChannelTensor h(k, nb, nu, id);
    for (int u = 0; u < nu; ++u)
        for (int kk = 0; kk < k; ++kk)
            for (int b = 0; b < nb; ++b) {
                const double re = x[(static_cast<std::size_t>(u) * k + kk) * nb + b];
                const double im = x[((static_cast<std::size_t>(nu) + u) * k + kk) * nb + b];
                h(kk, b, u) = cplx(re, im) / scale;
            }
    return h;
}

// --- model ---------------------------------------------------------------------

template <class T>
nn::Sequential<T> build_encoder(const CodecConfig& cfg) {
    nn::Sequential<T> net;
    int in = cfg.input_channels;
    for (std::size_t i = 0; i < cfg.encoder_layers.size(); ++i) {
        const auto& l = cfg.encoder_layers[i];
        const bool last = i + 1 == cfg.encoder_layers.size();
        const double gain = last ? 1.0 / std::sqrt(2.0) : 1.0 / std::sqrt(1.0 + 0.0625);
        net.add(std::make_unique<nn::Conv2d<T>>(
            nn::ConvSpec{in, l.features, l.kernel_h, l.kernel_w, l.factor_h, l.factor_w, 1, 1, gain}));
        if (!last) net.add(std::make_unique<nn::PReLU<T>>(l.features));
        in = l.features;
    }
    return net;
}

template <class T>
nn::Sequential<T> build_decoder(const CodecConfig& cfg) {
    nn::Sequential<T> net;
    int in = cfg.latent_channels();
    int residual_left = cfg.residual_block_count;
    for (std::size_t i = 0; i < cfg.decoder_layers.size(); ++i) {
        const auto& l = cfg.decoder_layers[i];
        const bool last = i + 1 == cfg.decoder_layers.size();
        const double gain = last ? 1.0 / std::sqrt(2.0) : 1.0 / std::sqrt(1.0 + 0.0625);
        net.add(std::make_unique<nn::Conv2d<T>>(
            nn::ConvSpec{in, l.features, l.kernel_h, l.kernel_w, 1, 1, l.factor_h, l.factor_w, gain}));
        if (!last) {
            net.add(std::make_unique<nn::PReLU<T>>(l.features));
            if (residual_left > 0) {
                net.add(std::make_unique<nn::ResidualBlock<T>>(l.features, l.kernel_h, l.kernel_w));
                --residual_left;
            }
        }
        in = l.features;
    }
    return net;
}

/// Encoder and decoder over one flat parameter vector (encoder first).
template <class T>
struct CodecModel {
    CodecConfig config;
    nn::Sequential<T> encoder;
    nn::Sequential<T> decoder;
    std::vector<T> params;
    EntropyModel entropy;
    double input_scale = 1.0;

    explicit CodecModel(const CodecConfig& cfg)
        : config(cfg), encoder((cfg.validate(), build_encoder<T>(cfg))), decoder(build_decoder<T>(cfg)),
          params(encoder.param_count() + decoder.param_count(), T(0)),
          entropy(EntropyModel::uniform(cfg.latent_channels(), -8, 8)) {}

    void init(std::uint64_t seed) {
        Rng rng = make_rng(seed, 0, 0x1417);
        encoder.init(enc_params(), rng);
        decoder.init(dec_params(), rng);
    }

    std::span<T> enc_params() { return std::span<T>(params).subspan(0, encoder.param_count()); }
    std::span<T> dec_params() { return std::span<T>(params).subspan(encoder.param_count()); }
    std::span<const T> enc_params() const { return std::span<const T>(params).subspan(0, encoder.param_count()); }
    std::span<const T> dec_params() const { return std::span<const T>(params).subspan(encoder.param_count()); }

    nn::Shape3 input_shape(int k, int nb) const { return {config.input_channels, k, nb}; }

    LatentShape latent_shape(int k, int nb) const {
        const auto s = encoder.output_shape(input_shape(k, nb));
        return {s.c, s.h, s.w};
    }
};

inline void check_codec_input(const ChannelTensor& h, const CodecConfig& cfg) {
    require(2 * h.n_ue == cfg.input_channels,
            "codec: tensor has " + std::to_string(h.n_ue) + " UE antennas but the model expects " +
                std::to_string(cfg.input_channels / 2));
    require(h.n_subcarriers % cfg.total_down_h() == 0 && h.n_bs % cfg.total_down_w() == 0,
            "codec: (K, N_B) = (" + std::to_string(h.n_subcarriers) + ", " + std::to_string(h.n_bs) +
                ") not divisible by total downsampling (" + std::to_string(cfg.total_down_h()) + ", " +
                std::to_string(cfg.total_down_w()) + ")");
}

/// Deterministic forward pass of the feature encoder.
template <class T>
LatentTensor encode_features(const ChannelTensor& h, const CodecModel<T>& m) {
    check_codec_input(h, m.config);
    const auto x = to_planes<T>(h, m.input_scale);
    std::vector<nn::Cache<T>> caches;
    const auto z = m.encoder.forward(m.enc_params(), m.input_shape(h.n_subcarriers, h.n_bs), x, caches);
    LatentTensor out(m.latent_shape(h.n_subcarriers, h.n_bs));
    std::copy(z.begin(), z.end(), out.values.begin());
    return out;
}

/// Deterministic forward pass of the feature decoder; output has the shape
/// of the tensor that produced the latent.
template <class T>
ChannelTensor decode_features(const LatentTensor& z, const CodecModel<T>& m, const std::string& id = {}) {
    require(z.shape.channels == m.config.latent_channels(), "decode_features: latent channel count mismatch");
    require(z.shape.height >= 1 && z.shape.width >= 1, "decode_features: empty latent");
    std::vector<T> x(z.values.begin(), z.values.end());
    std::vector<nn::Cache<T>> caches;
    const nn::Shape3 in{z.shape.channels, z.shape.height, z.shape.width};
    const auto y = m.decoder.forward(m.dec_params(), in, x, caches);
    const int k = z.shape.height * m.config.total_down_h();
    const int nb = z.shape.width * m.config.total_down_w();
    return from_planes<T>(y, k, nb, m.config.input_channels / 2, m.input_scale, id);
}

/// MSE per complex entry plus rd_lambda times bits per complex entry.
inline double rd_loss(const ChannelTensor& h, const ChannelTensor& h_hat, double rate_bits, double rd_lambda) {
    require(h.same_shape(h_hat), "rd_loss: shape mismatch");
    double se = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) se += std::norm(h.data[i] - h_hat.data[i]);
    const double n = static_cast<double>(h.size());
    return se / n + rd_lambda * rate_bits / n;
}

// --- compression path ------------------------------------------------------------

template <class T>
LatentBitstream compress(const ChannelTensor& h, const CodecModel<T>& m) {
    return arith_encode(quantize_latent(encode_features(h, m), m.config.latent_step), m.entropy);
}

template <class T>
ChannelTensor decompress(const LatentBitstream& bs, const CodecModel<T>& m, int k, int nb,
                         const std::string& id = {}) {
    const auto z = arith_decode(bs, m.entropy, m.latent_shape(k, nb), m.config.latent_step);
    return decode_features(z, m, id);
}

// --- training --------------------------------------------------------------------

struct TrainSchedule {
    int epochs = 30;
    int batch_size = 100;
    double learning_rate = 2e-3;
    double final_lr_fraction = 0.05;  // cosine decay target
    std::uint64_t seed = 1;
    int max_model_samples = 2000;     // latents used to refit the entropy model
};

struct EpochLog {
    int epoch = 0;
    double loss = 0.0;
    double mse = 0.0;             // per complex entry, normalized units
    double bits_per_entry = 0.0;  // model cross-entropy of quantized latents
    bool operator==(const EpochLog&) const = default;
};

template <class T>
struct TrainResult {
    CodecModel<T> model;
    std::vector<EpochLog> log;
};

namespace detail {

inline double cosine_lr(const TrainSchedule& s, long long step, long long total) {
    if (total <= 1) return s.learning_rate;
    const double t = static_cast<double>(step) / static_cast<double>(total - 1);
    const double f = s.final_lr_fraction + (1.0 - s.final_lr_fraction) * 0.5 * (1.0 + std::cos(kPi * t));
    return s.learning_rate * f;
}

inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(epoch), 0xBA7C);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

inline double dataset_scale(std::span<const ChannelTensor> data) {
    double p = 0.0, n = 0.0;
    for (const auto& h : data) {
        p += h.squared_norm();
        n += static_cast<double>(h.size());
    }
    return p > 0 ? std::sqrt(n / p) : 1.0;
}

}  // namespace detail

/// Refits the entropy model on quantized training latents.
template <class T>
EntropyModel refit_entropy(const CodecModel<T>& m, const std::vector<std::vector<T>>& inputs, nn::Shape3 in_shape,
                           int max_samples) {
    std::vector<LatentTensor> lat;
    const std::size_t n = std::min<std::size_t>(inputs.size(), static_cast<std::size_t>(std::max(1, max_samples)));
    const auto ls = m.encoder.output_shape(in_shape);
    std::vector<nn::Cache<T>> caches;
    for (std::size_t i = 0; i < n; ++i) {
        const auto z = m.encoder.forward(m.enc_params(), in_shape, inputs[i], caches);
        LatentTensor t({ls.c, ls.h, ls.w});
        std::copy(z.begin(), z.end(), t.values.begin());
        lat.push_back(quantize_latent(t, m.config.latent_step));
    }
    return fit_entropy_model(lat);
}

/// Gradient of the rate-distortion loss for one sample (accumulated into
/// `grad`). Straight-through quantization: the decoder runs on the quantized
/// latent and its input gradient reaches the encoder unchanged.
/// Returns {mse, bits}.
template <class T>
std::pair<double, double> rd_sample_gradient(const CodecModel<T>& m, std::span<const T> x, nn::Shape3 in_shape,
                                             double rd_lambda, bool quantize, std::span<T> grad, double weight) {
    std::vector<nn::Cache<T>> enc_cache, dec_cache;
    const auto z = m.encoder.forward(m.enc_params(), in_shape, x, enc_cache);
    const auto ls = m.encoder.output_shape(in_shape);
    const double step = m.config.latent_step;
    const std::size_t plane = static_cast<std::size_t>(ls.h) * ls.w;
    const double n_complex = static_cast<double>(x.size()) / 2.0;

    std::vector<T> q(z.size());
    std::vector<double> rate_grad(z.size(), 0.0);
    double bits = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double u = static_cast<double>(z[i]) / step;
        q[i] = quantize ? static_cast<T>(step * std::nearbyint(u)) : z[i];
        double g = 0.0;
        bits += m.entropy.soft_bits(static_cast<int>(i / plane), u, &g);
        rate_grad[i] = g / step;
    }
    const auto y = m.decoder.forward(m.dec_params(), ls, q, dec_cache);
    std::vector<T> gy(y.size());
    double se = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = static_cast<double>(y[i]) - static_cast<double>(x[i]);
        se += d * d;
        gy[i] = static_cast<T>(weight * 2.0 * d / n_complex);
    }
    const std::size_t ne = m.encoder.param_count();
    auto gz = m.decoder.backward(m.dec_params(), dec_cache, gy, grad.subspan(ne));
    for (std::size_t i = 0; i < gz.size(); ++i)
        gz[i] += static_cast<T>(weight * rd_lambda * rate_grad[i] / n_complex);
    m.encoder.backward(m.enc_params(), enc_cache, gz, grad.subspan(0, ne));
    return {se / n_complex, bits};
}

/// Minimizes MSE + rd_lambda * bits/entry with straight-through quantization
/// and a histogram rate model refreshed every epoch. Deterministic in the seed.
template <class T = float>
TrainResult<T> train_codec(std::span<const ChannelTensor> data, const CodecConfig& cfg, const TrainSchedule& sched,
                           std::function<void(const EpochLog&)> on_epoch = {}, double input_scale = 0.0) {
    require(!data.empty(), "train_codec: empty dataset");
    require(sched.epochs >= 1 && sched.batch_size >= 1 && sched.learning_rate > 0, "train_codec: invalid schedule");
    CodecModel<T> m(cfg);
    m.init(sched.seed);
    m.input_scale = input_scale > 0 ? input_scale : detail::dataset_scale(data);
    const int k = data.front().n_subcarriers, nb = data.front().n_bs;
    for (const auto& h : data) {
        require(h.n_subcarriers == k && h.n_bs == nb, "train_codec: dataset shapes differ");
        check_codec_input(h, cfg);
    }
    const nn::Shape3 in_shape = m.input_shape(k, nb);
    std::vector<std::vector<T>> inputs;
    inputs.reserve(data.size());
    for (const auto& h : data) inputs.push_back(to_planes<T>(h, m.input_scale));

    nn::Adam<T> opt(m.params.size(), sched.learning_rate);
    std::vector<T> grad(m.params.size());
    const std::size_t n = inputs.size();
    const std::size_t bsz = std::min<std::size_t>(static_cast<std::size_t>(sched.batch_size), n);
    const long long steps_per_epoch = static_cast<long long>((n + bsz - 1) / bsz);
    const long long total_steps = steps_per_epoch * sched.epochs;
    const double n_complex = static_cast<double>(in_shape.size()) / 2.0;
    long long step = 0;
    TrainResult<T> result{std::move(m), {}};
    auto& model = result.model;

    for (int epoch = 0; epoch < sched.epochs; ++epoch) {
        model.entropy = refit_entropy(model, inputs, in_shape, sched.max_model_samples);
        const auto order = detail::epoch_order(n, sched.seed, epoch);
        double sum_mse = 0.0, sum_bits = 0.0;
        for (std::size_t start = 0; start < n; start += bsz) {
            const std::size_t end = std::min(n, start + bsz);
            std::fill(grad.begin(), grad.end(), T(0));
            const double w = 1.0 / static_cast<double>(end - start);
            for (std::size_t b = start; b < end; ++b) {
                const auto [mse, bits] =
                    rd_sample_gradient<T>(model, inputs[order[b]], in_shape, cfg.rd_lambda, true, grad, w);
                sum_mse += mse;
                sum_bits += bits;
            }
            for (const T g : grad)
                if (!std::isfinite(static_cast<double>(g)))
                    throw NumericError("train_codec: non-finite gradient at epoch " + std::to_string(epoch) +
                                       ", step " + std::to_string(step));
            opt.set_learning_rate(detail::cosine_lr(sched, step, total_steps));
            opt.step(model.params, grad);
            ++step;
        }
        EpochLog e;
        e.epoch = epoch;
        e.mse = sum_mse / static_cast<double>(n);
        e.bits_per_entry = sum_bits / static_cast<double>(n) / n_complex;
        e.loss = e.mse + cfg.rd_lambda * e.bits_per_entry;
        if (!std::isfinite(e.loss))
            throw NumericError("train_codec: loss diverged at epoch " + std::to_string(epoch));
        result.log.push_back(e);
        if (on_epoch) on_epoch(e);
    }
    model.entropy = refit_entropy(model, inputs, in_shape, static_cast<int>(n));
    return result;
}

// --- checkpoint ------------------------------------------------------------------

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    return s;
}

template <class T>
void save_checkpoint(const CodecModel<T>& m, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    nlohmann::json arch = {
        {"format_version", kFormatVersion},
        {"config", to_json(m.config)},
        {"encoder", m.encoder.describe()},
        {"decoder", m.decoder.describe()},
        {"latent_step", m.config.latent_step},
        {"rd_lambda", m.config.rd_lambda},
        {"pmf_id", hex64(m.entropy.id())},
        {"input_scale", m.input_scale},
        {"param_count", m.params.size()},
        {"weights", "weights.bin: float32 little-endian, encoder layers then decoder layers in listed order"},
        {"entropy_model", m.entropy.to_json()},
    };
    write_json(dir / "arch.json", arch);
    std::vector<unsigned char> bytes;
    bytes.reserve(4 * m.params.size());
    for (const T v : m.params) put_f32le(bytes, static_cast<float>(v));
    write_file(dir / "weights.bin", bytes);
}

template <class T = float>
CodecModel<T> load_checkpoint(const fs::path& dir) {
    const auto arch = read_json(dir / "arch.json");
    CodecConfig cfg;
    try {
        cfg = codec_config_from_json(arch.at("config"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(dir.string() + "/arch.json: " + e.what());
    }
    CodecModel<T> m(cfg);
    try {
        m.input_scale = arch.at("input_scale").get<double>();
        m.entropy = EntropyModel::from_json(arch.at("entropy_model"));
        if (arch.at("pmf_id").get<std::string>() != hex64(m.entropy.id()))
            throw ConfigError(dir.string() + ": pmf_id does not match the stored entropy model");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(dir.string() + "/arch.json: " + e.what());
    }
    const auto bytes = read_file(dir / "weights.bin");
    if (bytes.size() != 4 * m.params.size())
        throw ConfigError(dir.string() + ": weights.bin holds " + std::to_string(bytes.size() / 4) +
                          " values, architecture needs " + std::to_string(m.params.size()));
    for (std::size_t i = 0; i < m.params.size(); ++i) m.params[i] = static_cast<T>(get_f32le(bytes.data() + 4 * i));
    return m;
}

// --- bitstream file ----------------------------------------------------------------

inline constexpr std::size_t kBitstreamHeaderBytes = 16;
inline constexpr std::uint8_t kBitstreamVersion = 1;

/// "CSIB", version u8, symbol_count u32 LE, low 56 bits of pmf_id LE, payload.
inline std::vector<std::uint8_t> serialize_bitstream(const LatentBitstream& bs) {
    std::vector<std::uint8_t> out = {'C', 'S', 'I', 'B', kBitstreamVersion};
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bs.symbol_count >> (8 * i)));
    for (int i = 0; i < 7; ++i) out.push_back(static_cast<std::uint8_t>(bs.pmf_id >> (8 * i)));
    out.insert(out.end(), bs.bytes.begin(), bs.bytes.end());
    return out;
}

/// Parses a bitstream file; the truncated pmf_id is checked against `em`.
inline LatentBitstream parse_bitstream(std::span<const std::uint8_t> file, const EntropyModel& em) {
    if (file.size() < kBitstreamHeaderBytes || file[0] != 'C' || file[1] != 'S' || file[2] != 'I' || file[3] != 'B')
        throw DecodeError("bitstream: bad magic");
    if (file[4] != kBitstreamVersion) throw DecodeError("bitstream: unsupported version");
    LatentBitstream bs;
    for (int i = 0; i < 4; ++i) bs.symbol_count |= static_cast<std::uint32_t>(file[5 + i]) << (8 * i);
    std::uint64_t id56 = 0;
    for (int i = 0; i < 7; ++i) id56 |= static_cast<std::uint64_t>(file[9 + i]) << (8 * i);
    const std::uint64_t full = em.id();
    if (id56 != (full & 0x00FFFFFFFFFFFFFFULL)) throw DecodeError("bitstream: pmf_id does not match the checkpoint");
    bs.pmf_id = full;
    bs.bytes.assign(file.begin() + kBitstreamHeaderBytes, file.end());
    bs.bit_length = 8 * bs.bytes.size();
    return bs;
}

}  // namespace csilab

#endif  // CSILAB_CODEC_HPP
