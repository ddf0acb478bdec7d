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

#ifndef CSILAB_FEEDBACK_LINK_HPP
#define CSILAB_FEEDBACK_LINK_HPP

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "csilab/channel_gen.hpp"
#include "csilab/codec.hpp"
#include "csilab/metrics.hpp"

namespace csilab {

struct FeedbackConfig {
    int k_uplink = 256;
    int n_feedback_subcarriers = 16;
    double snr_db = 10.0;
    std::uint64_t subcarrier_selection_seed = 7;

    double rho() const { return static_cast<double>(n_feedback_subcarriers) / k_uplink; }
    double snr_linear() const { return std::isinf(snr_db) && snr_db > 0 ? std::numeric_limits<double>::infinity() : db_to_linear(snr_db); }
    /// Unit symbol power, so the noise variance is 1/SNR.
    double noise_variance() const { return std::isinf(snr_linear()) ? 0.0 : 1.0 / snr_linear(); }

    void validate() const {
        require(k_uplink >= 1, "FeedbackConfig: k_uplink must be >= 1");
        require(n_feedback_subcarriers >= 1 && n_feedback_subcarriers <= k_uplink,
                "FeedbackConfig: need 1 <= N_F <= K_u");
        require(!std::isnan(snr_db), "FeedbackConfig: snr_db is NaN");
    }

    /// N_F = round(rho * K_u), at least one subcarrier.
    static int subcarriers_for(double rho, int k_uplink) {
        require(rho > 0.0 && rho <= 1.0, "FeedbackConfig: rho must be in (0, 1]");
        return std::clamp(static_cast<int>(std::lround(rho * k_uplink)), 1, k_uplink);
    }
};

/// Uplink SIMO channels on the feedback subcarriers.
struct FeedbackRealization {
    std::vector<CVector> channels;  // h_F^j, length N_B each
    double noise_variance = 0.0;
    std::vector<int> selected_indices;

    int n_feedback() const { return static_cast<int>(channels.size()); }

    void validate(int k_uplink) const {
        require(channels.size() == selected_indices.size(), "FeedbackRealization: channel/index count mismatch");
        std::vector<int> s = selected_indices;
        std::sort(s.begin(), s.end());
        require(std::adjacent_find(s.begin(), s.end()) == s.end(), "FeedbackRealization: duplicate subcarrier");
        for (int k : s) require(k >= 0 && k < k_uplink, "FeedbackRealization: subcarrier index out of range");
    }
};

/// Uplink scenario: the downlink generator with K_u subcarriers.
inline ScenarioConfig uplink_scenario(const ScenarioConfig& downlink, int k_uplink) {
    ScenarioConfig up = downlink;
    up.ofdm.n_subcarriers = k_uplink;
    up.scenario_id = downlink.scenario_id + "-uplink";
    return up;
}

/// Trial `trial` draws an independent uplink channel and a uniformly random
/// subcarrier permutation whose first N_F entries are used. Both depend only
/// on (seeds, trial), so realizations for growing N_F are nested.
inline FeedbackRealization draw_feedback_realization(const ScenarioConfig& uplink, const FeedbackConfig& fb,
                                                     std::uint64_t channel_seed, std::uint64_t trial) {
    fb.validate();
    require(uplink.ofdm.n_subcarriers == fb.k_uplink, "draw_feedback_realization: uplink scenario K != K_u");
    require(uplink.array.n_ue_antennas == 1, "draw_feedback_realization: feedback is from a single-antenna UE");
    Rng chan_rng = make_rng(channel_seed, trial, 0x0F1D);
    const MultipathParams mp = sample_multipath(uplink, chan_rng);

    std::vector<int> perm(static_cast<std::size_t>(fb.k_uplink));
    std::iota(perm.begin(), perm.end(), 0);
    Rng sel_rng = make_rng(fb.subcarrier_selection_seed, trial, 0x5E1E);
    std::shuffle(perm.begin(), perm.end(), sel_rng);

    FeedbackRealization fr;
    fr.noise_variance = fb.noise_variance();
    fr.selected_indices.assign(perm.begin(), perm.begin() + fb.n_feedback_subcarriers);
    for (int k : fr.selected_indices) {
        const CMatrix hk = channel_at_subcarrier(mp, uplink.array, uplink.ofdm, k);  // 1 x N_B
        fr.channels.push_back(hk.row(0).transpose());
    }
    return fr;
}

/// sum_j log2(1 + snr ||h_F^j||^2).
inline double feedback_capacity(const FeedbackRealization& fr, double snr) {
    require(snr >= 0.0, "feedback_capacity: snr must be >= 0");
    double c = 0.0;
    for (const auto& h : fr.channels) c += std::log2(1.0 + snr * h.squaredNorm());
    return c;
}

struct DigitalFeedbackOutcome {
    bool delivered = false;
    double capacity_bits = 0.0;
    std::uint64_t payload_bits = 0;
    ChannelTensor reconstruction;
};

/// Error-free transmission at capacity: delivered iff payload <= C_FB,
/// otherwise an outage with an all-zero reconstruction.
inline DigitalFeedbackOutcome digital_feedback(const LatentBitstream& bs, const FeedbackRealization& fr, double snr,
                                               const std::function<ChannelTensor(const LatentBitstream&)>& decoder,
                                               int k, int nb, int nu) {
    DigitalFeedbackOutcome out;
    out.capacity_bits = feedback_capacity(fr, snr);
    out.payload_bits = bs.bit_length;
    out.delivered = static_cast<double>(out.payload_bits) <= out.capacity_bits;
    out.reconstruction = out.delivered ? decoder(bs) : ChannelTensor(k, nb, nu);
    return out;
}

// --- analog path ---------------------------------------------------------------

/// symbol j = latent[2j] + i latent[2j+1].
inline std::vector<cplx> pair_to_symbols(std::span<const double> latent) {
    require(latent.size() % 2 == 0, "pair_to_symbols: latent length must be even");
    std::vector<cplx> s(latent.size() / 2);
    for (std::size_t j = 0; j < s.size(); ++j) s[j] = {latent[2 * j], latent[2 * j + 1]};
    return s;
}

inline std::vector<double> symbols_to_pairs(std::span<const cplx> symbols) {
    std::vector<double> r(2 * symbols.size());
    for (std::size_t j = 0; j < symbols.size(); ++j) {
        r[2 * j] = symbols[j].real();
        r[2 * j + 1] = symbols[j].imag();
    }
    return r;
}

/// Scales to unit average symbol power, ||out||^2 = N_F. Zero passes through.
inline std::vector<cplx> power_normalize(std::span<const cplx> x) {
    double e = 0.0;
    for (const auto& v : x) e += std::norm(v);
    std::vector<cplx> out(x.begin(), x.end());
    if (e == 0.0) return out;
    const double g = std::sqrt(static_cast<double>(x.size()) / e);
    for (auto& v : out) v *= g;
    return out;
}

/// y_j = h_F^j x_j + z_j.
inline std::vector<CVector> simo_transmit(std::span<const cplx> x, const FeedbackRealization& fr, Rng& rng) {
    require(x.size() == fr.channels.size(), "simo_transmit: symbol count differs from N_F");
    std::vector<CVector> y;
    y.reserve(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        CVector yj = fr.channels[j] * x[j];
        if (fr.noise_variance > 0.0)
            for (Eigen::Index b = 0; b < yj.size(); ++b) yj[b] += complex_gaussian(rng, fr.noise_variance);
        y.push_back(std::move(yj));
    }
    return y;
}

/// h^H y / ||h||^2.
inline cplx mrc_combine(const CVector& y, const CVector& h) {
    require(y.size() == h.size(), "mrc_combine: length mismatch");
    const double g = h.squaredNorm();
    if (!(g > 0.0)) throw UndefinedChannel("mrc_combine: zero channel vector");
    return h.dot(y) / g;  // Eigen's dot conjugates the first argument
}

namespace detail {

/// Gradient of out = s v / ||v|| (s = sqrt(N_F)) for a real vector v.
template <class T>
void power_normalize_backward(std::span<const T> v, std::span<T> g) {
    double n2 = 0.0;
    for (T a : v) n2 += static_cast<double>(a) * a;
    if (n2 == 0.0) return;
    const double norm = std::sqrt(n2);
    const double s = std::sqrt(static_cast<double>(v.size()) / 2.0);
    double ug = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) ug += static_cast<double>(v[i]) * g[i] / norm;
    for (std::size_t i = 0; i < v.size(); ++i)
        g[i] = static_cast<T>(s / norm * (g[i] - ug * static_cast<double>(v[i]) / norm));
}

template <class T>
std::vector<T> normalize_real(std::span<const T> v) {
    double n2 = 0.0;
    for (T a : v) n2 += static_cast<double>(a) * a;
    std::vector<T> out(v.begin(), v.end());
    if (n2 == 0.0) return out;
    const double g = std::sqrt(static_cast<double>(v.size()) / 2.0 / n2);
    for (auto& a : out) a = static_cast<T>(a * g);
    return out;
}

/// Channel + MRC on paired reals; `fr == nullptr` is a transparent channel.
template <class T>
std::vector<T> channel_layer(std::span<const T> tx, const FeedbackRealization* fr, Rng& rng) {
    if (fr == nullptr) return {tx.begin(), tx.end()};
    std::vector<double> d(tx.begin(), tx.end());
    const auto sym = pair_to_symbols(d);
    const auto y = simo_transmit(sym, *fr, rng);
    std::vector<cplx> est(sym.size());
    for (std::size_t j = 0; j < sym.size(); ++j) est[j] = mrc_combine(y[j], fr->channels[j]);
    const auto r = symbols_to_pairs(est);
    return {r.begin(), r.end()};
}

}  // namespace detail

template <class T>
void check_analog_dims(const CodecModel<T>& m, int k, int nb, int n_feedback) {
    const auto ls = m.latent_shape(k, nb);
    if (ls.size() != 2 * static_cast<std::size_t>(n_feedback))
        throw InvalidArgument("analog: encoder emits " + std::to_string(ls.size()) + " reals but N_F = " +
                              std::to_string(n_feedback) + " needs " + std::to_string(2 * n_feedback));
}

/// encode -> pair -> normalize -> SIMO channel -> MRC -> decode.
template <class T>
ChannelTensor analog_feedback_forward(const ChannelTensor& h_d, const FeedbackRealization& fr,
                                      const CodecModel<T>& m, Rng& noise_rng) {
    check_codec_input(h_d, m.config);
    const auto ls = m.latent_shape(h_d.n_subcarriers, h_d.n_bs);
    if (ls.size() != 2 * fr.channels.size())
        throw InvalidArgument("analog_feedback_forward: encoder output length " + std::to_string(ls.size()) +
                              " != 2 * N_F = " + std::to_string(2 * fr.channels.size()));
    const auto x = to_planes<T>(h_d, m.input_scale);
    std::vector<nn::Cache<T>> caches;
    const auto z = m.encoder.forward(m.enc_params(), m.input_shape(h_d.n_subcarriers, h_d.n_bs), x, caches);
    const auto tx = detail::normalize_real<T>(z);
    const auto rx = detail::channel_layer<T>(tx, &fr, noise_rng);
    const auto y = m.decoder.forward(m.dec_params(), {ls.channels, ls.height, ls.width}, rx, caches);
    return from_planes<T>(y, h_d.n_subcarriers, h_d.n_bs, h_d.n_ue, m.input_scale, h_d.scenario_id);
}

struct AnalogTrainOptions {
    FeedbackConfig feedback;
    ScenarioConfig uplink;             // K must equal feedback.k_uplink
    std::uint64_t channel_seed = 11;   // uplink draws, one per batch
    bool channel_enabled = true;       // false: plain autoencoder with power normalization
};

/// End-to-end MSE training with the feedback channel and MRC as a
/// parameter-free layer; a fresh uplink realization per batch.
template <class T = float>
TrainResult<T> train_analog(std::span<const ChannelTensor> data, const CodecConfig& cfg, const TrainSchedule& sched,
                            const AnalogTrainOptions& opt, std::function<void(const EpochLog&)> on_epoch = {},
                            double input_scale = 0.0) {
    require(!data.empty(), "train_analog: empty dataset");
    require(sched.epochs >= 1 && sched.batch_size >= 1 && sched.learning_rate > 0, "train_analog: invalid schedule");
    opt.feedback.validate();
    CodecModel<T> m(cfg);
    m.init(sched.seed);
    m.input_scale = input_scale > 0 ? input_scale : detail::dataset_scale(data);
    const int k = data.front().n_subcarriers, nb = data.front().n_bs;
    for (const auto& h : data) check_codec_input(h, cfg);
    const auto ls = m.latent_shape(k, nb);
    if (ls.size() != 2 * static_cast<std::size_t>(opt.feedback.n_feedback_subcarriers))
        throw InvalidArgument("train_analog: encoder emits " + std::to_string(ls.size()) + " reals, N_F = " +
                              std::to_string(opt.feedback.n_feedback_subcarriers));
    const nn::Shape3 in_shape = m.input_shape(k, nb);
    const nn::Shape3 lat{ls.channels, ls.height, ls.width};
    std::vector<std::vector<T>> inputs;
    for (const auto& h : data) inputs.push_back(to_planes<T>(h, m.input_scale));

    nn::Adam<T> adam(m.params.size(), sched.learning_rate);
    std::vector<T> grad(m.params.size());
    const std::size_t n = inputs.size();
    const std::size_t bsz = std::min<std::size_t>(static_cast<std::size_t>(sched.batch_size), n);
    const long long total_steps = static_cast<long long>((n + bsz - 1) / bsz) * sched.epochs;
    const double n_complex = static_cast<double>(in_shape.size()) / 2.0;
    const std::size_t ne = m.encoder.param_count();
    long long step = 0;
    TrainResult<T> result{std::move(m), {}};
    auto& model = result.model;

    for (int epoch = 0; epoch < sched.epochs; ++epoch) {
        const auto order = detail::epoch_order(n, sched.seed, epoch);
        double sum_mse = 0.0;
        for (std::size_t start = 0; start < n; start += bsz) {
            const std::size_t end = std::min(n, start + bsz);
            std::fill(grad.begin(), grad.end(), T(0));
            FeedbackRealization fr;
            if (opt.channel_enabled)
                fr = draw_feedback_realization(opt.uplink, opt.feedback, opt.channel_seed,
                                               static_cast<std::uint64_t>(step));
            Rng noise = make_rng(opt.channel_seed, static_cast<std::uint64_t>(step), 0xA0153);
            const double w = 1.0 / static_cast<double>(end - start);
            for (std::size_t b = start; b < end; ++b) {
                const auto& x = inputs[order[b]];
                std::vector<nn::Cache<T>> ec, dc;
                const auto z = model.encoder.forward(model.enc_params(), in_shape, x, ec);
                const auto tx = detail::normalize_real<T>(z);
                const auto rx = detail::channel_layer<T>(tx, opt.channel_enabled ? &fr : nullptr, noise);
                const auto y = model.decoder.forward(model.dec_params(), lat, rx, dc);
                std::vector<T> gy(y.size());
                double se = 0.0;
                for (std::size_t i = 0; i < y.size(); ++i) {
                    const double d = static_cast<double>(y[i]) - static_cast<double>(x[i]);
                    se += d * d;
                    gy[i] = static_cast<T>(w * 2.0 * d / n_complex);
                }
                sum_mse += se / n_complex;
                // MRC with known channel: d(rx)/d(tx) is the identity.
                auto g = model.decoder.backward(model.dec_params(), dc, gy, std::span<T>(grad).subspan(ne));
                detail::power_normalize_backward<T>(z, g);
                model.encoder.backward(model.enc_params(), ec, g, std::span<T>(grad).subspan(0, ne));
            }
            for (const T gv : grad)
                if (!std::isfinite(static_cast<double>(gv)))
                    throw NumericError("train_analog: non-finite gradient at epoch " + std::to_string(epoch));
            adam.set_learning_rate(detail::cosine_lr(sched, step, total_steps));
            adam.step(model.params, grad);
            ++step;
        }
        EpochLog e;
        e.epoch = epoch;
        e.mse = sum_mse / static_cast<double>(n);
        e.loss = e.mse;
        if (!std::isfinite(e.loss)) throw NumericError("train_analog: loss diverged at epoch " + std::to_string(epoch));
        result.log.push_back(e);
        if (on_epoch) on_epoch(e);
    }
    return result;
}

}  // namespace csilab

#endif  // CSILAB_FEEDBACK_LINK_HPP
