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

#ifndef CSILAB_CHANNEL_GEN_HPP
#define CSILAB_CHANNEL_GEN_HPP

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csilab/common.hpp"

namespace csilab {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

struct ArrayConfig {
    int n_bs_antennas = 8;
    int n_ue_antennas = 1;
    double spacing_over_wavelength = 0.5;

    void validate() const {
        require(n_bs_antennas >= 1, "n_bs_antennas must be >= 1");
        require(n_ue_antennas >= 1, "n_ue_antennas must be >= 1");
        require(spacing_over_wavelength > 0.0 && std::isfinite(spacing_over_wavelength),
                "spacing_over_wavelength must be > 0");
    }
};

struct OfdmConfig {
    int n_subcarriers = 32;
    double sample_rate = 10e6;

    void validate() const {
        require(n_subcarriers >= 1, "n_subcarriers must be >= 1");
        require(sample_rate > 0.0 && std::isfinite(sample_rate), "sample_rate must be > 0");
    }
};

/// One multipath realization: per-path gain, delay (s), arrival and departure angle (rad).
struct MultipathParams {
    int n_paths = 0;
    std::vector<cplx> gains;
    std::vector<double> delays;
    std::vector<double> aoa;
    std::vector<double> aod;

    void validate() const {
        const auto n = static_cast<std::size_t>(n_paths);
        require(n_paths >= 1, "multipath: n_paths must be >= 1");
        require(gains.size() == n && delays.size() == n && aoa.size() == n && aod.size() == n,
                "multipath: list lengths do not match n_paths");
        for (std::size_t l = 0; l < n; ++l) {
            require(delays[l] >= 0.0 && std::isfinite(delays[l]), "multipath: negative delay");
            require(std::abs(aoa[l]) <= kPi / 2 + 1e-12 && std::abs(aod[l]) <= kPi / 2 + 1e-12,
                    "multipath: angle outside [-pi/2, pi/2]");
        }
    }

    bool operator==(const MultipathParams&) const = default;
};

struct ScenarioConfig {
    std::string scenario_id = "toy-indoor";
    ArrayConfig array;
    OfdmConfig ofdm;
    int min_paths = 3;
    int max_paths = 8;
    double delay_spread = 100e-9;
    double angle_spread = 0.1;
    int cluster_count = 2;
    std::uint64_t rng_seed = 1;

    void validate() const {
        array.validate();
        ofdm.validate();
        require(min_paths >= 1 && min_paths <= max_paths, "path_count_range must be a nonempty interval of positive integers");
        require(delay_spread > 0.0, "delay_spread must be > 0");
        require(angle_spread > 0.0, "angle_spread must be > 0");
        require(cluster_count >= 1, "cluster_count must be >= 1");
    }
};

/// Complex downlink CSI, shape (K, N_B, N_U), row-major in that order.
struct ChannelTensor {
    int n_subcarriers = 0;
    int n_bs = 0;
    int n_ue = 0;
    std::vector<cplx> data;
    std::string scenario_id;

    ChannelTensor() = default;
    ChannelTensor(int k, int nb, int nu, std::string id = {})
        : n_subcarriers(k), n_bs(nb), n_ue(nu),
          data(static_cast<std::size_t>(k) * nb * nu), scenario_id(std::move(id)) {
        require(k >= 1 && nb >= 1 && nu >= 1, "ChannelTensor: dimensions must be positive");
    }

    std::size_t size() const { return data.size(); }
    std::size_t index(int k, int b, int u) const {
        return (static_cast<std::size_t>(k) * n_bs + b) * n_ue + u;
    }
    cplx& operator()(int k, int b, int u) { return data[index(k, b, u)]; }
    const cplx& operator()(int k, int b, int u) const { return data[index(k, b, u)]; }

    bool same_shape(const ChannelTensor& o) const {
        return n_subcarriers == o.n_subcarriers && n_bs == o.n_bs && n_ue == o.n_ue;
    }

    double squared_norm() const {
        double s = 0.0;
        for (const auto& v : data) s += std::norm(v);
        return s;
    }

    bool all_finite() const {
        return std::all_of(data.begin(), data.end(),
                           [](const cplx& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
    }
};

/// ULA response exp(-j 2pi (d/lambda) m sin(angle)) / sqrt(N), m = 0..N-1.
inline CVector steering_vector(double angle, int n_antennas, double spacing_over_wavelength = 0.5) {
    require(std::isfinite(angle), "steering_vector: angle must be finite");
    require(n_antennas >= 1, "steering_vector: n_antennas must be >= 1");
    CVector a(n_antennas);
    const double norm = 1.0 / std::sqrt(static_cast<double>(n_antennas));
    const double phase_step = -2.0 * kPi * spacing_over_wavelength * std::sin(angle);
    for (int m = 0; m < n_antennas; ++m) a[m] = std::polar(norm, phase_step * m);
    return a;
}

/// Frequency response at subcarrier k, an N_U x N_B matrix.
inline CMatrix channel_at_subcarrier(const MultipathParams& mp, const ArrayConfig& array,
                                     const OfdmConfig& ofdm, int k) {
    mp.validate();
    array.validate();
    ofdm.validate();
    require(k >= 0 && k < ofdm.n_subcarriers, "channel_at_subcarrier: subcarrier index out of range");
    const int nu = array.n_ue_antennas;
    const int nb = array.n_bs_antennas;
    CMatrix h = CMatrix::Zero(nu, nb);
    const double scale = std::sqrt(static_cast<double>(nu) * nb / mp.n_paths);
    for (int l = 0; l < mp.n_paths; ++l) {
        const double phase = -2.0 * kPi * mp.delays[l] * ofdm.sample_rate * k / ofdm.n_subcarriers;
        const cplx coeff = scale * mp.gains[l] * std::polar(1.0, phase);
        const CVector a_u = steering_vector(mp.aoa[l], nu, array.spacing_over_wavelength);
        const CVector a_b = steering_vector(mp.aod[l], nb, array.spacing_over_wavelength);
        h.noalias() += coeff * (a_u * a_b.adjoint());
    }
    return h;
}

/// Full (K, N_B, N_U) tensor for one multipath realization.
inline ChannelTensor channel_tensor(const MultipathParams& mp, const ArrayConfig& array,
                                    const OfdmConfig& ofdm, const std::string& scenario_id = {}) {
    mp.validate();
    ChannelTensor t(ofdm.n_subcarriers, array.n_bs_antennas, array.n_ue_antennas, scenario_id);
    const int nu = array.n_ue_antennas;
    const int nb = array.n_bs_antennas;
    const double scale = std::sqrt(static_cast<double>(nu) * nb / mp.n_paths);

    // Steering outer products do not depend on k.
    std::vector<CMatrix> outer(static_cast<std::size_t>(mp.n_paths));
    for (int l = 0; l < mp.n_paths; ++l) {
        outer[l] = steering_vector(mp.aoa[l], nu, array.spacing_over_wavelength) *
                   steering_vector(mp.aod[l], nb, array.spacing_over_wavelength).adjoint();
    }
    for (int k = 0; k < ofdm.n_subcarriers; ++k) {
        for (int l = 0; l < mp.n_paths; ++l) {
            const double phase = -2.0 * kPi * mp.delays[l] * ofdm.sample_rate * k / ofdm.n_subcarriers;
            const cplx coeff = scale * mp.gains[l] * std::polar(1.0, phase);
            for (int b = 0; b < nb; ++b)
                for (int u = 0; u < nu; ++u) t(k, b, u) += coeff * outer[l](u, b);
        }
    }
    return t;
}

namespace detail {

inline double laplace(Rng& rng, double scale) {
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    const double x = u(rng);
    const double s = x < 0 ? -1.0 : 1.0;
    return -scale * s * std::log1p(-2.0 * std::abs(x));
}

inline double clamp_angle(double a) { return std::clamp(a, -kPi / 2, kPi / 2); }

}  // namespace detail

/// Clustered draw over the geometric model. Gains are normalized so that the
/// ensemble mean of ||H||_F^2 equals K * N_B * N_U.
inline MultipathParams sample_multipath(const ScenarioConfig& cfg, Rng& rng) {
    cfg.validate();
    MultipathParams mp;
    std::uniform_int_distribution<int> path_count(cfg.min_paths, cfg.max_paths);
    mp.n_paths = path_count(rng);
    const auto n = static_cast<std::size_t>(mp.n_paths);

    std::uniform_real_distribution<double> center_aod(-kPi / 3, kPi / 3);
    std::uniform_real_distribution<double> center_aoa(-kPi / 2, kPi / 2);
    std::vector<double> c_aod(static_cast<std::size_t>(cfg.cluster_count));
    std::vector<double> c_aoa(static_cast<std::size_t>(cfg.cluster_count));
    for (int c = 0; c < cfg.cluster_count; ++c) {
        c_aod[c] = center_aod(rng);
        c_aoa[c] = center_aoa(rng);
    }

    std::exponential_distribution<double> delay(1.0 / cfg.delay_spread);
    mp.delays.resize(n);
    for (auto& d : mp.delays) d = delay(rng);
    std::sort(mp.delays.begin(), mp.delays.end());

    std::uniform_int_distribution<int> cluster(0, cfg.cluster_count - 1);
    mp.aod.resize(n);
    mp.aoa.resize(n);
    for (std::size_t l = 0; l < n; ++l) {
        const int c = cluster(rng);
        mp.aod[l] = detail::clamp_angle(c_aod[c] + detail::laplace(rng, cfg.angle_spread));
        mp.aoa[l] = detail::clamp_angle(c_aoa[c] + detail::laplace(rng, cfg.angle_spread));
    }

    // Exponential power-delay profile, scaled so the profile sums to L.
    std::vector<double> power(n);
    double total = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        power[l] = std::exp(-mp.delays[l] / cfg.delay_spread);
        total += power[l];
    }
    mp.gains.resize(n);
    for (std::size_t l = 0; l < n; ++l) {
        const double p = power[l] * static_cast<double>(n) / total;
        mp.gains[l] = complex_gaussian(rng, p);
    }
    return mp;
}

/// Sample `index` of a scenario: its own RNG stream derived from (seed, index).
inline ChannelTensor sample_channel(const ScenarioConfig& cfg, std::uint64_t seed, std::uint64_t index) {
    Rng rng = make_rng(seed, index);
    const MultipathParams mp = sample_multipath(cfg, rng);
    return channel_tensor(mp, cfg.array, cfg.ofdm, cfg.scenario_id);
}

}  // namespace csilab

#endif  // CSILAB_CHANNEL_GEN_HPP
