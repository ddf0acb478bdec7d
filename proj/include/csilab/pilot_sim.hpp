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

#ifndef CSILAB_PILOT_SIM_HPP
#define CSILAB_PILOT_SIM_HPP

#include <Eigen/Dense>

#include "csilab/channel_gen.hpp"

namespace csilab {

/// Known pilot block X (N_U x P) with its average per-symbol power.
class PilotBlock {
  public:
    PilotBlock(CMatrix symbols, double power) : symbols_(std::move(symbols)), power_(power) {
        require(symbols_.cols() >= 1 && symbols_.rows() >= 1, "PilotBlock: empty pilot matrix");
        require(power_ > 0.0, "PilotBlock: power must be positive");
        const double measured = symbols_.squaredNorm() / static_cast<double>(symbols_.size());
        require(std::abs(measured - power_) <= 1e-9 * std::max(1.0, power_),
                "PilotBlock: average symbol power does not match the declared power");
    }

    /// Identity pilots (P = N_U): each antenna sends one unit symbol in turn.
    static PilotBlock identity(int n_ue) {
        return PilotBlock(CMatrix::Identity(n_ue, n_ue), 1.0 / n_ue);
    }

    /// Random QPSK-like pilots scaled to exactly `power` per symbol.
    static PilotBlock random(int n_ue, int length, double power, Rng& rng) {
        require(n_ue >= 1 && length >= 1, "PilotBlock::random: dimensions must be positive");
        CMatrix x(n_ue, length);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = complex_gaussian(rng, 1.0);
        const double measured = x.squaredNorm() / static_cast<double>(x.size());
        x *= std::sqrt(power / measured);
        return PilotBlock(std::move(x), power);
    }

    const CMatrix& symbols() const { return symbols_; }
    double power() const { return power_; }
    Eigen::Index length() const { return symbols_.cols(); }

  private:
    CMatrix symbols_;
    double power_;
};

struct Observation {
    CMatrix received;  // N_B x P
    double noise_variance = 0.0;
    int quantizer_bits = 0;  // 0 = unquantized
    double quantizer_step = 0.0;
};

/// Y = H X + Z with i.i.d. CN(0, noise_variance) noise.
inline Observation transmit_pilots(const CMatrix& h, const PilotBlock& x, double noise_variance, Rng& rng) {
    require(noise_variance >= 0.0, "transmit_pilots: noise_variance must be >= 0");
    require(h.cols() == x.symbols().rows(), "transmit_pilots: channel columns must equal pilot rows (N_U)");
    Observation obs;
    obs.received = h * x.symbols();
    obs.noise_variance = noise_variance;
    if (noise_variance > 0.0)
        for (Eigen::Index i = 0; i < obs.received.size(); ++i)
            obs.received.data()[i] += complex_gaussian(rng, noise_variance);
    return obs;
}

namespace detail {

inline double sign_level(double v) { return v < 0.0 ? -1.0 : 1.0; }

/// Mid-rise uniform quantizer with 2^bits levels over [-limit, limit].
inline double midrise(double v, double step, double limit) {
    const double top = limit - step / 2;
    const double q = step * (std::floor(v / step) + 0.5);
    return std::clamp(q, -top, top);
}

}  // namespace detail

/// Element-wise quantization of the real and imaginary parts.
/// bits = 1 is the sign quantizer; bits > 1 clips at +-3 sigma of the observation.
inline Observation quantize_observation(const Observation& obs, int bits) {
    require(bits >= 1, "quantize_observation: bits must be >= 1");
    require(obs.quantizer_bits == 0, "quantize_observation: observation is already quantized");
    Observation q = obs;
    q.quantizer_bits = bits;
    if (bits == 1) {
        for (Eigen::Index i = 0; i < q.received.size(); ++i) {
            const cplx v = q.received.data()[i];
            q.received.data()[i] = {detail::sign_level(v.real()), detail::sign_level(v.imag())};
        }
        return q;
    }
    const double n = static_cast<double>(2 * obs.received.size());
    const double sigma = n > 0 ? std::sqrt(obs.received.squaredNorm() / n) : 0.0;
    if (sigma == 0.0) return q;
    const double limit = 3.0 * sigma;
    const double step = 2.0 * limit / std::ldexp(1.0, bits);
    q.quantizer_step = step;
    for (Eigen::Index i = 0; i < q.received.size(); ++i) {
        const cplx v = q.received.data()[i];
        q.received.data()[i] = {detail::midrise(v.real(), step, limit), detail::midrise(v.imag(), step, limit)};
    }
    return q;
}

/// Coarse least-squares estimate Y X^+; minimum-norm when X is rank deficient.
inline CMatrix ls_estimate(const Observation& obs, const PilotBlock& x) {
    require(obs.received.cols() == x.length(), "ls_estimate: observation length differs from pilot length");
    const CMatrix pinv = x.symbols().completeOrthogonalDecomposition().pseudoInverse();
    return obs.received * pinv;
}

}  // namespace csilab

#endif  // CSILAB_PILOT_SIM_HPP
