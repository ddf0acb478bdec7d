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

#ifndef CSILAB_DCT_BASELINE_HPP
#define CSILAB_DCT_BASELINE_HPP

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "csilab/channel_gen.hpp"

namespace csilab {

class BitWriter {
  public:
    void put(std::uint64_t value, int bits) {
        for (int i = bits - 1; i >= 0; --i) {
            if (n_ % 8 == 0) bytes_.push_back(0);
            if ((value >> i) & 1u) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (n_ % 8));
            ++n_;
        }
    }
    std::uint64_t bit_length() const { return n_; }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

  private:
    std::vector<std::uint8_t> bytes_;
    std::uint64_t n_ = 0;
};

class BitReader {
  public:
    BitReader(const std::vector<std::uint8_t>& bytes, std::uint64_t bit_length) : bytes_(bytes), len_(bit_length) {}

    std::uint64_t get(int bits) {
        std::uint64_t v = 0;
        for (int i = 0; i < bits; ++i) {
            if (pos_ >= len_) throw DecodeError("dct bitstream: read past end");
            const bool b = (bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
            v = (v << 1) | static_cast<std::uint64_t>(b);
            ++pos_;
        }
        return v;
    }

  private:
    const std::vector<std::uint8_t>& bytes_;
    std::uint64_t len_;
    std::uint64_t pos_ = 0;
};

/// Orthonormal DCT-II matrix of size n.
inline Eigen::MatrixXd dct_matrix(int n) {
    Eigen::MatrixXd d(n, n);
    for (int k = 0; k < n; ++k) {
        const double a = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
        for (int i = 0; i < n; ++i) d(k, i) = a * std::cos(kPi * (2.0 * i + 1.0) * k / (2.0 * n));
    }
    return d;
}

struct DctCompressed {
    std::vector<std::uint8_t> bytes;
    std::uint64_t bit_length = 0;
    ChannelTensor h_hat;
};

namespace detail {

inline int bits_for(std::uint64_t n) { return n <= 1 ? 1 : static_cast<int>(std::bit_width(n - 1)); }

inline std::vector<double> dct_planes(const ChannelTensor& h) {
    const int k = h.n_subcarriers, nb = h.n_bs, nu = h.n_ue;
    const Eigen::MatrixXd dk = dct_matrix(k), dn = dct_matrix(nb);
    std::vector<double> out(2 * h.size());
    const std::size_t plane = static_cast<std::size_t>(k) * nb;
    for (int part = 0; part < 2; ++part)
        for (int u = 0; u < nu; ++u) {
            Eigen::MatrixXd x(k, nb);
            for (int kk = 0; kk < k; ++kk)
                for (int b = 0; b < nb; ++b) x(kk, b) = part == 0 ? h(kk, b, u).real() : h(kk, b, u).imag();
            const Eigen::MatrixXd c = dk * x * dn.transpose();
            double* dst = out.data() + (static_cast<std::size_t>(part) * nu + u) * plane;
            for (int kk = 0; kk < k; ++kk)
                for (int b = 0; b < nb; ++b) dst[static_cast<std::size_t>(kk) * nb + b] = c(kk, b);
        }
    return out;
}

inline ChannelTensor idct_planes(const std::vector<double>& coeffs, int k, int nb, int nu) {
    const Eigen::MatrixXd dk = dct_matrix(k), dn = dct_matrix(nb);
    ChannelTensor h(k, nb, nu);
    const std::size_t plane = static_cast<std::size_t>(k) * nb;
    for (int part = 0; part < 2; ++part)
        for (int u = 0; u < nu; ++u) {
            Eigen::MatrixXd c(k, nb);
            const double* src = coeffs.data() + (static_cast<std::size_t>(part) * nu + u) * plane;
            for (int kk = 0; kk < k; ++kk)
                for (int b = 0; b < nb; ++b) c(kk, b) = src[static_cast<std::size_t>(kk) * nb + b];
            const Eigen::MatrixXd x = dk.transpose() * c * dn;
            for (int kk = 0; kk < k; ++kk)
                for (int b = 0; b < nb; ++b) {
                    auto& v = h(kk, b, u);
                    v = part == 0 ? cplx(x(kk, b), v.imag()) : cplx(v.real(), x(kk, b));
                }
        }
    return h;
}

}  // namespace detail

/// Decodes a DCT baseline stream for a tensor of shape (k, nb, nu).
inline ChannelTensor dct_baseline_decompress(const std::vector<std::uint8_t>& bytes, std::uint64_t bit_length, int k,
                                             int nb, int nu) {
    const std::uint64_t total = 2ULL * k * nb * nu;
    BitReader in(bytes, bit_length);
    const int bits = static_cast<int>(in.get(6)) + 1;
    const double scale = std::bit_cast<float>(static_cast<std::uint32_t>(in.get(32)));
    const std::uint64_t n_keep = in.get(detail::bits_for(total + 1));
    if (n_keep > total) throw DecodeError("dct bitstream: kept count exceeds coefficient count");
    std::vector<std::uint64_t> pos;
    if (in.get(1)) {
        for (std::uint64_t i = 0; i < total; ++i)
            if (in.get(1)) pos.push_back(i);
    } else {
        for (std::uint64_t i = 0; i < n_keep; ++i) pos.push_back(in.get(detail::bits_for(total)));
    }
    if (pos.size() != n_keep) throw DecodeError("dct bitstream: position count mismatch");
    std::vector<double> coeffs(total, 0.0);
    const std::uint64_t levels = bits == 1 ? 0 : (std::uint64_t{1} << (bits - 1)) - 1;
    for (const auto p : pos) {
        if (p >= total) throw DecodeError("dct bitstream: position out of range");
        const std::uint64_t code = in.get(bits);
        if (bits == 1) {
            coeffs[p] = code ? scale : -scale;
        } else {
            const double step = scale / static_cast<double>(levels);
            coeffs[p] = (static_cast<double>(code) - static_cast<double>(levels)) * step;
        }
    }
    return detail::idct_planes(coeffs, k, nb, nu);
}

/// 2-D DCT over (K, N_B) per real/imag plane, keep the largest-magnitude
/// fraction of coefficients, uniform quantization, explicit positions.
inline DctCompressed dct_baseline_compress(const ChannelTensor& h, double keep_fraction, int bits_per_coeff) {
    require(keep_fraction > 0.0 && keep_fraction <= 1.0, "dct_baseline_compress: keep_fraction must be in (0, 1]");
    require(bits_per_coeff >= 1 && bits_per_coeff <= 32, "dct_baseline_compress: bits_per_coeff must be in [1, 32]");
    const auto coeffs = detail::dct_planes(h);
    const std::uint64_t total = coeffs.size();
    const auto n_keep = std::clamp<std::uint64_t>(
        static_cast<std::uint64_t>(std::ceil(keep_fraction * static_cast<double>(total) - 1e-9)), 1, total);

    std::vector<std::uint64_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return std::abs(coeffs[a]) > std::abs(coeffs[b]); });
    std::vector<std::uint64_t> kept(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_keep));
    std::sort(kept.begin(), kept.end());

    double scale = 0.0;
    for (auto p : kept) scale = bits_per_coeff == 1 ? scale + std::abs(coeffs[p]) : std::max(scale, std::abs(coeffs[p]));
    if (bits_per_coeff == 1) scale /= static_cast<double>(n_keep);
    const float scale_f = static_cast<float>(scale);

    BitWriter out;
    out.put(static_cast<std::uint64_t>(bits_per_coeff - 1), 6);
    out.put(std::bit_cast<std::uint32_t>(scale_f), 32);
    out.put(n_keep, detail::bits_for(total + 1));
    const std::uint64_t list_cost = n_keep * static_cast<std::uint64_t>(detail::bits_for(total));
    const bool bitmap = total <= list_cost;
    out.put(bitmap ? 1 : 0, 1);
    if (bitmap) {
        std::size_t j = 0;
        for (std::uint64_t i = 0; i < total; ++i) {
            const bool hit = j < kept.size() && kept[j] == i;
            out.put(hit ? 1 : 0, 1);
            if (hit) ++j;
        }
    } else {
        for (auto p : kept) out.put(p, detail::bits_for(total));
    }
    const std::uint64_t levels = bits_per_coeff == 1 ? 0 : (std::uint64_t{1} << (bits_per_coeff - 1)) - 1;
    for (auto p : kept) {
        if (bits_per_coeff == 1) {
            out.put(coeffs[p] >= 0 ? 1 : 0, 1);
        } else {
            const double step = scale_f > 0 ? static_cast<double>(scale_f) / static_cast<double>(levels) : 1.0;
            const double q = std::clamp(std::nearbyint(coeffs[p] / step), -static_cast<double>(levels),
                                        static_cast<double>(levels));
            out.put(static_cast<std::uint64_t>(q + static_cast<double>(levels)), bits_per_coeff);
        }
    }
    DctCompressed r;
    r.bit_length = out.bit_length();
    r.bytes = out.take();
    r.h_hat = dct_baseline_decompress(r.bytes, r.bit_length, h.n_subcarriers, h.n_bs, h.n_ue);
    r.h_hat.scenario_id = h.scenario_id;
    return r;
}

}  // namespace csilab

#endif  // CSILAB_DCT_BASELINE_HPP
