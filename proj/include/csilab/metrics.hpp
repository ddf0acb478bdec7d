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

#ifndef CSILAB_METRICS_HPP
#define CSILAB_METRICS_HPP

#include <span>

#include "csilab/channel_gen.hpp"
#include "csilab/entropy_model.hpp"

namespace csilab {

inline constexpr double kNmseFloorDb = -120.0;

/// ||h - h_hat||^2 / ||h||^2.
inline double nmse_ratio(const ChannelTensor& h, const ChannelTensor& h_hat) {
    require(h.same_shape(h_hat), "nmse: shape mismatch");
    const double ref = h.squared_norm();
    require(ref > 0.0, "nmse: zero reference tensor");
    double err = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) err += std::norm(h.data[i] - h_hat.data[i]);
    return err / ref;
}

inline double ratio_to_db(double ratio) {
    return ratio > 0.0 ? std::max(kNmseFloorDb, linear_to_db(ratio)) : kNmseFloorDb;
}

/// Per-sample NMSE in dB, floored at -120 dB.
inline double nmse_db(const ChannelTensor& h, const ChannelTensor& h_hat) { return ratio_to_db(nmse_ratio(h, h_hat)); }

/// Dataset NMSE: 10 log10 of the mean per-sample ratio.
inline double mean_nmse_db(std::span<const double> ratios) {
    if (ratios.empty()) return kNmseFloorDb;
    double s = 0.0;
    for (double r : ratios) s += r;
    return ratio_to_db(s / static_cast<double>(ratios.size()));
}

struct BitsPerEntry {
    double payload = 0.0;
    double header = 0.0;
    double total() const { return payload + header; }
};

/// Bits per complex CSI entry; payload and header are reported separately.
inline BitsPerEntry bits_per_entry(const LatentBitstream& bs, int k, int nb, int nu, std::size_t header_bytes = 0) {
    const double entries = static_cast<double>(k) * nb * nu;
    require(entries > 0, "bits_per_entry: empty shape");
    return {static_cast<double>(bs.bit_length) / entries, 8.0 * static_cast<double>(header_bytes) / entries};
}

}  // namespace csilab

#endif  // CSILAB_METRICS_HPP
