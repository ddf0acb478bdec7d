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

#ifndef CSILAB_LATENT_HPP
#define CSILAB_LATENT_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "csilab/common.hpp"

namespace csilab {

struct LatentShape {
    int channels = 0;
    int height = 0;
    int width = 0;

    std::size_t size() const { return static_cast<std::size_t>(channels) * height * width; }
    std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
    bool operator==(const LatentShape&) const = default;
};

/// Encoder output, (channels x height x width) row-major.
struct LatentTensor {
    LatentShape shape;
    std::vector<double> values;
    bool quantized = false;
    double step = 1.0;  // quantizer step, meaningful when quantized

    LatentTensor() = default;
    explicit LatentTensor(LatentShape s) : shape(s), values(s.size(), 0.0) {}

    /// Integer quantization indices; only valid for quantized tensors.
    std::vector<std::int32_t> indices() const {
        require(quantized, "LatentTensor::indices: tensor is not quantized");
        std::vector<std::int32_t> out(values.size());
        for (std::size_t i = 0; i < values.size(); ++i)
            out[i] = static_cast<std::int32_t>(std::nearbyint(values[i] / step));
        return out;
    }

    static LatentTensor from_indices(LatentShape s, const std::vector<std::int32_t>& idx, double step) {
        require(idx.size() == s.size(), "LatentTensor::from_indices: index count does not match shape");
        LatentTensor z(s);
        z.quantized = true;
        z.step = step;
        for (std::size_t i = 0; i < idx.size(); ++i) z.values[i] = step * idx[i];
        return z;
    }

    bool operator==(const LatentTensor&) const = default;
};

/// Rounds to the nearest multiple of `step`, ties to even. The training-mode
/// backward pass of this operation is the identity (straight-through).
inline LatentTensor quantize_latent(const LatentTensor& z, double step) {
    require(step > 0.0 && std::isfinite(step), "quantize_latent: step must be > 0");
    require(!z.quantized, "quantize_latent: tensor is already quantized");
    LatentTensor q = z;
    q.quantized = true;
    q.step = step;
    for (auto& v : q.values) v = step * std::nearbyint(v / step);
    return q;
}

}  // namespace csilab

#endif  // CSILAB_LATENT_HPP
