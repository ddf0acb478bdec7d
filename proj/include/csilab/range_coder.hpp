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

#ifndef CSILAB_RANGE_CODER_HPP
#define CSILAB_RANGE_CODER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "csilab/common.hpp"

namespace csilab {

/// Adaptive binary probability with integer counts, so that encoder and
/// decoder evolve bit-identically on every platform.
class AdaptiveBit {
  public:
    static constexpr std::uint32_t kPriorTotal = 4096;
    static constexpr std::uint32_t kIncrement = 32;
    static constexpr std::uint32_t kRescaleAt = 1u << 16;

    AdaptiveBit() : AdaptiveBit(0.5) {}

    /// `p_one` is the initial probability of a 1 bin.
    explicit AdaptiveBit(double p_one) {
        p_one = std::clamp(p_one, 0.0, 1.0);
        c1_ = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::llround(p_one * kPriorTotal)));
        c0_ = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::llround((1.0 - p_one) * kPriorTotal)));
    }

    /// P(bit = 1) in 1/65536 units, kept inside [1, 65535].
    std::uint32_t p_one16() const {
        const std::uint64_t p = (static_cast<std::uint64_t>(c1_) << 16) / (c0_ + c1_);
        return static_cast<std::uint32_t>(std::clamp<std::uint64_t>(p, 1, 65535));
    }

    void update(bool bit) {
        (bit ? c1_ : c0_) += kIncrement;
        if (c0_ + c1_ > kRescaleAt) {
            c0_ = (c0_ + 1) / 2;
            c1_ = (c1_ + 1) / 2;
        }
    }

  private:
    std::uint32_t c0_ = 1;
    std::uint32_t c1_ = 1;
};

/// Binary range encoder, 32-bit window with carry propagation into the
/// emitted bytes. Termination emits the fewest bytes that pin the interval;
/// the decoder reads zeros past the end.
class RangeEncoder {
  public:
    void encode(bool bit, std::uint32_t p_one16) {
        const std::uint32_t bound = (range_ >> 16) * p_one16;
        if (bit) {
            range_ = bound;
        } else {
            low_ += bound;
            range_ -= bound;
            if (low_ > kMask) carry();
        }
        while (range_ < kTop) shift();
    }

    void encode(bool bit, AdaptiveBit& ctx) {
        encode(bit, ctx.p_one16());
        ctx.update(bit);
    }

    void encode_bypass(bool bit) { encode(bit, 1u << 15); }

    std::vector<std::uint8_t> finish() {
        for (int n = 0; n <= 4; ++n) {
            const std::uint64_t mask = n == 4 ? 0 : (std::uint64_t{1} << (32 - 8 * n)) - 1;
            const std::uint64_t v = (low_ + mask) & ~mask;
            if (v < low_ + range_) {
                low_ = v;
                if (low_ > kMask) carry();
                for (int i = 0; i < n; ++i) shift();
                break;
            }
        }
        while (!out_.empty() && out_.back() == 0) out_.pop_back();
        return std::move(out_);
    }

  private:
    static constexpr std::uint64_t kMask = 0xFFFFFFFFULL;
    static constexpr std::uint32_t kTop = 1u << 24;

    void carry() {
        low_ &= kMask;
        for (auto it = out_.rbegin(); it != out_.rend(); ++it) {
            if (++*it != 0) return;
        }
    }

    void shift() {
        out_.push_back(static_cast<std::uint8_t>(low_ >> 24));
        low_ = (low_ << 8) & kMask;
        range_ <<= 8;
    }

    std::uint64_t low_ = 0;
    std::uint32_t range_ = 0xFFFFFFFFu;
    std::vector<std::uint8_t> out_;
};

class RangeDecoder {
  public:
    explicit RangeDecoder(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
        if (!bytes_.empty() && bytes_.back() == 0) throw DecodeError("range decoder: payload has a trailing zero byte");
        for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next();
        check();
    }

    bool decode(std::uint32_t p_one16) {
        const std::uint32_t bound = (range_ >> 16) * p_one16;
        bool bit;
        if (code_ < bound) {
            range_ = bound;
            bit = true;
        } else {
            code_ -= bound;
            low_ += bound;
            range_ -= bound;
            bit = false;
        }
        while (range_ < (1u << 24)) {
            code_ = (code_ << 8) | next();
            low_ <<= 8;
            range_ <<= 8;
        }
        check();
        return bit;
    }

    bool decode(AdaptiveBit& ctx) {
        const bool bit = decode(ctx.p_one16());
        ctx.update(bit);
        return bit;
    }

    bool decode_bypass() { return decode(1u << 15); }

    /// Rejects any byte past the encoder's shortest termination. low_ mirrors
    /// the encoder's low modulo 2^32, which fixes that termination exactly.
    void finish() const {
        std::size_t tail = 4;
        for (int n = 0; n <= 4; ++n) {
            const std::uint64_t mask = n == 4 ? 0 : (std::uint64_t{1} << (32 - 8 * n)) - 1;
            const std::uint64_t low = low_;
            if (((low + mask) & ~mask) < low + range_) {
                tail = static_cast<std::size_t>(n);
                break;
            }
        }
        if (bytes_.size() > requested_ - 4 + tail) throw DecodeError("range decoder: unconsumed trailing bytes");
    }

  private:
    std::uint32_t next() {
        const std::size_t i = requested_++;
        return i < bytes_.size() ? bytes_[i] : 0u;
    }

    void check() const {
        if (code_ >= range_) throw DecodeError("range decoder: code outside the current interval");
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t requested_ = 0;
    std::uint32_t code_ = 0;
    std::uint32_t low_ = 0;
    std::uint32_t range_ = 0xFFFFFFFFu;
};

}  // namespace csilab

#endif  // CSILAB_RANGE_CODER_HPP
