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

#ifndef CSILAB_ENTROPY_MODEL_HPP
#define CSILAB_ENTROPY_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <json.hpp>

#include "csilab/latent.hpp"
#include "csilab/range_coder.hpp"

namespace csilab {

/// Per-feature-channel discrete PMFs over quantization indices
/// [min_index, max_index]. Every supported index has nonzero mass.
class EntropyModel {
  public:
    EntropyModel() = default;

    EntropyModel(int min_index, int max_index, std::vector<std::vector<double>> pmfs, double smoothing)
        : min_index_(min_index), max_index_(max_index), pmfs_(std::move(pmfs)), smoothing_(smoothing) {
        require(min_index_ <= max_index_, "EntropyModel: empty support");
        require(!pmfs_.empty(), "EntropyModel: no channels");
        for (auto& p : pmfs_) {
            require(p.size() == support_size(), "EntropyModel: pmf length does not match support");
            double s = 0.0;
            for (double v : p) {
                require(v > 0.0 && std::isfinite(v), "EntropyModel: probabilities must be positive");
                s += v;
            }
            for (double& v : p) v /= s;
        }
        rebuild_log_table();
    }

    /// Uniform PMF over the support for every channel.
    static EntropyModel uniform(int channels, int min_index, int max_index) {
        const auto r = static_cast<std::size_t>(max_index - min_index + 1);
        return {min_index, max_index,
                std::vector<std::vector<double>>(static_cast<std::size_t>(channels), std::vector<double>(r, 1.0)),
                0.0};
    }

    int channels() const { return static_cast<int>(pmfs_.size()); }
    int min_index() const { return min_index_; }
    int max_index() const { return max_index_; }
    double smoothing() const { return smoothing_; }
    std::size_t support_size() const { return static_cast<std::size_t>(max_index_ - min_index_ + 1); }
    const std::vector<double>& pmf(int channel) const { return pmfs_.at(static_cast<std::size_t>(channel)); }

    int clamp_index(int idx) const { return std::clamp(idx, min_index_, max_index_); }

    double probability(int channel, int idx) const {
        return pmfs_[static_cast<std::size_t>(channel)][static_cast<std::size_t>(clamp_index(idx) - min_index_)];
    }

    double bits(int channel, int idx) const {
        return neg_log2_[static_cast<std::size_t>(channel)][static_cast<std::size_t>(clamp_index(idx) - min_index_)];
    }

    /// Shannon entropy of one channel's PMF, in bits.
    double entropy(int channel) const {
        double h = 0.0;
        for (double p : pmf(channel)) h -= p * std::log2(p);
        return h;
    }

    /// Soft rate of a continuous index u: -log2 of the linearly interpolated
    /// PMF. Equals bits() at integers. Writes d(bits)/du to *grad.
    double soft_bits(int channel, double u, double* grad) const {
        const double lo = min_index_;
        const double hi = max_index_;
        if (u <= lo || u >= hi || min_index_ == max_index_) {
            if (grad) *grad = 0.0;
            return bits(channel, static_cast<int>(std::clamp(std::nearbyint(u), lo, hi)));
        }
        const double f = std::floor(u);
        const double t = u - f;
        const auto& p = pmfs_[static_cast<std::size_t>(channel)];
        const auto i = static_cast<std::size_t>(static_cast<int>(f) - min_index_);
        const double pa = p[i];
        const double pb = p[i + 1];
        const double q = (1.0 - t) * pa + t * pb;
        if (grad) *grad = -(pb - pa) / (q * std::numbers::ln2);
        return -std::log2(q);
    }

    /// Identifier of the frozen model: FNV-1a over support and PMF bits.
    std::uint64_t id() const {
        std::uint64_t h = fnv1a(&min_index_, sizeof min_index_);
        h = fnv1a(&max_index_, sizeof max_index_, h);
        for (const auto& p : pmfs_) h = fnv1a(p.data(), p.size() * sizeof(double), h);
        return h;
    }

    nlohmann::json to_json() const {
        return {{"min_index", min_index_}, {"max_index", max_index_}, {"smoothing", smoothing_}, {"pmfs", pmfs_}};
    }

    static EntropyModel from_json(const nlohmann::json& j) {
        // Stored PMFs are already normalized; renormalizing would perturb the id.
        EntropyModel m;
        m.min_index_ = j.at("min_index").get<int>();
        m.max_index_ = j.at("max_index").get<int>();
        m.smoothing_ = j.at("smoothing").get<double>();
        m.pmfs_ = j.at("pmfs").get<std::vector<std::vector<double>>>();
        require(m.min_index_ <= m.max_index_ && !m.pmfs_.empty(), "EntropyModel: malformed json");
        for (const auto& p : m.pmfs_) require(p.size() == m.support_size(), "EntropyModel: malformed json");
        m.rebuild_log_table();
        return m;
    }

  private:
    void rebuild_log_table() {
        neg_log2_.assign(pmfs_.size(), {});
        for (std::size_t c = 0; c < pmfs_.size(); ++c) {
            neg_log2_[c].resize(pmfs_[c].size());
            for (std::size_t i = 0; i < pmfs_[c].size(); ++i) neg_log2_[c][i] = -std::log2(pmfs_[c][i]);
        }
    }

    int min_index_ = 0;
    int max_index_ = 0;
    std::vector<std::vector<double>> pmfs_;
    std::vector<std::vector<double>> neg_log2_;
    double smoothing_ = 0.0;
};

struct EntropyFitOptions {
    double smoothing = 1e-3;  // total probability mass spread uniformly over the support
    int margin = 2;           // support extension beyond the observed index range
    int max_abs_index = 4095;
};

/// Per-channel histograms of quantized latents with additive smoothing.
inline EntropyModel fit_entropy_model(std::span<const LatentTensor> latents, const EntropyFitOptions& opt = {}) {
    require(!latents.empty(), "fit_entropy_model: empty latent collection");
    const int channels = latents.front().shape.channels;
    int lo = std::numeric_limits<int>::max();
    int hi = std::numeric_limits<int>::min();
    std::vector<std::vector<std::int32_t>> all;
    all.reserve(latents.size());
    for (const auto& z : latents) {
        require(z.quantized, "fit_entropy_model: latents must be quantized");
        require(z.shape.channels == channels, "fit_entropy_model: inconsistent channel counts");
        all.push_back(z.indices());
        for (auto v : all.back()) {
            lo = std::min<int>(lo, v);
            hi = std::max<int>(hi, v);
        }
    }
    if (lo > hi) lo = hi = 0;  // all latents empty
    lo = std::max(lo - opt.margin, -opt.max_abs_index);
    hi = std::min(hi + opt.margin, opt.max_abs_index);
    const auto r = static_cast<std::size_t>(hi - lo + 1);

    std::vector<std::vector<double>> counts(static_cast<std::size_t>(channels), std::vector<double>(r, 0.0));
    for (std::size_t n = 0; n < latents.size(); ++n) {
        const std::size_t plane = latents[n].shape.plane();
        for (std::size_t i = 0; i < all[n].size(); ++i) {
            const int idx = std::clamp<int>(all[n][i], lo, hi);
            counts[i / plane][static_cast<std::size_t>(idx - lo)] += 1.0;
        }
    }
    for (auto& c : counts) {
        double total = 0.0;
        for (double v : c) total += v;
        for (double& v : c) v = (total > 0 ? (1.0 - opt.smoothing) * v / total : 0.0) + opt.smoothing / r;
        if (total == 0.0)
            for (double& v : c) v = 1.0 / r;
    }
    return {lo, hi, std::move(counts), opt.smoothing};
}

struct RateReport {
    double bits = 0.0;
    std::size_t clamped = 0;  // indices outside the support, charged at the nearest supported index
};

/// Model cross-entropy of a quantized latent: sum of -log2 p(index).
inline RateReport entropy_rate(const LatentTensor& z, const EntropyModel& em) {
    require(z.quantized, "entropy_rate: latent must be quantized");
    require(z.shape.channels == em.channels(), "entropy_rate: channel count differs from entropy model");
    RateReport r;
    const auto idx = z.indices();
    const std::size_t plane = z.shape.plane();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < em.min_index() || idx[i] > em.max_index()) ++r.clamped;
        r.bits += em.bits(static_cast<int>(i / plane), idx[i]);
    }
    return r;
}

// --- binarization and arithmetic coding --------------------------------------

/// Exp-Golomb style bins of an index: [nonzero] [negative] [unary exponent] [suffix].
inline std::vector<bool> binarize(int v) {
    std::vector<bool> bins;
    bins.push_back(v != 0);
    if (v == 0) return bins;
    bins.push_back(v < 0);
    const auto m = static_cast<std::uint32_t>(std::abs(v));  // m >= 1; code m - 1 with order-0 Exp-Golomb
    int k = 0;
    while ((m >> (k + 1)) != 0) ++k;  // k = floor(log2(m))
    for (int i = 0; i < k; ++i) bins.push_back(true);
    bins.push_back(false);
    for (int i = k - 1; i >= 0; --i) bins.push_back(((m >> i) & 1u) != 0);
    return bins;
}

/// Binarization trie over the model support. Bins where one branch holds no
/// supported index are implied and never coded.
class BinTrie {
  public:
    explicit BinTrie(const EntropyModel& em) {
        nodes_.push_back({});
        for (int v = em.min_index(); v <= em.max_index(); ++v) {
            int node = 0;
            for (bool b : binarize(v)) {
                const int side = b ? 1 : 0;
                if (nodes_[static_cast<std::size_t>(node)].child[side] < 0) {
                    nodes_[static_cast<std::size_t>(node)].child[side] = static_cast<int>(nodes_.size());
                    nodes_.push_back({});
                }
                node = nodes_[static_cast<std::size_t>(node)].child[side];
            }
            nodes_[static_cast<std::size_t>(node)].symbol = v;
        }
    }

    struct Node {
        int child[2] = {-1, -1};
        int symbol = kNoSymbol;
    };
    static constexpr int kNoSymbol = std::numeric_limits<int>::min();

    const std::vector<Node>& nodes() const { return nodes_; }

    /// Initial contexts for one channel: P(1) at each binary node from the PMF.
    std::vector<AdaptiveBit> contexts(const EntropyModel& em, int channel) const {
        std::vector<double> mass(nodes_.size(), 0.0);
        subtree_mass(0, em, channel, mass);
        std::vector<AdaptiveBit> ctx(nodes_.size());
        for (std::size_t n = 0; n < nodes_.size(); ++n) {
            const auto& nd = nodes_[n];
            if (nd.child[0] >= 0 && nd.child[1] >= 0)
                ctx[n] = AdaptiveBit(mass[static_cast<std::size_t>(nd.child[1])] / mass[n]);
        }
        return ctx;
    }

  private:
    double subtree_mass(int node, const EntropyModel& em, int channel, std::vector<double>& mass) const {
        const auto& nd = nodes_[static_cast<std::size_t>(node)];
        double m = nd.symbol != kNoSymbol ? em.probability(channel, nd.symbol) : 0.0;
        for (int c : nd.child)
            if (c >= 0) m += subtree_mass(c, em, channel, mass);
        mass[static_cast<std::size_t>(node)] = m;
        return m;
    }

    std::vector<Node> nodes_;
};

struct LatentBitstream {
    std::vector<std::uint8_t> bytes;
    std::uint64_t bit_length = 0;
    std::uint32_t symbol_count = 0;
    std::uint64_t pmf_id = 0;
};

/// Lossless coding of a quantized latent, channel-major scan, one adaptive
/// context set per feature channel. Out-of-support indices are clamped.
inline LatentBitstream arith_encode(const LatentTensor& z, const EntropyModel& em) {
    require(z.quantized, "arith_encode: latent must be quantized");
    require(z.shape.channels == em.channels() || z.shape.size() == 0,
            "arith_encode: channel count differs from entropy model");
    const BinTrie trie(em);
    const auto& nodes = trie.nodes();
    const auto idx = z.indices();
    const std::size_t plane = z.shape.plane();
    RangeEncoder enc;
    std::vector<std::vector<AdaptiveBit>> ctx;
    for (int c = 0; c < em.channels(); ++c) ctx.push_back(trie.contexts(em, c));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        auto& cctx = ctx[i / plane];
        int node = 0;
        for (bool b : binarize(em.clamp_index(idx[i]))) {
            const auto& nd = nodes[static_cast<std::size_t>(node)];
            if (nd.child[0] >= 0 && nd.child[1] >= 0) enc.encode(b, cctx[static_cast<std::size_t>(node)]);
            node = nd.child[b ? 1 : 0];
        }
    }
    LatentBitstream bs;
    bs.bytes = enc.finish();
    bs.bit_length = 8 * bs.bytes.size();
    bs.symbol_count = static_cast<std::uint32_t>(idx.size());
    bs.pmf_id = em.id();
    return bs;
}

inline LatentTensor arith_decode(const LatentBitstream& bs, const EntropyModel& em, LatentShape shape, double step) {
    if (bs.pmf_id != em.id()) throw DecodeError("arith_decode: bitstream was coded with a different entropy model");
    if (bs.symbol_count != shape.size()) throw DecodeError("arith_decode: symbol count does not match latent shape");
    if (bs.bit_length > 8 * bs.bytes.size()) throw DecodeError("arith_decode: bit_length exceeds payload");
    require(shape.size() == 0 || shape.channels == em.channels(), "arith_decode: channel count differs from entropy model");
    const BinTrie trie(em);
    const auto& nodes = trie.nodes();
    std::vector<std::vector<AdaptiveBit>> ctx;
    for (int c = 0; c < em.channels(); ++c) ctx.push_back(trie.contexts(em, c));
    RangeDecoder dec(bs.bytes);
    std::vector<std::int32_t> idx(shape.size());
    const std::size_t plane = shape.plane();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        auto& cctx = ctx[i / plane];
        int node = 0;
        while (nodes[static_cast<std::size_t>(node)].symbol == BinTrie::kNoSymbol) {
            const auto& nd = nodes[static_cast<std::size_t>(node)];
            bool b;
            if (nd.child[0] >= 0 && nd.child[1] >= 0)
                b = dec.decode(cctx[static_cast<std::size_t>(node)]);
            else
                b = nd.child[1] >= 0;
            node = nd.child[b ? 1 : 0];
            if (node < 0) throw DecodeError("arith_decode: invalid bin sequence");
        }
        idx[i] = nodes[static_cast<std::size_t>(node)].symbol;
    }
    dec.finish();
    return LatentTensor::from_indices(shape, idx, step);
}

}  // namespace csilab

#endif  // CSILAB_ENTROPY_MODEL_HPP
