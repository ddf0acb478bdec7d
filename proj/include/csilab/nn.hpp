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

#ifndef CSILAB_NN_HPP
#define CSILAB_NN_HPP

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "csilab/common.hpp"

namespace csilab::nn {

struct Shape3 {
    int c = 0;
    int h = 0;
    int w = 0;

    std::size_t size() const { return static_cast<std::size_t>(c) * h * w; }
    bool operator==(const Shape3&) const = default;
};

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-call activations kept for the backward pass. Owned by the caller, so
/// a const network can serve several concurrent forward/backward sequences.
template <class T>
struct Cache {
    Shape3 in;
    std::vector<T> x;
    std::vector<T> cols;
    std::vector<Cache> sub;
};

template <class T>
class Layer {
  public:
    virtual ~Layer() = default;
    virtual std::size_t param_count() const = 0;
    virtual Shape3 output_shape(Shape3 in) const = 0;
    virtual void init(std::span<T> p, Rng& rng) const = 0;
    virtual void forward(std::span<const T> p, Shape3 in, std::span<const T> x, std::vector<T>& y,
                         Cache<T>& cache) const = 0;
    /// Accumulates parameter gradients into `gp` and writes the input gradient to `gx`.
    virtual void backward(std::span<const T> p, const Cache<T>& cache, std::span<const T> gy, std::vector<T>& gx,
                          std::span<T> gp) const = 0;
    virtual nlohmann::json describe() const = 0;
};

struct ConvSpec {
    int in = 1;
    int out = 1;
    int kh = 3;
    int kw = 3;
    int stride_h = 1;
    int stride_w = 1;
    int up_h = 1;  // pixel-shuffle upsampling applied after the convolution
    int up_w = 1;
    double init_gain = 1.0;
};

/// 2-D convolution with zero "same" padding, integer stride, and optional
/// sub-pixel (depth-to-space) upsampling of the result.
template <class T>
class Conv2d final : public Layer<T> {
  public:
    explicit Conv2d(ConvSpec s) : s_(s) {
        require(s.in >= 1 && s.out >= 1 && s.kh >= 1 && s.kw >= 1, "Conv2d: sizes must be positive");
        require(s.stride_h >= 1 && s.stride_w >= 1 && s.up_h >= 1 && s.up_w >= 1, "Conv2d: factors must be >= 1");
    }

    int out_eff() const { return s_.out * s_.up_h * s_.up_w; }
    std::size_t fan_in() const { return static_cast<std::size_t>(s_.in) * s_.kh * s_.kw; }
    std::size_t param_count() const override { return out_eff() * fan_in() + out_eff(); }

    Shape3 output_shape(Shape3 in) const override {
        require(in.c == s_.in, "Conv2d: input channel count " + std::to_string(in.c) + " != " + std::to_string(s_.in));
        require(in.h % s_.stride_h == 0 && in.w % s_.stride_w == 0,
                "Conv2d: input " + std::to_string(in.h) + "x" + std::to_string(in.w) + " not divisible by stride");
        return {s_.out, in.h / s_.stride_h * s_.up_h, in.w / s_.stride_w * s_.up_w};
    }

    void init(std::span<T> p, Rng& rng) const override {
        const double bound = s_.init_gain * std::sqrt(6.0 / static_cast<double>(fan_in()));
        std::uniform_real_distribution<double> u(-bound, bound);
        const std::size_t nw = out_eff() * fan_in();
        for (std::size_t i = 0; i < nw; ++i) p[i] = static_cast<T>(u(rng));
        for (std::size_t i = nw; i < p.size(); ++i) p[i] = T(0);
    }

    void forward(std::span<const T> p, Shape3 in, std::span<const T> x, std::vector<T>& y,
                 Cache<T>& cache) const override {
        const Shape3 o = output_shape(in);
        const int ho = in.h / s_.stride_h;
        const int wo = in.w / s_.stride_w;
        const auto np = static_cast<Eigen::Index>(ho) * wo;
        const auto rows = static_cast<Eigen::Index>(fan_in());
        cache.in = in;
        im2col(in, x, ho, wo, cache.cols);
        Eigen::Map<const RowMat<T>> wmat(p.data(), out_eff(), rows);
        Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bias(p.data() + out_eff() * rows, out_eff());
        Eigen::Map<const RowMat<T>> cols(cache.cols.data(), rows, np);
        y.resize(o.size());
        if (s_.up_h == 1 && s_.up_w == 1) {
            Eigen::Map<RowMat<T>> ym(y.data(), out_eff(), np);
            ym.noalias() = wmat * cols;
            ym.colwise() += bias;
        } else {
            RowMat<T> tmp = wmat * cols;
            tmp.colwise() += bias;
            shuffle(tmp.data(), y.data(), ho, wo, false);
        }
    }

    void backward(std::span<const T> p, const Cache<T>& cache, std::span<const T> gy, std::vector<T>& gx,
                  std::span<T> gp) const override {
        const Shape3 in = cache.in;
        const int ho = in.h / s_.stride_h;
        const int wo = in.w / s_.stride_w;
        const auto np = static_cast<Eigen::Index>(ho) * wo;
        const auto rows = static_cast<Eigen::Index>(fan_in());
        Eigen::Map<const RowMat<T>> wmat(p.data(), out_eff(), rows);
        Eigen::Map<const RowMat<T>> cols(cache.cols.data(), rows, np);
        RowMat<T> g(out_eff(), np);
        if (s_.up_h == 1 && s_.up_w == 1)
            std::copy(gy.begin(), gy.end(), g.data());
        else
            shuffle(gy.data(), g.data(), ho, wo, true);
        Eigen::Map<RowMat<T>> gw(gp.data(), out_eff(), rows);
        Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> gb(gp.data() + out_eff() * rows, out_eff());
        gw.noalias() += g * cols.transpose();
        gb += g.rowwise().sum();
        RowMat<T> gcols = wmat.transpose() * g;
        col2im(in, gcols.data(), ho, wo, gx);
    }

    nlohmann::json describe() const override {
        return {{"type", "conv"},   {"in", s_.in},     {"out", s_.out},   {"kernel", {s_.kh, s_.kw}},
                {"stride", {s_.stride_h, s_.stride_w}}, {"upsample", {s_.up_h, s_.up_w}}};
    }

    const ConvSpec& spec() const { return s_; }

  private:
    void im2col(Shape3 in, std::span<const T> x, int ho, int wo, std::vector<T>& cols) const {
        const int ph = (s_.kh - 1) / 2;
        const int pw = (s_.kw - 1) / 2;
        const std::size_t np = static_cast<std::size_t>(ho) * wo;
        cols.assign(fan_in() * np, T(0));
        std::size_t r = 0;
        for (int ci = 0; ci < in.c; ++ci)
            for (int ky = 0; ky < s_.kh; ++ky)
                for (int kx = 0; kx < s_.kw; ++kx, ++r) {
                    T* row = cols.data() + r * np;
                    for (int oy = 0; oy < ho; ++oy) {
                        const int iy = oy * s_.stride_h + ky - ph;
                        if (iy < 0 || iy >= in.h) continue;
                        const T* src = x.data() + (static_cast<std::size_t>(ci) * in.h + iy) * in.w;
                        for (int ox = 0; ox < wo; ++ox) {
                            const int ix = ox * s_.stride_w + kx - pw;
                            if (ix >= 0 && ix < in.w) row[oy * wo + ox] = src[ix];
                        }
                    }
                }
    }

    void col2im(Shape3 in, const T* gcols, int ho, int wo, std::vector<T>& gx) const {
        const int ph = (s_.kh - 1) / 2;
        const int pw = (s_.kw - 1) / 2;
        const std::size_t np = static_cast<std::size_t>(ho) * wo;
        gx.assign(in.size(), T(0));
        std::size_t r = 0;
        for (int ci = 0; ci < in.c; ++ci)
            for (int ky = 0; ky < s_.kh; ++ky)
                for (int kx = 0; kx < s_.kw; ++kx, ++r) {
                    const T* row = gcols + r * np;
                    for (int oy = 0; oy < ho; ++oy) {
                        const int iy = oy * s_.stride_h + ky - ph;
                        if (iy < 0 || iy >= in.h) continue;
                        T* dst = gx.data() + (static_cast<std::size_t>(ci) * in.h + iy) * in.w;
                        for (int ox = 0; ox < wo; ++ox) {
                            const int ix = ox * s_.stride_w + kx - pw;
                            if (ix >= 0 && ix < in.w) dst[ix] += row[oy * wo + ox];
                        }
                    }
                }
    }

    // Depth-to-space: channel co*(uh*uw) + dy*uw + dx maps to pixel (oy*uh+dy, ox*uw+dx).
    // inverse = false copies conv -> image, inverse = true copies image -> conv.
    void shuffle(const T* src, T* dst, int ho, int wo, bool inverse) const {
        const int uh = s_.up_h;
        const int uw = s_.up_w;
        const int oh = ho * uh;
        const int ow = wo * uw;
        for (int co = 0; co < s_.out; ++co)
            for (int dy = 0; dy < uh; ++dy)
                for (int dx = 0; dx < uw; ++dx) {
                    const std::size_t ce = (static_cast<std::size_t>(co) * uh + dy) * uw + dx;
                    for (int y = 0; y < ho; ++y)
                        for (int x = 0; x < wo; ++x) {
                            const std::size_t a = (ce * ho + y) * wo + x;
                            const std::size_t b = (static_cast<std::size_t>(co) * oh + y * uh + dy) * ow + x * uw + dx;
                            if (inverse)
                                dst[a] = src[b];
                            else
                                dst[b] = src[a];
                        }
                }
    }

    ConvSpec s_;
};

/// Parametric ReLU with one learned slope per channel.
template <class T>
class PReLU final : public Layer<T> {
  public:
    explicit PReLU(int channels, double init_slope = 0.25) : channels_(channels), init_slope_(init_slope) {
        require(channels >= 1, "PReLU: channels must be positive");
    }

    std::size_t param_count() const override { return static_cast<std::size_t>(channels_); }
    Shape3 output_shape(Shape3 in) const override {
        require(in.c == channels_, "PReLU: channel mismatch");
        return in;
    }
    void init(std::span<T> p, Rng&) const override {
        for (auto& v : p) v = static_cast<T>(init_slope_);
    }

    void forward(std::span<const T> p, Shape3 in, std::span<const T> x, std::vector<T>& y,
                 Cache<T>& cache) const override {
        output_shape(in);
        cache.in = in;
        cache.x.assign(x.begin(), x.end());
        y.resize(x.size());
        const std::size_t plane = static_cast<std::size_t>(in.h) * in.w;
        for (int c = 0; c < in.c; ++c) {
            const T a = p[static_cast<std::size_t>(c)];
            for (std::size_t i = c * plane; i < (c + 1) * plane; ++i) y[i] = x[i] > T(0) ? x[i] : a * x[i];
        }
    }

    void backward(std::span<const T> p, const Cache<T>& cache, std::span<const T> gy, std::vector<T>& gx,
                  std::span<T> gp) const override {
        const Shape3 in = cache.in;
        const std::size_t plane = static_cast<std::size_t>(in.h) * in.w;
        gx.resize(gy.size());
        for (int c = 0; c < in.c; ++c) {
            const T a = p[static_cast<std::size_t>(c)];
            T ga = T(0);
            for (std::size_t i = c * plane; i < (c + 1) * plane; ++i) {
                const T xv = cache.x[i];
                if (xv > T(0)) {
                    gx[i] = gy[i];
                } else {
                    gx[i] = a * gy[i];
                    ga += gy[i] * xv;
                }
            }
            gp[static_cast<std::size_t>(c)] += ga;
        }
    }

    nlohmann::json describe() const override { return {{"type", "prelu"}, {"channels", channels_}}; }

  private:
    int channels_;
    double init_slope_;
};

/// x + conv(prelu(conv(x))), stride 1, no activation after the addition.
template <class T>
class ResidualBlock final : public Layer<T> {
  public:
    ResidualBlock(int channels, int kh, int kw)
        : channels_(channels),
          conv1_({channels, channels, kh, kw, 1, 1, 1, 1, 1.0 / std::sqrt(1.0 + 0.0625)}),
          act_(channels),
          conv2_({channels, channels, kh, kw, 1, 1, 1, 1, 0.1}) {}

    std::size_t param_count() const override {
        return conv1_.param_count() + act_.param_count() + conv2_.param_count();
    }
    Shape3 output_shape(Shape3 in) const override { return conv2_.output_shape(act_.output_shape(conv1_.output_shape(in))); }

    void init(std::span<T> p, Rng& rng) const override {
        auto [a, b, c] = split(p);
        conv1_.init(a, rng);
        act_.init(b, rng);
        conv2_.init(c, rng);
    }

    void forward(std::span<const T> p, Shape3 in, std::span<const T> x, std::vector<T>& y,
                 Cache<T>& cache) const override {
        auto [a, b, c] = split(p);
        cache.in = in;
        cache.sub.resize(3);
        std::vector<T> t1, t2;
        conv1_.forward(a, in, x, t1, cache.sub[0]);
        act_.forward(b, in, t1, t2, cache.sub[1]);
        conv2_.forward(c, in, t2, y, cache.sub[2]);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[i];
    }

    void backward(std::span<const T> p, const Cache<T>& cache, std::span<const T> gy, std::vector<T>& gx,
                  std::span<T> gp) const override {
        auto [a, b, c] = split(p);
        auto [ga, gb, gc] = split(gp);
        std::vector<T> g2, g1;
        conv2_.backward(c, cache.sub[2], gy, g2, gc);
        act_.backward(b, cache.sub[1], g2, g1, gb);
        conv1_.backward(a, cache.sub[0], g1, gx, ga);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i];
    }

    nlohmann::json describe() const override {
        const auto& s = conv1_.spec();
        return {{"type", "residual"}, {"channels", channels_}, {"kernel", {s.kh, s.kw}}};
    }

  private:
    template <class U>
    std::tuple<std::span<U>, std::span<U>, std::span<U>> split(std::span<U> p) const {
        const std::size_t n1 = conv1_.param_count();
        const std::size_t n2 = act_.param_count();
        return {p.subspan(0, n1), p.subspan(n1, n2), p.subspan(n1 + n2)};
    }

    int channels_;
    Conv2d<T> conv1_;
    PReLU<T> act_;
    Conv2d<T> conv2_;
};

/// Chain of layers over a flat parameter vector (layer order).
template <class T>
class Sequential {
  public:
    Sequential() = default;
    Sequential(Sequential&&) noexcept = default;
    Sequential& operator=(Sequential&&) noexcept = default;

    void add(std::unique_ptr<Layer<T>> layer) {
        offsets_.push_back(param_count_);
        param_count_ += layer->param_count();
        layers_.push_back(std::move(layer));
    }

    std::size_t param_count() const { return param_count_; }
    std::size_t size() const { return layers_.size(); }

    Shape3 output_shape(Shape3 in) const {
        for (const auto& l : layers_) in = l->output_shape(in);
        return in;
    }

    void init(std::span<T> p, Rng& rng) const {
        for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->init(slice(p, i), rng);
    }

    std::vector<T> forward(std::span<const T> p, Shape3 in, std::span<const T> x,
                           std::vector<Cache<T>>& caches) const {
        require(x.size() == in.size(), "Sequential: input size does not match its shape");
        caches.resize(layers_.size());
        std::vector<T> cur(x.begin(), x.end());
        std::vector<T> next;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            layers_[i]->forward(slice(p, i), in, cur, next, caches[i]);
            in = layers_[i]->output_shape(in);
            std::swap(cur, next);
        }
        return cur;
    }

    /// Accumulates into `gp` (same layout as the parameters); returns the input gradient.
    std::vector<T> backward(std::span<const T> p, const std::vector<Cache<T>>& caches, std::span<const T> gy,
                            std::span<T> gp) const {
        std::vector<T> cur(gy.begin(), gy.end());
        std::vector<T> next;
        for (std::size_t i = layers_.size(); i-- > 0;) {
            layers_[i]->backward(slice(p, i), caches[i], cur, next, slice(gp, i));
            std::swap(cur, next);
        }
        return cur;
    }

    nlohmann::json describe() const {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& l : layers_) j.push_back(l->describe());
        return j;
    }

  private:
    template <class U>
    std::span<U> slice(std::span<U> p, std::size_t i) const {
        return p.subspan(offsets_[i], layers_[i]->param_count());
    }

    std::vector<std::unique_ptr<Layer<T>>> layers_;
    std::vector<std::size_t> offsets_;
    std::size_t param_count_ = 0;
};

/// Adam with bias correction.
template <class T>
class Adam {
  public:
    explicit Adam(std::size_t n, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

    void set_learning_rate(double lr) { lr_ = lr; }
    double learning_rate() const { return lr_; }

    void step(std::span<T> params, std::span<const T> grad) {
        ++t_;
        const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double g = grad[i];
            m_[i] = b1_ * m_[i] + (1.0 - b1_) * g;
            v_[i] = b2_ * v_[i] + (1.0 - b2_) * g * g;
            params[i] -= static_cast<T>(lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_));
        }
    }

  private:
    double lr_, b1_, b2_, eps_;
    std::vector<double> m_, v_;
    long long t_ = 0;
};

}  // namespace csilab::nn

#endif  // CSILAB_NN_HPP
