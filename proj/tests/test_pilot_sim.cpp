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

#include <gtest/gtest.h>

#include "csilab/pilot_sim.hpp"

namespace csilab {
namespace {

CMatrix random_matrix(Rng& rng, int r, int c) {
    CMatrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = complex_gaussian(rng, 1.0);
    return m;
}

Observation raw(const CMatrix& y) {
    Observation o;
    o.received = y;
    return o;
}

// Overload distortion of the clipped mid-rise quantizer on N(0, 1):
// 2 * int_limit^inf (x - top)^2 phi(x) dx, by Simpson's rule.
double overload_mse(double limit, double top) {
    const int n = 20000;
    const double a = limit, b = limit + 12.0, h = (b - a) / n;
    auto f = [&](double x) { return (x - top) * (x - top) * std::exp(-0.5 * x * x) / std::sqrt(2 * kPi); };
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return 2.0 * s * h / 3.0;
}

TEST(PilotBlock, DeclaredPowerMustMatch) {
    EXPECT_THROW(PilotBlock(CMatrix::Identity(2, 2), 1.0), InvalidArgument);
    EXPECT_NO_THROW(PilotBlock(CMatrix::Identity(2, 2), 0.5));
    Rng rng(1);
    const auto x = PilotBlock::random(3, 7, 2.0, rng);
    EXPECT_NEAR(x.symbols().squaredNorm() / 21.0, 2.0, 1e-12);
}

TEST(TransmitPilots, NoiselessIsExactProduct) {
    Rng rng(2);
    const CMatrix h = random_matrix(rng, 8, 2);
    const auto x = PilotBlock::random(2, 5, 1.0, rng);
    const auto obs = transmit_pilots(h, x, 0.0, rng);
    EXPECT_EQ(obs.received, h * x.symbols());
    EXPECT_EQ(obs.quantizer_bits, 0);
}

TEST(TransmitPilots, IdentityPilotsReturnChannel) {
    Rng rng(3);
    const CMatrix h = random_matrix(rng, 4, 3);
    const PilotBlock x(CMatrix::Identity(3, 3), 1.0 / 3.0);
    EXPECT_EQ(transmit_pilots(h, x, 0.0, rng).received, h);
}

TEST(TransmitPilots, ZeroChannelGivesNoiseOfDeclaredVariance) {
    Rng rng(4);
    const auto x = PilotBlock::random(1, 100, 1.0, rng);
    const auto obs = transmit_pilots(CMatrix::Zero(100, 1), x, 0.37, rng);
    EXPECT_NEAR(obs.received.squaredNorm() / 1e4, 0.37, 0.05 * 0.37);
}

TEST(TransmitPilots, NoiseIsZeroMean) {
    Rng rng(5);
    const CMatrix h = random_matrix(rng, 2, 1);
    const auto x = PilotBlock::random(1, 2, 1.0, rng);
    CMatrix acc = CMatrix::Zero(2, 2);
    const int n = 20000;
    for (int i = 0; i < n; ++i) acc += transmit_pilots(h, x, 1.0, rng).received;
    EXPECT_LT((acc / n - h * x.symbols()).cwiseAbs().maxCoeff(), 0.03);
}

TEST(TransmitPilots, ShapeMismatchAndNegativeNoise) {
    Rng rng(6);
    const auto x = PilotBlock::random(2, 2, 1.0, rng);
    EXPECT_THROW(transmit_pilots(CMatrix::Zero(4, 3), x, 0.0, rng), InvalidArgument);
    EXPECT_THROW(transmit_pilots(CMatrix::Zero(4, 2), x, -1.0, rng), InvalidArgument);
}

TEST(QuantizeObservation, OneBitIsSign) {
    CMatrix y(1, 1);
    y(0, 0) = cplx(0.3, -2.0);
    const auto q = quantize_observation(raw(y), 1);
    EXPECT_EQ(q.received(0, 0), cplx(1.0, -1.0));
    EXPECT_EQ(q.quantizer_bits, 1);
}

TEST(QuantizeObservation, OneBitIdempotentOnSignValues) {
    Rng rng(7);
    const auto q1 = quantize_observation(raw(random_matrix(rng, 6, 4)), 1);
    const auto q2 = quantize_observation(raw(q1.received), 1);
    EXPECT_EQ(q1.received, q2.received);
}

TEST(QuantizeObservation, OneBitScaleInvariant) {
    Rng rng(8);
    const CMatrix y = random_matrix(rng, 8, 8);
    for (double c : {1e-6, 0.5, 3.0, 1e8})
        EXPECT_EQ(quantize_observation(raw(c * y), 1).received, quantize_observation(raw(y), 1).received);
}

TEST(QuantizeObservation, EightBitDistortionMatchesUniformModel) {
    Rng rng(9);
    const CMatrix y = random_matrix(rng, 400, 250) * std::sqrt(2.0);  // unit-variance parts
    const auto q = quantize_observation(raw(y), 8);
    const double sigma = std::sqrt(y.squaredNorm() / (2.0 * y.size()));
    const double step = q.quantizer_step;
    EXPECT_NEAR(step, 6.0 * sigma / 256.0, 1e-15);
    double granular = 0.0, total = 0.0;
    std::size_t n_gran = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
        for (int part = 0; part < 2; ++part) {
            const double v = part ? y.data()[i].imag() : y.data()[i].real();
            const double w = part ? q.received.data()[i].imag() : q.received.data()[i].real();
            total += (v - w) * (v - w);
            if (std::abs(v) < 3.0 * sigma) {
                granular += (v - w) * (v - w);
                ++n_gran;
            }
        }
    // Inside the clipping range the error is uniform: step^2 / 12.
    EXPECT_NEAR(granular / n_gran / (step * step / 12.0), 1.0, 0.2);
    // Overall: granular term plus the analytic overload term at +-3 sigma.
    const double limit = 3.0, top = limit - step / sigma / 2.0;
    const double p_in = std::erf(limit / std::sqrt(2.0));
    const double expected = sigma * sigma * (p_in * (step / sigma) * (step / sigma) / 12.0 + overload_mse(limit, top));
    EXPECT_NEAR(total / (2.0 * y.size()) / expected, 1.0, 0.2);
}

TEST(QuantizeObservation, OutputsLieOnMidRiseGrid) {
    Rng rng(10);
    const auto q = quantize_observation(raw(random_matrix(rng, 20, 20)), 3);
    const double s = q.quantizer_step;
    for (Eigen::Index i = 0; i < q.received.size(); ++i)
        for (double v : {q.received.data()[i].real(), q.received.data()[i].imag()}) {
            const double k = v / s - 0.5;
            EXPECT_NEAR(k, std::round(k), 1e-9);
            EXPECT_LE(std::abs(v), 4.0 * s);
        }
}

TEST(QuantizeObservation, RejectsZeroBitsAndRequantization) {
    Rng rng(11);
    const auto o = raw(random_matrix(rng, 2, 2));
    EXPECT_THROW(quantize_observation(o, 0), InvalidArgument);
    EXPECT_THROW(quantize_observation(quantize_observation(o, 2), 2), InvalidArgument);
}

TEST(LsEstimate, IdentityPilotsNoNoiseIsExact) {
    Rng rng(12);
    const CMatrix h = random_matrix(rng, 8, 2);
    const PilotBlock x(CMatrix::Identity(2, 2), 0.5);
    EXPECT_LT((ls_estimate(transmit_pilots(h, x, 0.0, rng), x) - h).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LsEstimate, FullRankRandomPilotsRecoverChannel) {
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const int nu = 1 + trial % 4;
        const CMatrix h = random_matrix(rng, 8, nu);
        const auto x = PilotBlock::random(nu, nu + trial % 3, 1.0, rng);
        EXPECT_LT((ls_estimate(transmit_pilots(h, x, 0.0, rng), x) - h).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(LsEstimate, ShortPilotsGiveRowSpaceSolution) {
    Rng rng(14);
    const CMatrix h = random_matrix(rng, 8, 4);
    const auto x = PilotBlock::random(4, 2, 1.0, rng);
    const CMatrix r = ls_estimate(transmit_pilots(h, x, 0.0, rng), x);
    const CMatrix proj = x.symbols() * x.symbols().completeOrthogonalDecomposition().pseudoInverse();
    EXPECT_LT((r * proj - r).cwiseAbs().maxCoeff(), 1e-10);
    // Still consistent with the observation.
    EXPECT_LT((r * x.symbols() - h * x.symbols()).cwiseAbs().maxCoeff(), 1e-10);
}

}  // namespace
}  // namespace csilab
