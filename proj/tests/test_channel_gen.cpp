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

#include <limits>

#include "csilab/channel_gen.hpp"
#include "csilab/dataset.hpp"
#include "test_util.hpp"

namespace csilab {
namespace {

MultipathParams single_path(double delay, double aoa, double aod, cplx gain = 1.0) {
    MultipathParams mp;
    mp.n_paths = 1;
    mp.gains = {gain};
    mp.delays = {delay};
    mp.aoa = {aoa};
    mp.aod = {aod};
    return mp;
}

/// Random multipath whose delays sit on the sample grid (n / f_s, n < K).
MultipathParams grid_multipath(Rng& rng, int k, double fs) {
    std::uniform_int_distribution<int> paths(1, 6), tap(0, k - 1);
    std::uniform_real_distribution<double> angle(-kPi / 2, kPi / 2);
    MultipathParams mp;
    mp.n_paths = paths(rng);
    for (int l = 0; l < mp.n_paths; ++l) {
        mp.gains.push_back(complex_gaussian(rng, 1.0));
        mp.delays.push_back(tap(rng) / fs);
        mp.aoa.push_back(angle(rng));
        mp.aod.push_back(angle(rng));
    }
    return mp;
}

TEST(SteeringVector, BroadsideIsConstant) {
    const CVector a = steering_vector(0.0, 4, 0.5);
    for (int m = 0; m < 4; ++m) EXPECT_NEAR(std::abs(a[m] - cplx(0.5, 0.0)), 0.0, 1e-15);
}

TEST(SteeringVector, EndfireHalfWavelengthAlternates) {
    const CVector a = steering_vector(kPi / 2, 2, 0.5);
    const double r = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(std::abs(a[0] - cplx(r, 0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(a[1] - cplx(-r, 0)), 0.0, 1e-15);
}

TEST(SteeringVector, UnitNormProperty) {
    Rng rng(7);
    std::uniform_real_distribution<double> angle(-10.0, 10.0), d(0.05, 3.0);
    std::uniform_int_distribution<int> n(1, 64);
    for (int i = 0; i < 500; ++i) EXPECT_NEAR(steering_vector(angle(rng), n(rng), d(rng)).norm(), 1.0, 1e-12);
}

TEST(SteeringVector, RejectsNonFiniteAngle) {
    EXPECT_THROW(steering_vector(std::numeric_limits<double>::quiet_NaN(), 4), InvalidArgument);
    EXPECT_THROW(steering_vector(std::numeric_limits<double>::infinity(), 4), InvalidArgument);
    EXPECT_THROW(steering_vector(0.0, 0), InvalidArgument);
}

TEST(ChannelAtSubcarrier, SinglePathBroadsideHandValue) {
    ArrayConfig arr{2, 1, 0.5};
    OfdmConfig ofdm{16, 1e6};
    const auto mp = single_path(0.0, 0.0, 0.0);
    for (int k = 0; k < 16; ++k) {
        const CMatrix h = channel_at_subcarrier(mp, arr, ofdm, k);
        ASSERT_EQ(h.rows(), 1);
        ASSERT_EQ(h.cols(), 2);
        EXPECT_NEAR(std::abs(h(0, 0) - 1.0), 0.0, 1e-14);
        EXPECT_NEAR(std::abs(h(0, 1) - 1.0), 0.0, 1e-14);
    }
}

TEST(ChannelAtSubcarrier, ZeroDelayIsFlatAcrossSubcarriers) {
    ArrayConfig arr{4, 2, 0.5};
    OfdmConfig ofdm{8, 5e6};
    const auto mp = single_path(0.0, 0.3, -0.7, cplx(0.4, -1.1));
    const CMatrix h0 = channel_at_subcarrier(mp, arr, ofdm, 0);
    for (int k = 1; k < 8; ++k) EXPECT_LT((channel_at_subcarrier(mp, arr, ofdm, k) - h0).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ChannelAtSubcarrier, MatchesDftOfDelayTaps) {
    Rng rng(11);
    ArrayConfig arr{4, 2, 0.5};
    const int k = 16;
    const double fs = 20e6;
    OfdmConfig ofdm{k, fs};
    for (int trial = 0; trial < 20; ++trial) {
        const auto mp = grid_multipath(rng, k, fs);
        // Delay-domain taps, then a direct length-K DFT per antenna pair.
        std::vector<CMatrix> taps(k, CMatrix::Zero(2, 4));
        const double g = std::sqrt(2.0 * 4.0 / mp.n_paths);
        for (int l = 0; l < mp.n_paths; ++l) {
            const int n = static_cast<int>(std::lround(mp.delays[l] * fs));
            taps[n] += g * mp.gains[l] * steering_vector(mp.aoa[l], 2) * steering_vector(mp.aod[l], 4).adjoint();
        }
        for (int kk = 0; kk < k; ++kk) {
            CMatrix dft = CMatrix::Zero(2, 4);
            for (int n = 0; n < k; ++n) dft += taps[n] * std::polar(1.0, -2.0 * kPi * n * kk / k);
            EXPECT_LT((channel_at_subcarrier(mp, arr, ofdm, kk) - dft).cwiseAbs().maxCoeff(), 1e-9);
        }
    }
}

TEST(ChannelAtSubcarrier, LinearInGains) {
    Rng rng(5);
    ArrayConfig arr{8, 2, 0.5};
    OfdmConfig ofdm{32, 10e6};
    ScenarioConfig sc;
    auto a = sample_multipath(sc, rng);
    auto b = a;
    auto sum = a;
    for (int l = 0; l < a.n_paths; ++l) {
        b.gains[l] = complex_gaussian(rng, 1.0);
        sum.gains[l] = a.gains[l] + b.gains[l];
    }
    for (int k : {0, 7, 31}) {
        const CMatrix lhs = channel_at_subcarrier(sum, arr, ofdm, k);
        const CMatrix rhs = channel_at_subcarrier(a, arr, ofdm, k) + channel_at_subcarrier(b, arr, ofdm, k);
        EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(ChannelAtSubcarrier, RejectsMismatchedLists) {
    auto mp = single_path(0.0, 0.0, 0.0);
    mp.aoa.push_back(0.1);
    EXPECT_THROW(channel_at_subcarrier(mp, {}, {}, 0), InvalidArgument);
    EXPECT_THROW(channel_at_subcarrier(single_path(0, 0, 0), {}, OfdmConfig{4, 1e6}, 4), InvalidArgument);
}

TEST(ChannelTensor, AgreesWithPerSubcarrierEvaluation) {
    ScenarioConfig sc;
    sc.array.n_ue_antennas = 2;
    Rng rng = make_rng(3, 0);
    const auto mp = sample_multipath(sc, rng);
    const auto t = channel_tensor(mp, sc.array, sc.ofdm);
    for (int k = 0; k < sc.ofdm.n_subcarriers; ++k) {
        const CMatrix h = channel_at_subcarrier(mp, sc.array, sc.ofdm, k);
        for (int b = 0; b < sc.array.n_bs_antennas; ++b)
            for (int u = 0; u < 2; ++u) EXPECT_NEAR(std::abs(t(k, b, u) - h(u, b)), 0.0, 1e-12);
    }
}

TEST(SampleMultipath, DeterministicForSeed) {
    ScenarioConfig sc;
    Rng a = make_rng(42, 9), b = make_rng(42, 9);
    EXPECT_EQ(sample_multipath(sc, a), sample_multipath(sc, b));
}

TEST(SampleMultipath, SatisfiesContract) {
    ScenarioConfig sc;
    sc.min_paths = 2;
    sc.max_paths = 5;
    for (std::uint64_t i = 0; i < 200; ++i) {
        Rng rng = make_rng(1, i);
        const auto mp = sample_multipath(sc, rng);
        EXPECT_NO_THROW(mp.validate());
        EXPECT_GE(mp.n_paths, 2);
        EXPECT_LE(mp.n_paths, 5);
        EXPECT_TRUE(std::is_sorted(mp.delays.begin(), mp.delays.end()));
    }
}

TEST(SampleMultipath, SingleClusterTinySpreadGivesEqualAod) {
    ScenarioConfig sc;
    sc.cluster_count = 1;
    sc.angle_spread = 1e-300;
    Rng rng(4);
    const auto mp = sample_multipath(sc, rng);
    for (double a : mp.aod) EXPECT_EQ(a, mp.aod.front());
}

TEST(SampleMultipath, EnsemblePowerNormalization) {
    ScenarioConfig sc;
    double acc = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) acc += sample_channel(sc, 77, static_cast<std::uint64_t>(i)).squared_norm();
    const double entries = sc.ofdm.n_subcarriers * sc.array.n_bs_antennas * sc.array.n_ue_antennas;
    EXPECT_NEAR(acc / n / entries, 1.0, 0.05);
}

TEST(ScenarioConfig, Validation) {
    ScenarioConfig sc;
    sc.min_paths = 4;
    sc.max_paths = 3;
    EXPECT_THROW(sc.validate(), InvalidArgument);
    sc = {};
    sc.delay_spread = 0;
    EXPECT_THROW(sc.validate(), InvalidArgument);
    sc = {};
    sc.array.spacing_over_wavelength = -1;
    EXPECT_THROW(sc.validate(), InvalidArgument);
}

TEST(Dataset, LayoutSizeAndRoundTrip) {
    test::TempDir dir;
    ScenarioConfig sc;
    const auto m = generate_dataset(sc, 100, dir.path(), 5);
    EXPECT_EQ(fs::file_size(dir / "tensors.bin"), 100u * 32 * 8 * 2 * 4);
    EXPECT_EQ(m.sample_count, 100u);
    const auto ds = load_dataset(dir.path());
    ASSERT_EQ(ds.samples.size(), 100u);
    const auto mem = generate_samples(sc, 5, 0, 100, true);
    for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(ds.samples[i].data, mem[i].data);
    EXPECT_GT(ds.manifest.scale.mean_entry_power, 0.0);
}

TEST(Dataset, PlaneLayoutIsRealThenImagKMajor) {
    test::TempDir dir;
    ScenarioConfig sc;
    sc.array.n_ue_antennas = 2;
    generate_dataset(sc, 1, dir.path(), 8);
    const auto bytes = read_file(dir / "tensors.bin");
    const auto h = generate_samples(sc, 8, 0, 1, true).front();
    const std::size_t half = h.size();
    // Element (k=3, b=5, u=1) sits at index (3*8 + 5)*2 + 1 in each plane.
    const std::size_t e = (3 * 8 + 5) * 2 + 1;
    EXPECT_EQ(get_f32le(bytes.data() + 4 * e), static_cast<float>(h(3, 5, 1).real()));
    EXPECT_EQ(get_f32le(bytes.data() + 4 * (half + e)), static_cast<float>(h(3, 5, 1).imag()));
}

TEST(Dataset, BitIdenticalForSameSeed) {
    test::TempDir dir;
    ScenarioConfig sc;
    generate_dataset(sc, 20, dir / "a", 9);
    generate_dataset(sc, 20, dir / "b", 9);
    EXPECT_EQ(read_file(dir / "a" / "tensors.bin"), read_file(dir / "b" / "tensors.bin"));
    EXPECT_EQ(read_file(dir / "a" / "manifest.json"), read_file(dir / "b" / "manifest.json"));
}

TEST(Dataset, EmptyDatasetIsValid) {
    test::TempDir dir;
    generate_dataset(ScenarioConfig{}, 0, dir.path(), 1);
    const auto ds = load_dataset(dir.path());
    EXPECT_TRUE(ds.samples.empty());
    EXPECT_EQ(ds.manifest.sample_count, 0u);
}

TEST(Dataset, RefusesOverwriteWithoutForce) {
    test::TempDir dir;
    generate_dataset(ScenarioConfig{}, 2, dir.path(), 1);
    EXPECT_THROW(generate_dataset(ScenarioConfig{}, 2, dir.path(), 1), IoError);
    EXPECT_NO_THROW(generate_dataset(ScenarioConfig{}, 3, dir.path(), 1, true));
    EXPECT_EQ(load_dataset(dir.path()).samples.size(), 3u);
}

TEST(Dataset, TruncatedTensorFileIsIoError) {
    test::TempDir dir;
    generate_dataset(ScenarioConfig{}, 2, dir.path(), 1);
    fs::resize_file(dir / "tensors.bin", 100);
    EXPECT_THROW(load_dataset(dir.path()), IoError);
}

TEST(Dataset, ScenarioJsonRoundTrip) {
    ScenarioConfig sc;
    sc.scenario_id = "x";
    sc.array = {16, 2, 0.25};
    sc.ofdm = {64, 1e7};
    sc.min_paths = 2;
    sc.max_paths = 9;
    sc.cluster_count = 3;
    const auto back = scenario_from_json(to_json(sc));
    EXPECT_EQ(back.scenario_id, "x");
    EXPECT_EQ(back.array.n_bs_antennas, 16);
    EXPECT_EQ(back.ofdm.n_subcarriers, 64);
    EXPECT_EQ(back.max_paths, 9);
    EXPECT_EQ(back.cluster_count, 3);
}

}  // namespace
}  // namespace csilab
