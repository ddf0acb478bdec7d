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

#ifndef CSILAB_DATASET_HPP
#define CSILAB_DATASET_HPP

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "csilab/channel_gen.hpp"

namespace csilab {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kFormatVersion = 1;

// --- little-endian float32 helpers -----------------------------------------

inline void put_f32le(std::vector<unsigned char>& out, float v) {
    auto bits = std::bit_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

inline float get_f32le(const unsigned char* p) {
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return std::bit_cast<float>(bits);
}

inline std::vector<unsigned char> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

inline void write_file(const fs::path& path, std::span<const unsigned char> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

inline json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

inline void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

// --- scenario config (de)serialization --------------------------------------

inline json to_json(const ScenarioConfig& c) {
    return json{
        {"format_version", kFormatVersion},
        {"scenario_id", c.scenario_id},
        {"array",
         {{"n_bs_antennas", c.array.n_bs_antennas},
          {"n_ue_antennas", c.array.n_ue_antennas},
          {"spacing_over_wavelength", c.array.spacing_over_wavelength}}},
        {"ofdm", {{"n_subcarriers", c.ofdm.n_subcarriers}, {"sample_rate", c.ofdm.sample_rate}}},
        {"path_count_range", {c.min_paths, c.max_paths}},
        {"delay_spread", c.delay_spread},
        {"angle_spread", c.angle_spread},
        {"cluster_count", c.cluster_count},
        {"rng_seed", c.rng_seed},
    };
}

inline ScenarioConfig scenario_from_json(const json& j) {
    ScenarioConfig c;
    try {
        if (j.contains("format_version") && j.at("format_version").get<int>() != kFormatVersion)
            throw ConfigError("unsupported scenario format_version");
        c.scenario_id = j.value("scenario_id", c.scenario_id);
        if (j.contains("array")) {
            const auto& a = j.at("array");
            c.array.n_bs_antennas = a.value("n_bs_antennas", c.array.n_bs_antennas);
            c.array.n_ue_antennas = a.value("n_ue_antennas", c.array.n_ue_antennas);
            c.array.spacing_over_wavelength = a.value("spacing_over_wavelength", c.array.spacing_over_wavelength);
        }
        if (j.contains("ofdm")) {
            const auto& o = j.at("ofdm");
            c.ofdm.n_subcarriers = o.value("n_subcarriers", c.ofdm.n_subcarriers);
            c.ofdm.sample_rate = o.value("sample_rate", c.ofdm.sample_rate);
        }
        if (j.contains("path_count_range")) {
            const auto& r = j.at("path_count_range");
            if (!r.is_array() || r.size() != 2) throw ConfigError("path_count_range must be [min, max]");
            c.min_paths = r[0].get<int>();
            c.max_paths = r[1].get<int>();
        }
        c.delay_spread = j.value("delay_spread", c.delay_spread);
        c.angle_spread = j.value("angle_spread", c.angle_spread);
        c.cluster_count = j.value("cluster_count", c.cluster_count);
        c.rng_seed = j.value("rng_seed", c.rng_seed);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario config: ") + e.what());
    }
    try {
        c.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("scenario config: ") + e.what());
    }
    return c;
}

// --- dataset container -------------------------------------------------------

struct ScaleStats {
    double mean_entry_power = 0.0;  // mean |h|^2 over all complex entries
    double max_abs = 0.0;

    /// Multiplier that brings the dataset to unit mean entry power.
    double input_scale() const { return mean_entry_power > 0 ? 1.0 / std::sqrt(mean_entry_power) : 1.0; }
};

struct DatasetManifest {
    ScenarioConfig scenario;
    std::uint64_t seed = 0;
    std::size_t sample_count = 0;
    ScaleStats scale;

    int n_subcarriers() const { return scenario.ofdm.n_subcarriers; }
    int n_bs() const { return scenario.array.n_bs_antennas; }
    int n_ue() const { return scenario.array.n_ue_antennas; }
    std::size_t floats_per_sample() const {
        return 2 * static_cast<std::size_t>(n_subcarriers()) * n_bs() * n_ue();
    }
};

inline json to_json(const DatasetManifest& m) {
    return json{
        {"format_version", kFormatVersion},
        {"scenario", to_json(m.scenario)},
        {"seed", m.seed},
        {"sample_count", m.sample_count},
        {"shape", {{"n_subcarriers", m.n_subcarriers()}, {"n_bs_antennas", m.n_bs()}, {"n_ue_antennas", m.n_ue()}}},
        {"layout", "float32 little-endian; per sample real plane then imag plane; plane order (K, N_B, N_U)"},
        {"scale",
         {{"mean_entry_power", m.scale.mean_entry_power},
          {"max_abs", m.scale.max_abs},
          {"input_scale", m.scale.input_scale()}}},
    };
}

inline DatasetManifest manifest_from_json(const json& j) {
    DatasetManifest m;
    try {
        if (j.at("format_version").get<int>() != kFormatVersion) throw ConfigError("unsupported dataset format_version");
        m.scenario = scenario_from_json(j.at("scenario"));
        m.seed = j.at("seed").get<std::uint64_t>();
        m.sample_count = j.at("sample_count").get<std::size_t>();
        const auto& s = j.at("shape");
        if (s.at("n_subcarriers").get<int>() != m.n_subcarriers() || s.at("n_bs_antennas").get<int>() != m.n_bs() ||
            s.at("n_ue_antennas").get<int>() != m.n_ue())
            throw ConfigError("manifest shape disagrees with scenario");
        m.scale.mean_entry_power = j.at("scale").at("mean_entry_power").get<double>();
        m.scale.max_abs = j.at("scale").value("max_abs", 0.0);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("dataset manifest: ") + e.what());
    }
    return m;
}

inline void append_tensor(std::vector<unsigned char>& out, const ChannelTensor& t) {
    for (const auto& v : t.data) put_f32le(out, static_cast<float>(v.real()));
    for (const auto& v : t.data) put_f32le(out, static_cast<float>(v.imag()));
}

/// Generates `n_samples` channels and writes the container under `out_dir`.
/// Sample i depends only on (cfg, seed, i).
inline DatasetManifest generate_dataset(const ScenarioConfig& cfg, std::size_t n_samples, const fs::path& out_dir,
                                        std::uint64_t seed, bool force = false) {
    cfg.validate();
    const fs::path manifest_path = out_dir / "manifest.json";
    const fs::path tensors_path = out_dir / "tensors.bin";
    if (!force && (fs::exists(manifest_path) || fs::exists(tensors_path)))
        throw IoError("refusing to overwrite existing dataset in " + out_dir.string() + " (use --force)");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    DatasetManifest m;
    m.scenario = cfg;
    m.seed = seed;
    m.sample_count = n_samples;

    std::ofstream out(tensors_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tensors_path.string());
    double power = 0.0;
    std::vector<unsigned char> buf;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const ChannelTensor t = sample_channel(cfg, seed, i);
        buf.clear();
        append_tensor(buf, t);
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        power += t.squared_norm();
        for (const auto& v : t.data) m.scale.max_abs = std::max(m.scale.max_abs, std::abs(v));
    }
    if (!out) throw IoError("short write to " + tensors_path.string());
    const double entries = static_cast<double>(n_samples) * cfg.ofdm.n_subcarriers * cfg.array.n_bs_antennas *
                           cfg.array.n_ue_antennas;
    m.scale.mean_entry_power = entries > 0 ? power / entries : 0.0;
    write_json(manifest_path, to_json(m));
    return m;
}

struct Dataset {
    DatasetManifest manifest;
    std::vector<ChannelTensor> samples;
};

/// Loads a container directory, whether produced here or externally.
inline Dataset load_dataset(const fs::path& dir) {
    Dataset d;
    d.manifest = manifest_from_json(read_json(dir / "manifest.json"));
    const auto bytes = read_file(dir / "tensors.bin");
    const std::size_t per = d.manifest.floats_per_sample();
    if (bytes.size() != d.manifest.sample_count * per * 4)
        throw IoError("tensors.bin size does not match manifest in " + dir.string());
    const auto& sc = d.manifest.scenario;
    d.samples.reserve(d.manifest.sample_count);
    const unsigned char* p = bytes.data();
    for (std::size_t i = 0; i < d.manifest.sample_count; ++i) {
        ChannelTensor t(sc.ofdm.n_subcarriers, sc.array.n_bs_antennas, sc.array.n_ue_antennas, sc.scenario_id);
        const std::size_t half = t.size();
        for (std::size_t e = 0; e < half; ++e)
            t.data[e] = {get_f32le(p + 4 * e), get_f32le(p + 4 * (half + e))};
        p += per * 4;
        d.samples.push_back(std::move(t));
    }
    return d;
}

/// In-memory generation, identical to what generate_dataset writes after float32 rounding.
inline std::vector<ChannelTensor> generate_samples(const ScenarioConfig& cfg, std::uint64_t seed, std::size_t first,
                                                   std::size_t count, bool round_to_float = true) {
    std::vector<ChannelTensor> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        ChannelTensor t = sample_channel(cfg, seed, first + i);
        if (round_to_float)
            for (auto& v : t.data) v = {static_cast<float>(v.real()), static_cast<float>(v.imag())};
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace csilab

#endif  // CSILAB_DATASET_HPP
