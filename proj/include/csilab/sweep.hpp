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

#ifndef CSILAB_SWEEP_HPP
#define CSILAB_SWEEP_HPP

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "csilab/codec.hpp"
#include "csilab/dct_baseline.hpp"
#include "csilab/feedback_link.hpp"
#include "csilab/metrics.hpp"

#ifndef CSILAB_VERSION
#define CSILAB_VERSION "v0.1.0"
#endif

namespace csilab {

inline constexpr const char* kVersion = CSILAB_VERSION;

// --- result tables -----------------------------------------------------------------

/// A table of string cells with a mandatory header row.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row) {
        require(row.size() == columns.size(), "Table: row width differs from header");
        rows.push_back(std::move(row));
    }
    std::size_t column(const std::string& name) const {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw InvalidArgument("Table: no column '" + name + "'");
        return static_cast<std::size_t>(it - columns.begin());
    }
};

/// Shortest round-trip decimal form; fixed across runs for byte-stable CSVs.
inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 6; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}
inline std::string fmt(std::uint64_t v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(bool v) { return v ? "1" : "0"; }

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

/// RFC 4180: CRLF line endings, quoted fields where needed.
inline std::string to_csv(const Table& t) {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(cells[i]);
        }
        out += "\r\n";
    };
    line(t.columns);
    for (const auto& r : t.rows) line(r);
    return out;
}

inline Table parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> rec;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            rec.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                rec.push_back(std::move(field));
                records.push_back(std::move(rec));
            }
            rec.clear();
            field.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) throw InvalidArgument("csv: unterminated quoted field");
    if (any || !field.empty()) {
        rec.push_back(std::move(field));
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw InvalidArgument("csv: missing header row");
    Table t;
    t.columns = records.front();
    for (std::size_t i = 1; i < records.size(); ++i) t.add(records[i]);
    return t;
}

/// {spec, version, rows}; numeric-looking cells are emitted as numbers.
inline nlohmann::json to_json_envelope(const Table& t, const nlohmann::json& spec) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows) {
        nlohmann::json o = nlohmann::json::object();
        for (std::size_t i = 0; i < r.size(); ++i) {
            char* end = nullptr;
            const double v = std::strtod(r[i].c_str(), &end);
            if (!r[i].empty() && end == r[i].c_str() + r[i].size() && std::isfinite(v))
                o[t.columns[i]] = v;
            else
                o[t.columns[i]] = r[i];
        }
        rows.push_back(o);
    }
    return {{"spec", spec}, {"version", kVersion}, {"rows", rows}};
}

// --- rate-distortion evaluation ----------------------------------------------------

struct RateDistortionPoint {
    double bits_per_entry = 0.0;  // payload only
    double header_bits_per_entry = 0.0;
    double nmse_db = 0.0;
    double rd_lambda = 0.0;
    std::string scenario_id;
};

struct CodecEvaluation {
    RateDistortionPoint point;
    std::vector<double> ratios;
    std::vector<std::uint64_t> payload_bits;
};

template <class T>
CodecEvaluation evaluate_codec(const CodecModel<T>& m, std::span<const ChannelTensor> test) {
    require(!test.empty(), "evaluate_codec: empty test set");
    CodecEvaluation ev;
    double payload = 0.0, header = 0.0;
    for (const auto& h : test) {
        const auto bs = compress(h, m);
        const auto bpe = bits_per_entry(bs, h.n_subcarriers, h.n_bs, h.n_ue, kBitstreamHeaderBytes);
        payload += bpe.payload;
        header += bpe.header;
        ev.payload_bits.push_back(bs.bit_length);
        ev.ratios.push_back(nmse_ratio(h, decompress(bs, m, h.n_subcarriers, h.n_bs)));
    }
    const double n = static_cast<double>(test.size());
    ev.point = {payload / n, header / n, mean_nmse_db(ev.ratios), m.config.rd_lambda, test.front().scenario_id};
    return ev;
}

struct DctPoint {
    double keep_fraction = 0.0;
    int bits_per_coeff = 0;
    double bits_per_entry = 0.0;
    double nmse_db = 0.0;
};

inline DctPoint evaluate_dct(std::span<const ChannelTensor> test, double keep_fraction, int bits_per_coeff) {
    require(!test.empty(), "evaluate_dct: empty test set");
    std::vector<double> ratios;
    double bits = 0.0, entries = 0.0;
    for (const auto& h : test) {
        const auto c = dct_baseline_compress(h, keep_fraction, bits_per_coeff);
        bits += static_cast<double>(c.bit_length);
        entries += static_cast<double>(h.size());
        ratios.push_back(nmse_ratio(h, c.h_hat));
    }
    return {keep_fraction, bits_per_coeff, bits / entries, mean_nmse_db(ratios)};
}

/// Lower convex-free envelope: the best NMSE achievable at or below each rate.
inline std::vector<DctPoint> dct_envelope(std::vector<DctPoint> pts) {
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        return a.bits_per_entry < b.bits_per_entry || (a.bits_per_entry == b.bits_per_entry && a.nmse_db < b.nmse_db);
    });
    std::vector<DctPoint> env;
    for (const auto& p : pts)
        if (env.empty() || p.nmse_db < env.back().nmse_db) env.push_back(p);
    return env;
}

/// Best DCT NMSE at `bpe`, linear in rate between envelope points. Returns
/// +inf below the lowest rate, so an unmatched codec point cannot pass.
inline double dct_nmse_at(const std::vector<DctPoint>& env, double bpe) {
    if (env.empty() || bpe < env.front().bits_per_entry) return std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < env.size(); ++i)
        if (bpe <= env[i + 1].bits_per_entry) {
            const double t = (bpe - env[i].bits_per_entry) / (env[i + 1].bits_per_entry - env[i].bits_per_entry);
            return env[i].nmse_db + t * (env[i + 1].nmse_db - env[i].nmse_db);
        }
    return env.back().nmse_db;
}

// --- feedback sweeps -----------------------------------------------------------------

/// Column set shared by the digital and analog feedback CSVs.
inline std::vector<std::string> feedback_columns() {
    return {"scenario_id", "rho", "snr_db", "trial", "payload_bits", "capacity_bits", "outage", "nmse_db"};
}

struct FeedbackTrial {
    int trial = 0;
    std::uint64_t payload_bits = 0;
    double capacity_bits = 0.0;
    bool outage = false;
    double ratio = 1.0;
};

struct FeedbackSummary {
    double rho = 0.0;
    double snr_db = 0.0;
    int trials = 0;
    double outage_rate = 0.0;
    double nmse_pooled_db = 0.0;
    double nmse_delivered_db = 0.0;  // outage trials excluded; floor when all trials are outages
    std::vector<FeedbackTrial> rows;
};

inline FeedbackSummary summarize(double rho, double snr_db, std::vector<FeedbackTrial> rows) {
    FeedbackSummary s;
    s.rho = rho;
    s.snr_db = snr_db;
    s.trials = static_cast<int>(rows.size());
    std::vector<double> pooled, delivered;
    int outages = 0;
    for (const auto& r : rows) {
        pooled.push_back(r.ratio);
        if (r.outage)
            ++outages;
        else
            delivered.push_back(r.ratio);
    }
    s.outage_rate = rows.empty() ? 0.0 : static_cast<double>(outages) / static_cast<double>(rows.size());
    s.nmse_pooled_db = mean_nmse_db(pooled);
    s.nmse_delivered_db = delivered.empty() ? std::numeric_limits<double>::quiet_NaN() : mean_nmse_db(delivered);
    s.rows = std::move(rows);
    return s;
}

struct FeedbackSweepOptions {
    int k_uplink = 256;
    int trials = 1000;
    std::uint64_t channel_seed = 101;
    std::uint64_t selection_seed = 202;
    std::uint64_t noise_seed = 303;
};

/// Independent channel, selection and noise streams derived from one seed.
inline FeedbackSweepOptions feedback_options(std::uint64_t seed, int k_uplink, int trials) {
    FeedbackSweepOptions fo;
    fo.k_uplink = k_uplink;
    fo.trials = trials;
    fo.channel_seed = stream_seed(seed, 0, 0xC4A7);
    fo.selection_seed = stream_seed(seed, 1, 0xC4A7);
    fo.noise_seed = stream_seed(seed, 2, 0xC4A7);
    return fo;
}

/// Digital feedback: trial t codes test sample t mod n and sends it over
/// uplink realization t. Payloads are computed once and reused across rho.
template <class T>
std::vector<FeedbackSummary> digital_rho_sweep(const CodecModel<T>& m, std::span<const ChannelTensor> test,
                                               const ScenarioConfig& downlink, std::span<const double> rhos,
                                               double snr_db, const FeedbackSweepOptions& opt) {
    require(!test.empty() && opt.trials >= 1, "digital_rho_sweep: need test samples and trials >= 1");
    const std::size_t n = std::min<std::size_t>(test.size(), static_cast<std::size_t>(opt.trials));
    std::vector<LatentBitstream> streams;
    std::vector<double> ratios;
    for (std::size_t i = 0; i < n; ++i) {
        streams.push_back(compress(test[i], m));
        ratios.push_back(nmse_ratio(test[i], decompress(streams.back(), m, test[i].n_subcarriers, test[i].n_bs)));
    }
    const ScenarioConfig up = uplink_scenario(downlink, opt.k_uplink);
    const double snr = db_to_linear(snr_db);
    std::vector<FeedbackSummary> out;
    for (double rho : rhos) {
        FeedbackConfig fb{opt.k_uplink, FeedbackConfig::subcarriers_for(rho, opt.k_uplink), snr_db,
                          opt.selection_seed};
        std::vector<FeedbackTrial> rows;
        for (int t = 0; t < opt.trials; ++t) {
            const std::size_t i = static_cast<std::size_t>(t) % n;
            const auto fr = draw_feedback_realization(up, fb, opt.channel_seed, static_cast<std::uint64_t>(t));
            FeedbackTrial r;
            r.trial = t;
            r.payload_bits = streams[i].bit_length;
            r.capacity_bits = feedback_capacity(fr, snr);
            r.outage = static_cast<double>(r.payload_bits) > r.capacity_bits;
            r.ratio = r.outage ? 1.0 : ratios[i];  // zero reconstruction has ratio exactly 1
            rows.push_back(r);
        }
        out.push_back(summarize(rho, snr_db, std::move(rows)));
    }
    return out;
}

/// Analog feedback at one (rho, snr): N_F is fixed by the model's latent size.
template <class T>
FeedbackSummary analog_trials(const CodecModel<T>& m, std::span<const ChannelTensor> test,
                              const ScenarioConfig& downlink, double snr_db, const FeedbackSweepOptions& opt) {
    require(!test.empty() && opt.trials >= 1, "analog_trials: need test samples and trials >= 1");
    const auto ls = m.latent_shape(test.front().n_subcarriers, test.front().n_bs);
    require(ls.size() % 2 == 0, "analog_trials: latent length must be even");
    const int nf = static_cast<int>(ls.size() / 2);
    require(nf <= opt.k_uplink, "analog_trials: model needs more feedback subcarriers than K_u");
    const ScenarioConfig up = uplink_scenario(downlink, opt.k_uplink);
    const FeedbackConfig fb{opt.k_uplink, nf, snr_db, opt.selection_seed};
    const double snr = fb.snr_linear();
    std::vector<FeedbackTrial> rows;
    for (int t = 0; t < opt.trials; ++t) {
        const auto& h = test[static_cast<std::size_t>(t) % test.size()];
        const auto fr = draw_feedback_realization(up, fb, opt.channel_seed, static_cast<std::uint64_t>(t));
        Rng noise = make_rng(opt.noise_seed, static_cast<std::uint64_t>(t), 0xA0A1);
        FeedbackTrial r;
        r.trial = t;
        r.capacity_bits = std::isinf(snr) ? std::numeric_limits<double>::infinity() : feedback_capacity(fr, snr);
        r.ratio = nmse_ratio(h, analog_feedback_forward(h, fr, m, noise));
        rows.push_back(r);
    }
    return summarize(fb.rho(), snr_db, std::move(rows));
}

inline void append_feedback_rows(Table& t, const std::string& scenario_id, const FeedbackSummary& s) {
    for (const auto& r : s.rows)
        t.add({scenario_id, fmt(s.rho), fmt(s.snr_db), fmt(r.trial), fmt(r.payload_bits), fmt(r.capacity_bits),
               fmt(r.outage), fmt(ratio_to_db(r.ratio))});
}

inline Table feedback_summary_table() {
    return {{"scenario_id", "model", "rho", "snr_db", "trials", "outage_rate", "nmse_pooled_db", "nmse_delivered_db"},
            {}};
}

inline void append_summary_row(Table& t, const std::string& scenario_id, const std::string& model,
                               const FeedbackSummary& s) {
    t.add({scenario_id, model, fmt(s.rho), fmt(s.snr_db), fmt(s.trials), fmt(s.outage_rate), fmt(s.nmse_pooled_db),
           fmt(s.nmse_delivered_db)});
}

// --- sweep driver --------------------------------------------------------------------

enum class SweepAxis { rd_lambda, rho, snr_db, keep_fraction };

inline SweepAxis parse_axis(const std::string& s) {
    if (s == "rd_lambda") return SweepAxis::rd_lambda;
    if (s == "rho") return SweepAxis::rho;
    if (s == "snr_db") return SweepAxis::snr_db;
    if (s == "keep_fraction") return SweepAxis::keep_fraction;
    throw ConfigError("sweep: unknown axis '" + s + "' (rd_lambda, rho, snr_db, keep_fraction)");
}

inline std::string axis_name(SweepAxis a) {
    switch (a) {
        case SweepAxis::rd_lambda: return "rd_lambda";
        case SweepAxis::rho: return "rho";
        case SweepAxis::snr_db: return "snr_db";
        case SweepAxis::keep_fraction: return "keep_fraction";
    }
    return "?";
}

struct SweepSpec {
    SweepAxis axis = SweepAxis::rd_lambda;
    std::vector<double> values;
    int trials = 1;
    fs::path dataset;                  // test set; its manifest supplies the scenario
    std::vector<fs::path> checkpoints;
    std::string link = "digital";      // rho / snr_db axes: "digital" or "analog"
    double snr_db = 10.0;              // fixed value when the axis is not snr_db
    double rho = 0.125;                // fixed value when the axis is not rho (digital only)
    int k_uplink = 256;
    int bits_per_coeff = 6;            // keep_fraction axis
    std::uint64_t seed = 1;

    void validate() const {
        if (values.empty()) throw ConfigError("sweep: values must be nonempty");
        if (!std::is_sorted(values.begin(), values.end())) throw ConfigError("sweep: values must be sorted");
        if (trials < 1) throw ConfigError("sweep: trials must be >= 1");
        if (link != "digital" && link != "analog") throw ConfigError("sweep: link must be digital or analog");
        if (axis != SweepAxis::keep_fraction && checkpoints.empty())
            throw ConfigError("sweep: axis " + axis_name(axis) + " needs at least one checkpoint");
        for (const auto& c : checkpoints)
            if (!fs::exists(c / "arch.json") || !fs::exists(c / "weights.bin"))
                throw ConfigError("sweep: missing checkpoint " + c.string());
    }
};

inline nlohmann::json to_json(const SweepSpec& s) {
    nlohmann::json ck = nlohmann::json::array();
    for (const auto& c : s.checkpoints) ck.push_back(c.generic_string());
    return {{"format_version", kFormatVersion}, {"axis", axis_name(s.axis)},   {"values", s.values},
            {"trials", s.trials},               {"dataset", s.dataset.generic_string()},
            {"checkpoints", ck},                {"link", s.link},             {"snr_db", s.snr_db},
            {"rho", s.rho},                     {"k_uplink", s.k_uplink},     {"bits_per_coeff", s.bits_per_coeff},
            {"seed", s.seed}};
}

inline SweepSpec sweep_spec_from_json(const nlohmann::json& j, const fs::path& base = {}) {
    SweepSpec s;
    try {
        if (j.contains("format_version") && j.at("format_version").get<int>() != kFormatVersion)
            throw ConfigError("sweep: unsupported format_version");
        s.axis = parse_axis(j.at("axis").get<std::string>());
        s.values = j.at("values").get<std::vector<double>>();
        s.trials = j.value("trials", 1);
        auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
        s.dataset = resolve(j.at("dataset").get<std::string>());
        for (const auto& c : j.value("checkpoints", nlohmann::json::array())) s.checkpoints.push_back(resolve(c.get<std::string>()));
        s.link = j.value("link", s.link);
        s.snr_db = j.value("snr_db", s.snr_db);
        s.rho = j.value("rho", s.rho);
        s.k_uplink = j.value("k_uplink", s.k_uplink);
        s.bits_per_coeff = j.value("bits_per_coeff", s.bits_per_coeff);
        s.seed = j.value("seed", s.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("sweep spec: ") + e.what());
    }
    return s;
}

/// One row per (checkpoint, axis value, trial) in that order.
inline Table run_sweep(const SweepSpec& spec) {
    spec.validate();
    const Dataset ds = load_dataset(spec.dataset);
    if (ds.samples.empty()) throw ConfigError("sweep: dataset " + spec.dataset.string() + " is empty");
    std::vector<CodecModel<float>> models;
    for (const auto& c : spec.checkpoints) models.push_back(load_checkpoint<float>(c));
    for (std::size_t i = 0; i < models.size(); ++i) {
        try {
            check_codec_input(ds.samples.front(), models[i].config);
        } catch (const InvalidArgument& e) {
            throw ConfigError("sweep: checkpoint " + spec.checkpoints[i].string() + " does not fit the dataset: " +
                              e.what());
        }
    }
    const std::string& sid = ds.manifest.scenario.scenario_id;
    const std::size_t n = std::min<std::size_t>(ds.samples.size(), static_cast<std::size_t>(spec.trials));
    const std::span<const ChannelTensor> test(ds.samples.data(), n);
    Table t{{"scenario_id", "axis", "value", "model", "trial", "rho", "snr_db", "payload_bits", "capacity_bits",
             "outage", "bits_per_entry", "nmse_db"},
            {}};
    const FeedbackSweepOptions fo = feedback_options(spec.seed, spec.k_uplink, spec.trials);
    const std::string ax = axis_name(spec.axis);

    if (spec.axis == SweepAxis::keep_fraction) {
        for (double kf : spec.values)
            for (std::size_t i = 0; i < n; ++i) {
                const auto c = dct_baseline_compress(test[i], kf, spec.bits_per_coeff);
                const double bpe = static_cast<double>(c.bit_length) / static_cast<double>(test[i].size());
                t.add({sid, ax, fmt(kf), "dct", fmt(static_cast<int>(i)), "", "", fmt(c.bit_length), "", "0", fmt(bpe),
                       fmt(nmse_db(test[i], c.h_hat))});
            }
        return t;
    }
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
        const auto& m = models[mi];
        const std::string name = spec.checkpoints[mi].filename().string();
        if (spec.axis == SweepAxis::rd_lambda) {
            // Each checkpoint contributes its own rd_lambda; values select which ones are reported.
            const bool listed = std::any_of(spec.values.begin(), spec.values.end(), [&](double v) {
                return std::abs(v - m.config.rd_lambda) <= 1e-12 * std::max(1.0, std::abs(v));
            });
            if (!listed) continue;
            for (std::size_t i = 0; i < n; ++i) {
                const auto bs = compress(test[i], m);
                const auto h = decompress(bs, m, test[i].n_subcarriers, test[i].n_bs);
                const double bpe = static_cast<double>(bs.bit_length) / static_cast<double>(test[i].size());
                t.add({sid, ax, fmt(m.config.rd_lambda), name, fmt(static_cast<int>(i)), "", "", fmt(bs.bit_length), "",
                       "0", fmt(bpe), fmt(nmse_db(test[i], h))});
            }
            continue;
        }
        std::vector<FeedbackSummary> sums;
        if (spec.link == "digital") {
            if (spec.axis == SweepAxis::rho) {
                sums = digital_rho_sweep(m, test, ds.manifest.scenario, spec.values, spec.snr_db, fo);
            } else {
                for (double s : spec.values) {
                    const double r = spec.rho;
                    sums.push_back(digital_rho_sweep(m, test, ds.manifest.scenario, std::span<const double>(&r, 1), s,
                                                     fo).front());
                }
            }
        } else {
            if (spec.axis == SweepAxis::rho)
                throw ConfigError("sweep: analog models have a fixed rho; sweep snr_db or pass one model per rho");
            for (double s : spec.values) sums.push_back(analog_trials(m, test, ds.manifest.scenario, s, fo));
        }
        for (std::size_t vi = 0; vi < sums.size(); ++vi)
            for (const auto& r : sums[vi].rows)
                t.add({sid, ax, fmt(spec.values[vi]), name, fmt(r.trial), fmt(sums[vi].rho), fmt(sums[vi].snr_db),
                       fmt(r.payload_bits), fmt(r.capacity_bits), fmt(r.outage),
                       fmt(static_cast<double>(r.payload_bits) / static_cast<double>(test[0].size())),
                       fmt(ratio_to_db(r.ratio))});
    }
    return t;
}

/// Per (model, value) aggregate: dataset NMSE as 10 log10 of the mean ratio.
inline Table aggregate_sweep(const Table& rows) {
    const auto cv = rows.column("value"), cm = rows.column("model"), cn = rows.column("nmse_db"),
               co = rows.column("outage"), cb = rows.column("bits_per_entry");
    struct Acc {
        double ratio = 0.0, delivered = 0.0, bpe = 0.0;
        int n = 0, outages = 0;
    };
    std::vector<std::pair<std::string, std::string>> order;
    std::map<std::pair<std::string, std::string>, Acc> acc;
    for (const auto& r : rows.rows) {
        const auto key = std::make_pair(r[cm], r[cv]);
        if (!acc.count(key)) order.push_back(key);
        auto& a = acc[key];
        const double ratio = std::pow(10.0, std::stod(r[cn]) / 10.0);
        a.ratio += ratio;
        a.bpe += r[cb].empty() ? 0.0 : std::stod(r[cb]);
        ++a.n;
        if (r[co] == "1")
            ++a.outages;
        else
            a.delivered += ratio;
    }
    Table t{{"model", "value", "trials", "bits_per_entry", "outage_rate", "nmse_pooled_db", "nmse_delivered_db"}, {}};
    for (const auto& key : order) {
        const auto& a = acc[key];
        const int nd = a.n - a.outages;
        t.add({key.first, key.second, fmt(a.n), fmt(a.bpe / a.n), fmt(static_cast<double>(a.outages) / a.n),
               fmt(ratio_to_db(a.ratio / a.n)), nd > 0 ? fmt(ratio_to_db(a.delivered / nd)) : "nan"});
    }
    return t;
}

// --- static plots ----------------------------------------------------------------------

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

/// Line chart as a standalone SVG document.
inline std::string render_svg(const std::vector<Series>& series, const std::string& x_label,
                              const std::string& y_label, const std::string& title) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x0 -= 0.5, x1 += 0.5;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double W = 640, H = 420, L = 70, R = 160, T = 40, B = 50;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
    auto esc = [](const std::string& s) {
        std::string o;
        for (char c : s) o += c == '<' ? "&lt;" : c == '>' ? "&gt;" : c == '&' ? "&amp;" : std::string(1, c);
        return o;
    };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
    std::ostringstream o;
    o << std::setprecision(6);
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << esc(title) << "</text>\n";
    o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4, yv = y0 + (y1 - y0) * i / 4;
        o << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << fmt(std::round(xv * 1e4) / 1e4) << "</text>\n";
        o << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << fmt(std::round(yv * 100) / 100) << "</text>\n";
    }
    o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << esc(x_label) << "</text>\n";
    o << "<text transform=\"translate(16," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << esc(y_label) << "</text>\n";
    for (std::size_t si = 0; si < series.size(); ++si) {
        const char* col = colors[si % std::size(colors)];
        o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\" points=\"";
        for (const auto& [x, y] : series[si].points)
            if (std::isfinite(x) && std::isfinite(y)) o << px(x) << ',' << py(y) << ' ';
        o << "\"/>\n";
        for (const auto& [x, y] : series[si].points)
            if (std::isfinite(x) && std::isfinite(y))
                o << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"" << col << "\"/>\n";
        o << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 14 + 18 * si << "\" fill=\"" << col << "\">" << esc(series[si].name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

/// Groups rows by `group_col` (empty: one series) and plots y against x.
inline std::string plot_table(const Table& t, const std::string& x_col, const std::string& y_col,
                              const std::string& group_col, const std::string& title) {
    const auto cx = t.column(x_col), cy = t.column(y_col);
    const std::size_t cg = group_col.empty() ? 0 : t.column(group_col);
    std::vector<Series> series;
    for (const auto& r : t.rows) {
        const std::string g = group_col.empty() ? y_col : r[cg];
        auto it = std::find_if(series.begin(), series.end(), [&](const Series& s) { return s.name == g; });
        if (it == series.end()) {
            series.push_back({g, {}});
            it = series.end() - 1;
        }
        char* e1 = nullptr;
        char* e2 = nullptr;
        const double x = std::strtod(r[cx].c_str(), &e1), y = std::strtod(r[cy].c_str(), &e2);
        if (e1 != r[cx].c_str() && e2 != r[cy].c_str()) it->points.emplace_back(x, y);
    }
    for (auto& s : series) std::stable_sort(s.points.begin(), s.points.end());
    return render_svg(series, x_col, y_col, title);
}

}  // namespace csilab

#endif  // CSILAB_SWEEP_HPP
