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

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "csilab/csilab.hpp"

namespace {

using namespace csilab;

void write_text(const fs::path& path, const std::string& text) {
    write_file(path, std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

std::string read_text(const fs::path& path) {
    const auto b = read_file(path);
    return {b.begin(), b.end()};
}

void check_parent(const fs::path& out) {
    const auto parent = out.parent_path();
    if (!parent.empty() && !fs::is_directory(parent)) throw IoError("output directory does not exist: " + parent.string());
}

// --- gen -----------------------------------------------------------------------------

struct GenArgs {
    std::string config, out;
    std::size_t samples = 0;
    std::optional<std::uint64_t> seed;
    bool force = false;
};

int cmd_gen(const GenArgs& a) {
    ScenarioConfig cfg = a.config.empty() ? ScenarioConfig{} : scenario_from_json(read_json(a.config));
    try {
        cfg.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    const std::uint64_t seed = a.seed.value_or(cfg.rng_seed);
    cfg.rng_seed = seed;
    const auto m = generate_dataset(cfg, a.samples, a.out, seed, a.force);
    std::cout << "wrote " << m.sample_count << " samples (" << m.n_subcarriers() << "x" << m.n_bs() << "x" << m.n_ue()
              << ") to " << a.out << "\n";
    return 0;
}

// --- pilots --------------------------------------------------------------------------

struct PilotArgs {
    std::string dataset, out;
    int pilot_len = 1;
    double snr_db = 10.0;
    int adc_bits = 0;
    std::uint64_t seed = 1;
};

/// Per-sample LS NMSE. Pilot symbols have unit power and the noise variance
/// is 1/SNR, so SNR is per receive antenna for unit-power channel entries.
int cmd_pilots(const PilotArgs& a) {
    if (a.pilot_len < 1) throw ConfigError("--pilot-len must be >= 1");
    if (a.adc_bits < 0 || a.adc_bits > 30) throw ConfigError("--adc-bits must be in [0, 30]");
    check_parent(a.out);
    const Dataset ds = load_dataset(a.dataset);
    const auto& m = ds.manifest;
    const double nv = 1.0 / db_to_linear(a.snr_db);
    const double unscale = m.scale.input_scale();  // evaluate in unit-power units
    Table t{{"scenario_id", "sample", "pilot_len", "snr_db", "adc_bits", "nmse_db", "nmse_scaled_db"}, {}};
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const auto& h = ds.samples[i];
        Rng rng = make_rng(a.seed, i, 0x9110);
        const PilotBlock x = PilotBlock::random(h.n_ue, a.pilot_len, 1.0, rng);
        ChannelTensor est(h.n_subcarriers, h.n_bs, h.n_ue, h.scenario_id);
        ChannelTensor ref(h.n_subcarriers, h.n_bs, h.n_ue, h.scenario_id);
        for (int k = 0; k < h.n_subcarriers; ++k) {
            CMatrix hk(h.n_bs, h.n_ue);
            for (int b = 0; b < h.n_bs; ++b)
                for (int u = 0; u < h.n_ue; ++u) hk(b, u) = h(k, b, u) * unscale;
            Observation obs = transmit_pilots(hk, x, nv, rng);
            if (a.adc_bits > 0) obs = quantize_observation(obs, a.adc_bits);
            const CMatrix r = ls_estimate(obs, x);
            for (int b = 0; b < h.n_bs; ++b)
                for (int u = 0; u < h.n_ue; ++u) {
                    est(k, b, u) = r(b, u);
                    ref(k, b, u) = hk(b, u);
                }
        }
        // Best real gain g minimizing ||ref - g est||; removes the 1-bit scale ambiguity.
        double num = 0.0, den = 0.0;
        for (std::size_t e = 0; e < ref.size(); ++e) {
            num += std::real(std::conj(est.data[e]) * ref.data[e]);
            den += std::norm(est.data[e]);
        }
        ChannelTensor scaled = est;
        const double g = den > 0 ? num / den : 0.0;
        for (auto& v : scaled.data) v *= g;
        t.add({h.scenario_id, fmt(static_cast<std::uint64_t>(i)), fmt(a.pilot_len), fmt(a.snr_db), fmt(a.adc_bits),
               fmt(nmse_db(ref, est)), fmt(nmse_db(ref, scaled))});
    }
    write_text(a.out, to_csv(t));
    std::cout << "wrote " << t.rows.size() << " rows to " << a.out << "\n";
    return 0;
}

// --- train ---------------------------------------------------------------------------

struct TrainArgs {
    std::string dataset, config, out, log;
    std::optional<double> rd_lambda;
    std::optional<int> epochs, batch_size, latent_channels;
    std::optional<double> lr;
    std::optional<std::uint64_t> seed;
    std::string link = "digital";
    double snr_db = 10.0;
    int k_uplink = 256;
};

int cmd_train(const TrainArgs& a) {
    CodecConfig cfg = CodecConfig::desk_default(a.latent_channels.value_or(8));
    TrainSchedule sched;
    if (!a.config.empty()) {
        const auto j = read_json(a.config);
        cfg = codec_config_from_json(j.contains("codec") ? j.at("codec") : j);
        if (j.contains("schedule")) {
            const auto& s = j.at("schedule");
            try {
                sched.epochs = s.value("epochs", sched.epochs);
                sched.batch_size = s.value("batch_size", sched.batch_size);
                sched.learning_rate = s.value("learning_rate", sched.learning_rate);
                sched.final_lr_fraction = s.value("final_lr_fraction", sched.final_lr_fraction);
                sched.seed = s.value("seed", sched.seed);
                sched.max_model_samples = s.value("max_model_samples", sched.max_model_samples);
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError(std::string("schedule: ") + e.what());
            }
        }
    }
    if (a.latent_channels) cfg.encoder_layers.back().features = *a.latent_channels;
    if (a.rd_lambda) cfg.rd_lambda = *a.rd_lambda;
    if (a.epochs) sched.epochs = *a.epochs;
    if (a.batch_size) sched.batch_size = *a.batch_size;
    if (a.lr) sched.learning_rate = *a.lr;
    if (a.seed) sched.seed = *a.seed;
    try {
        cfg.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    if (sched.epochs < 1 || sched.batch_size < 1 || !(sched.learning_rate > 0))
        throw ConfigError("schedule: epochs, batch_size and learning_rate must be positive");

    const Dataset ds = load_dataset(a.dataset);
    if (ds.samples.empty()) throw ConfigError("dataset " + a.dataset + " is empty");
    for (const auto& h : ds.samples) {
        try {
            check_codec_input(h, cfg);
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
        }
    }
    Table log{{"epoch", "loss", "mse", "bits_per_entry"}, {}};
    auto on_epoch = [&](const EpochLog& e) {
        std::cerr << "epoch " << e.epoch << " loss " << e.loss << " mse " << e.mse << " bits/entry " << e.bits_per_entry
                  << "\n";
        log.add({fmt(e.epoch), fmt(e.loss), fmt(e.mse), fmt(e.bits_per_entry)});
    };
    const double scale = ds.manifest.scale.input_scale();
    if (a.link == "analog") {
        AnalogTrainOptions opt;
        opt.uplink = uplink_scenario(ds.manifest.scenario, a.k_uplink);
        const auto ls = CodecModel<float>(cfg).latent_shape(ds.manifest.n_subcarriers(), ds.manifest.n_bs());
        opt.feedback = {a.k_uplink, static_cast<int>(ls.size() / 2), a.snr_db, stream_seed(sched.seed, 1, 0xFEED)};
        opt.channel_seed = stream_seed(sched.seed, 0, 0xFEED);
        opt.channel_enabled = std::isfinite(a.snr_db);
        try {
            opt.feedback.validate();
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("analog training: ") + e.what());
        }
        auto r = train_analog<float>(ds.samples, cfg, sched, opt, on_epoch, scale);
        save_checkpoint(r.model, a.out);
        std::cout << "analog model: N_F = " << opt.feedback.n_feedback_subcarriers << ", rho = " << opt.feedback.rho()
                  << "\n";
    } else if (a.link == "digital") {
        auto r = train_codec<float>(ds.samples, cfg, sched, on_epoch, scale);
        save_checkpoint(r.model, a.out);
    } else {
        throw ConfigError("--link must be digital or analog");
    }
    if (!a.log.empty()) write_text(a.log, to_csv(log));
    std::cout << "checkpoint written to " << a.out << "\n";
    return 0;
}

// --- compress / decompress -----------------------------------------------------------

std::string stream_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sample_%06zu.csib", i);
    return buf;
}

struct CodecArgs {
    std::string ckpt, in, out;
    bool force = false;
};

int cmd_compress(const CodecArgs& a) {
    const auto m = load_checkpoint<float>(a.ckpt);
    const Dataset ds = load_dataset(a.in);
    if (!a.force && fs::exists(fs::path(a.out) / "index.json"))
        throw IoError("refusing to overwrite " + a.out + " (use --force)");
    std::error_code ec;
    fs::create_directories(a.out, ec);
    if (ec) throw IoError("cannot create " + a.out + ": " + ec.message());
    nlohmann::json files = nlohmann::json::array();
    double payload = 0.0;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const auto& h = ds.samples[i];
        try {
            check_codec_input(h, m.config);
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
        }
        const auto bs = compress(h, m);
        write_file(fs::path(a.out) / stream_name(i), serialize_bitstream(bs));
        files.push_back({{"file", stream_name(i)}, {"payload_bits", bs.bit_length}});
        payload += static_cast<double>(bs.bit_length);
    }
    const double entries = static_cast<double>(ds.samples.size()) * ds.manifest.n_subcarriers() * ds.manifest.n_bs() *
                           ds.manifest.n_ue();
    nlohmann::json index = {{"format_version", kFormatVersion},
                            {"source_manifest", to_json(ds.manifest)},
                            {"pmf_id", hex64(m.entropy.id())},
                            {"header_bytes", kBitstreamHeaderBytes},
                            {"payload_bits_per_entry", entries > 0 ? payload / entries : 0.0},
                            {"files", files}};
    write_json(fs::path(a.out) / "index.json", index);
    std::cout << "compressed " << ds.samples.size() << " samples, " << (entries > 0 ? payload / entries : 0.0)
              << " payload bits/entry\n";
    return 0;
}

int cmd_decompress(const CodecArgs& a) {
    const auto m = load_checkpoint<float>(a.ckpt);
    const auto index = read_json(fs::path(a.in) / "index.json");
    DatasetManifest src;
    std::vector<std::string> names;
    try {
        src = manifest_from_json(index.at("source_manifest"));
        for (const auto& f : index.at("files")) names.push_back(f.at("file").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("index.json: ") + e.what());
    }
    const fs::path out(a.out);
    if (!a.force && (fs::exists(out / "manifest.json") || fs::exists(out / "tensors.bin")))
        throw IoError("refusing to overwrite dataset in " + a.out + " (use --force)");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create " + a.out + ": " + ec.message());
    std::vector<unsigned char> buf;
    double power = 0.0;
    DatasetManifest dm = src;
    dm.sample_count = names.size();
    dm.scale = {};
    for (const auto& name : names) {
        const auto bytes = read_file(fs::path(a.in) / name);
        LatentBitstream bs;
        try {
            bs = parse_bitstream(bytes, m.entropy);
        } catch (const DecodeError& e) {
            throw IoError(name + ": " + e.what());
        }
        ChannelTensor h;
        try {
            h = decompress(bs, m, src.n_subcarriers(), src.n_bs(), src.scenario.scenario_id);
        } catch (const DecodeError& e) {
            throw IoError(name + ": " + e.what());
        }
        append_tensor(buf, h);
        power += h.squared_norm();
        for (const auto& v : h.data) dm.scale.max_abs = std::max(dm.scale.max_abs, std::abs(v));
    }
    const double entries = static_cast<double>(names.size()) * src.n_subcarriers() * src.n_bs() * src.n_ue();
    dm.scale.mean_entry_power = entries > 0 ? power / entries : 0.0;
    write_file(out / "tensors.bin", buf);
    write_json(out / "manifest.json", to_json(dm));
    std::cout << "decompressed " << names.size() << " samples to " << a.out << "\n";
    return 0;
}

// --- feedback ------------------------------------------------------------------------

struct FbArgs {
    std::string ckpt, dataset, out, summary;
    std::optional<double> rho;
    double snr_db = 10.0;
    int trials = 100;
    int k_uplink = 256;
    std::uint64_t seed = 1;
};

Dataset load_matching(const std::string& dir, const CodecConfig& cfg) {
    Dataset ds = load_dataset(dir);
    if (ds.samples.empty()) throw ConfigError("dataset " + dir + " is empty");
    try {
        check_codec_input(ds.samples.front(), cfg);
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    return ds;
}

void write_feedback(const FbArgs& a, const Dataset& ds, const FeedbackSummary& s, const std::string& model) {
    Table t{feedback_columns(), {}};
    append_feedback_rows(t, ds.manifest.scenario.scenario_id, s);
    write_text(a.out, to_csv(t));
    Table sum = feedback_summary_table();
    append_summary_row(sum, ds.manifest.scenario.scenario_id, model, s);
    if (!a.summary.empty()) write_text(a.summary, to_csv(sum));
    std::cout << "rho " << s.rho << " snr_db " << s.snr_db << " outage_rate " << s.outage_rate << " nmse_pooled_db "
              << s.nmse_pooled_db << " nmse_delivered_db " << s.nmse_delivered_db << "\n";
}

int cmd_fb_digital(const FbArgs& a) {
    if (!a.rho) throw ConfigError("--rho is required");
    if (!(*a.rho > 0.0 && *a.rho <= 1.0)) throw ConfigError("--rho must be in (0, 1]");
    if (a.trials < 1 || a.k_uplink < 1) throw ConfigError("--trials and --k-uplink must be >= 1");
    check_parent(a.out);
    const auto m = load_checkpoint<float>(a.ckpt);
    const Dataset ds = load_matching(a.dataset, m.config);
    const double r = *a.rho;
    const auto s = digital_rho_sweep(m, ds.samples, ds.manifest.scenario, std::span<const double>(&r, 1), a.snr_db,
                                     feedback_options(a.seed, a.k_uplink, a.trials));
    write_feedback(a, ds, s.front(), fs::path(a.ckpt).filename().string());
    return 0;
}

int cmd_fb_analog(const FbArgs& a) {
    if (a.trials < 1 || a.k_uplink < 1) throw ConfigError("--trials and --k-uplink must be >= 1");
    check_parent(a.out);
    const auto m = load_checkpoint<float>(a.ckpt);
    const Dataset ds = load_matching(a.dataset, m.config);
    const auto ls = m.latent_shape(ds.manifest.n_subcarriers(), ds.manifest.n_bs());
    const int nf = static_cast<int>(ls.size() / 2);
    if (a.rho && FeedbackConfig::subcarriers_for(*a.rho, a.k_uplink) != nf)
        throw ConfigError("--rho " + fmt(*a.rho) + " needs N_F = " +
                          std::to_string(FeedbackConfig::subcarriers_for(*a.rho, a.k_uplink)) +
                          " but the model emits " + std::to_string(ls.size()) + " reals (N_F = " + std::to_string(nf) +
                          "); retrain with a matching latent size");
    const auto s =
        analog_trials(m, ds.samples, ds.manifest.scenario, a.snr_db, feedback_options(a.seed, a.k_uplink, a.trials));
    write_feedback(a, ds, s, fs::path(a.ckpt).filename().string());
    return 0;
}

// --- sweep / plot --------------------------------------------------------------------

struct SweepArgs {
    std::string spec, out, json, plot, summary;
    std::optional<std::uint64_t> seed;
};

int cmd_sweep(const SweepArgs& a) {
    SweepSpec spec = sweep_spec_from_json(read_json(a.spec), fs::path(a.spec).parent_path());
    if (a.seed) spec.seed = *a.seed;
    check_parent(a.out);
    const Table rows = run_sweep(spec);
    write_text(a.out, to_csv(rows));
    const Table agg = aggregate_sweep(rows);
    if (!a.summary.empty()) write_text(a.summary, to_csv(agg));
    if (!a.json.empty()) write_text(a.json, to_json_envelope(rows, to_json(spec)).dump(2) + "\n");
    if (!a.plot.empty()) {
        const bool rate = spec.axis == SweepAxis::rd_lambda || spec.axis == SweepAxis::keep_fraction;
        write_text(a.plot, plot_table(agg, rate ? "bits_per_entry" : "value", "nmse_pooled_db", "model",
                                      "NMSE vs " + std::string(rate ? "bits per entry" : axis_name(spec.axis))));
    }
    std::cout << to_csv(agg);
    return 0;
}

struct PlotArgs {
    std::string in, out, x, y, group, title;
};

int cmd_plot(const PlotArgs& a) {
    Table t;
    try {
        t = parse_csv(read_text(a.in));
        write_text(a.out, plot_table(t, a.x, a.y, a.group, a.title.empty() ? a.y + " vs " + a.x : a.title));
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    std::cout << "wrote " << a.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"csilab: learned CSI compression and feedback lab"};
    app.set_version_flag("--version", std::string(csilab::kVersion));
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "generate a synthetic channel dataset");
    g->add_option("--config", gen.config, "scenario JSON (defaults when omitted)");
    g->add_option("--out", gen.out, "output directory")->required();
    g->add_option("--samples", gen.samples, "sample count")->required();
    g->add_option("--seed", gen.seed, "overrides the scenario rng_seed");
    g->add_flag("--force", gen.force, "overwrite an existing dataset");

    PilotArgs pil;
    auto* p = app.add_subcommand("pilots", "LS channel estimation from simulated pilots");
    p->add_option("--dataset", pil.dataset)->required();
    p->add_option("--pilot-len", pil.pilot_len, "pilot block length P")->required();
    p->add_option("--snr-db", pil.snr_db)->required();
    p->add_option("--adc-bits", pil.adc_bits, "receiver ADC resolution, 0 = unquantized");
    p->add_option("--out", pil.out, "CSV path")->required();
    p->add_option("--seed", pil.seed);

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "train a codec (digital) or an analog feedback autoencoder");
    t->add_option("--dataset", tr.dataset)->required();
    t->add_option("--config", tr.config, "codec JSON, optionally {codec, schedule}");
    t->add_option("--rd-lambda", tr.rd_lambda, "rate weight; larger means fewer bits");
    t->add_option("--out", tr.out, "checkpoint directory")->required();
    t->add_option("--epochs", tr.epochs);
    t->add_option("--batch-size", tr.batch_size);
    t->add_option("--lr", tr.lr);
    t->add_option("--latent-channels", tr.latent_channels);
    t->add_option("--seed", tr.seed);
    t->add_option("--log", tr.log, "per-epoch CSV");
    t->add_option("--link", tr.link, "digital or analog")->check(CLI::IsMember({"digital", "analog"}));
    t->add_option("--snr-db", tr.snr_db, "analog: training SNR (inf disables the channel)");
    t->add_option("--k-uplink", tr.k_uplink, "analog: uplink subcarrier count K_u");

    CodecArgs comp, decomp;
    auto* c = app.add_subcommand("compress", "compress a dataset into bitstream files");
    c->add_option("--ckpt", comp.ckpt)->required();
    c->add_option("--in", comp.in, "dataset directory")->required();
    c->add_option("--out", comp.out, "bitstream directory")->required();
    c->add_flag("--force", comp.force);
    c->add_option("--seed", [](const CLI::results_t&) { return true; }, "accepted for uniformity; compression is deterministic");
    auto* d = app.add_subcommand("decompress", "reconstruct a dataset from bitstream files");
    d->add_option("--ckpt", decomp.ckpt)->required();
    d->add_option("--in", decomp.in, "bitstream directory")->required();
    d->add_option("--out", decomp.out, "dataset directory")->required();
    d->add_flag("--force", decomp.force);
    d->add_option("--seed", [](const CLI::results_t&) { return true; }, "accepted for uniformity; decoding is deterministic");

    FbArgs fd, fa;
    for (auto [sub, args, name] : {std::tuple{&fd, "fb-digital", "capacity/outage digital feedback"},
                                   std::tuple{&fa, "fb-analog", "analog feedback over the SIMO uplink"}}) {
        auto* s = app.add_subcommand(args, name);
        s->add_option("--ckpt", sub->ckpt)->required();
        s->add_option("--dataset", sub->dataset)->required();
        s->add_option("--rho", sub->rho, "feedback overhead N_F/K_u");
        s->add_option("--snr-db", sub->snr_db);
        s->add_option("--trials", sub->trials);
        s->add_option("--k-uplink", sub->k_uplink);
        s->add_option("--seed", sub->seed);
        s->add_option("--out", sub->out, "per-trial CSV")->required();
        s->add_option("--summary", sub->summary, "pooled and outage-excluded NMSE CSV");
    }

    SweepArgs sw;
    auto* s = app.add_subcommand("sweep", "run a sweep spec");
    s->add_option("--spec", sw.spec, "sweep JSON")->required();
    s->add_option("--out", sw.out, "per-row CSV")->required();
    s->add_option("--summary", sw.summary, "aggregate CSV");
    s->add_option("--json", sw.json, "JSON envelope");
    s->add_option("--plot", sw.plot, "SVG line chart");
    s->add_option("--seed", sw.seed);

    PlotArgs pl;
    auto* pc = app.add_subcommand("plot", "render a CSV as an SVG line chart");
    pc->add_option("--in", pl.in)->required();
    pc->add_option("--out", pl.out)->required();
    pc->add_option("--x", pl.x)->required();
    pc->add_option("--y", pl.y)->required();
    pc->add_option("--group", pl.group);
    pc->add_option("--title", pl.title);
    pc->add_option("--seed", [](const CLI::results_t&) { return true; }, "accepted for uniformity");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(csilab::ExitCode::config_error);
    }

    try {
        if (*g) return cmd_gen(gen);
        if (*p) return cmd_pilots(pil);
        if (*t) return cmd_train(tr);
        if (*c) return cmd_compress(comp);
        if (*d) return cmd_decompress(decomp);
        if (app.got_subcommand("fb-digital")) return cmd_fb_digital(fd);
        if (app.got_subcommand("fb-analog")) return cmd_fb_analog(fa);
        if (*s) return cmd_sweep(sw);
        if (*pc) return cmd_plot(pl);
    } catch (const csilab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return static_cast<int>(csilab::ExitCode::config_error);
    } catch (const csilab::InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return static_cast<int>(csilab::ExitCode::config_error);
    } catch (const csilab::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return static_cast<int>(csilab::ExitCode::io_error);
    } catch (const csilab::DecodeError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return static_cast<int>(csilab::ExitCode::io_error);
    } catch (const csilab::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return static_cast<int>(csilab::ExitCode::numeric_failure);
    } catch (const csilab::UndefinedChannel& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return static_cast<int>(csilab::ExitCode::numeric_failure);
    }
    return 0;
}
