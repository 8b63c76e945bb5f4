// Copyright (c) 2026 The twostage-isp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// ispnet: dataset synthesis, three-step training, evaluation, histogram
// analysis, ablation and inference for the two-stage ISP network.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "json.hpp"

#include "isp/checkpoint.hpp"
#include "isp/dataset.hpp"
#include "isp/error.hpp"
#include "isp/experiments.hpp"
#include "isp/io.hpp"
#include "isp/synth.hpp"
#include "isp/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace isp;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

void init_logging() {
    auto logger = spdlog::stderr_color_mt("ispnet");
    logger->set_pattern("[%H:%M:%S] %^%l%$ %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* v = std::getenv("CAMERANET_LOG"); v && *v) {
        const auto level = spdlog::level::from_str(v);
        // from_str maps unknown names to off; only accept real names.
        if (level == spdlog::level::off && std::string(v) != "off") {
            throw ValidationError("CAMERANET_LOG must be one of trace, debug, info, warn, error, critical, off");
        }
        spdlog::set_level(level);
    }
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

// "<report>.csv" and "<report>.json" from a --report path with or without an extension.
std::pair<fs::path, fs::path> report_paths(const fs::path& report) {
    fs::path base = report;
    if (base.extension() == ".csv" || base.extension() == ".json") base.replace_extension();
    return {fs::path(base).concat(".csv"), fs::path(base).concat(".json")};
}

std::vector<SampleTriplet> split_or_all(const Dataset& d, const std::string& split) {
    if (split == "all") return d.scenes;
    if (split != "train" && split != "test") throw ValidationError("--split must be train, test or all");
    return d.split(split);
}

std::vector<int> parse_steps(const std::string& text) {
    std::set<int> steps;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const auto item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (item != "1" && item != "2" && item != "3") {
            throw ValidationError("--steps must list steps from {1,2,3}, got '" + text + "'");
        }
        steps.insert(item[0] - '0');
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return {steps.begin(), steps.end()};
}

// Training config: a schedule object with an optional "model" pipeline spec.
struct TrainConfig {
    train::TrainingSchedule schedule;
    std::optional<PipelineSpec> model;
};

TrainConfig load_train_config(const fs::path& path) {
    json j = read_json(path);
    if (!j.is_object()) throw ValidationError(path.string() + ": expected an object");
    TrainConfig c;
    if (j.contains("model")) {
        c.model = pipeline_spec_from_json(j.at("model"), "model");
        j.erase("model");
    }
    c.schedule = train::schedule_from_json(j, path.filename().string());
    return c;
}

// Subcommands -------------------------------------------------------------------

struct SynthArgs {
    std::string config, out;
    int count = 10;
    std::uint64_t seed = 0;
};

void cmd_synth(const SynthArgs& a) {
    const synth::SynthConfig config = a.config.empty() ? synth::SynthConfig{} : synth::load_synth_config(a.config);
    config.validate();
    if (a.count < 0) throw ValidationError("--count must be >= 0");
    const auto m = synth::synthesize_corpus(a.out, config, a.count, a.seed);
    const fs::path manifest = fs::path(a.out) / "manifest.json";
    spdlog::info("wrote {} scenes, manifest {} (crc32 {})", m.scenes.size(), manifest.string(), crc32_hex(manifest));
}

struct TrainArgs {
    std::string config, manifest, out, steps = "1,2,3";
    std::optional<std::uint64_t> seed;
    bool force = false;
};

void cmd_train(const TrainArgs& a) {
    TrainConfig cfg = load_train_config(a.config);
    if (a.seed) cfg.schedule.seed = *a.seed;
    const auto steps = parse_steps(a.steps);
    const Dataset data = load_dataset(a.manifest);
    const auto scenes = data.split("train");
    if (scenes.empty()) throw ValidationError("training split of " + a.manifest + " is empty");

    const fs::path out = a.out;
    fs::create_directories(out);
    const fs::path prefix = out / "model";
    IspModel model;
    std::vector<int> done;
    if (ad::checkpoint_exists(prefix)) {
        json meta;
        model = train::load_model(prefix, &meta);
        done = meta.value("steps_done", std::vector<int>{});
        if (cfg.model && *cfg.model != model.spec) {
            throw ValidationError("model spec in " + a.config + " differs from the checkpoint " + prefix.string());
        }
        if (meta.contains("schedule") && train::schedule_from_json(meta.at("schedule")) != cfg.schedule) {
            spdlog::warn("schedule differs from the one recorded in {}", prefix.string());
        }
        spdlog::info("resuming from {} (steps done: {})", prefix.string(), json(done).dump());
    } else {
        model = build_model(cfg.model.value_or(PipelineSpec{}), cfg.schedule.seed);
    }

    std::ofstream log(out / "train_log.jsonl", std::ios::app);
    if (!log) throw IoError("cannot write " + (out / "train_log.jsonl").string());
    train::RunOptions opts;
    opts.out_dir = out;
    opts.on_epoch = [&](const train::EpochRecord& r) {
        log << train::to_json(r).dump() << '\n';
        log.flush();
        spdlog::info("{} epoch {}/{} lr {:.3g} loss {:.6f} (rest {:.6f}, enh {:.6f})", r.step, r.epoch, r.epochs,
                     r.lr, r.loss, r.loss_rest, r.loss_enh);
    };

    auto has = [&](int s) { return std::ranges::find(done, s) != done.end(); };
    for (const int step : steps) {
        if (step == 3 && !(has(1) && has(2)) && !a.force) {
            throw ValidationError("step 3 needs checkpoints from steps 1 and 2 in " + out.string() +
                                  " (pass --force to fine-tune without them)");
        }
        spdlog::info("step {} on {} scenes", step, scenes.size());
        if (step == 1) model = train::train_step1(model, scenes, cfg.schedule, opts);
        if (step == 2) model = train::train_step2(model, scenes, cfg.schedule, opts);
        if (step == 3) model = train::train_step3_joint(model, scenes, cfg.schedule, opts);
        done.push_back(step);
        const json meta{{"steps_done", done}, {"schedule", train::to_json(cfg.schedule)}};
        train::save_model(out / ("step" + std::to_string(step)), model, meta);
        train::save_model(prefix, model, meta);
    }
    spdlog::info("final checkpoint {} (restore {}, enhance {})", prefix.string(),
                 train::params_checksum(model.restore.params), train::params_checksum(model.enhance.params));
}

// Two-stage model or one-stage module, chosen by the checkpoint kind.
struct LoadedPredictor {
    std::optional<IspModel> model;
    std::optional<nn::ModuleParams<float>> module;
    nn::UNetSpec module_spec;

    explicit LoadedPredictor(const fs::path& prefix) {
        const std::string kind = ad::load_checkpoint(prefix).metadata.value("kind", "");
        if (kind == "model") {
            model = train::load_model(prefix);
        } else if (kind == "module") {
            module = train::load_module(prefix, &module_spec);
            if (module->role != nn::Role::OneStage) {
                throw ValidationError(prefix.string() + " holds a single stage, not a one-stage network");
            }
        } else {
            throw ValidationError(prefix.string() + " is not a model checkpoint");
        }
    }

    exp::Predictor predictor() const {
        return model ? exp::two_stage_predictor(*model) : exp::one_stage_predictor(*module, module_spec);
    }
};

struct EvalArgs {
    std::string checkpoint, manifest, report, split = "test";
};

void cmd_eval(const EvalArgs& a) {
    const Dataset data = load_dataset(a.manifest);
    const auto scenes = split_or_all(data, a.split);
    const LoadedPredictor p(a.checkpoint);
    const auto summary = exp::evaluate(scenes, p.predictor());
    const auto [csv, js] = report_paths(a.report);
    exp::write_eval_csv(csv, summary);
    write_json(js, exp::eval_json(summary));
    spdlog::info("{} scenes: PSNR {} dB, SSIM {}, color error {} deg; wrote {}", summary.rows.size(),
                 exp::format_metric(summary.mean_psnr), exp::format_metric(summary.mean_ssim),
                 exp::format_metric(summary.mean_color_error), csv.string());
}

struct HistArgs {
    std::string manifest, report, operators, split = "all";
    std::uint64_t seed = 0;
};

void cmd_analyze_hist(const HistArgs& a) {
    std::vector<std::string> ops = exp::kHistOperators;
    if (!a.operators.empty()) {
        ops.clear();
        std::size_t pos = 0;
        while (true) {
            const auto comma = a.operators.find(',', pos);
            ops.push_back(a.operators.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
    }
    const Dataset data = load_dataset(a.manifest);
    const auto table = exp::analyze_histograms(split_or_all(data, a.split), ops, a.seed);
    const auto [csv, js] = report_paths(a.report);
    exp::write_hist_csv(csv, table);
    write_json(js, exp::hist_json(table));
    for (const auto& op : table.operators) {
        if (!table.values.empty()) spdlog::info("median {}: {:.6f}", op, table.median(op));
    }
}

struct AblateArgs {
    std::string config, manifest, out;
    bool dry_run = false;
};

void cmd_ablate(const AblateArgs& a) {
    const auto cfg = exp::ablation_config_from_json(read_json(a.config), fs::path(a.config).filename().string());
    const Dataset data = load_dataset(a.manifest);
    const fs::path out = a.out;
    fs::create_directories(out);
    std::ofstream log(out / "ablation_log.jsonl", std::ios::trunc);
    exp::AblationOptions opts;
    opts.dry_run = a.dry_run;
    opts.on_epoch = [&](const std::string& variant, const train::EpochRecord& r) {
        json j = train::to_json(r);
        j["variant"] = variant;
        log << j.dump() << '\n';
        spdlog::debug("{} {} epoch {}/{} loss {:.6f}", variant, r.step, r.epoch, r.epochs, r.loss);
    };
    const auto report = exp::run_ablation(cfg, data.split("train"), data.split("test"), opts);
    exp::write_ablation_csv(out / "ablation.csv", report);
    write_json(out / "ablation.json", exp::ablation_json(report));
    for (const auto& m : report.means) {
        spdlog::info("{:<18} PSNR {} SSIM {} color error {}", m.variant, exp::format_metric(m.psnr),
                     exp::format_metric(m.ssim), exp::format_metric(m.color_error));
    }
}

struct InferArgs {
    std::string checkpoint, manifest, out, split = "test";
};

void cmd_infer(const InferArgs& a) {
    const Dataset data = load_dataset(a.manifest);
    const LoadedPredictor p(a.checkpoint);
    const auto predict = p.predictor();
    const fs::path out = a.out;
    fs::create_directories(out);
    const auto scenes = split_or_all(data, a.split);
    for (const auto& t : scenes) {
        const SrgbImage img = predict(t);
        save_image(out / t.scene_id, img);
        write_ppm(out / (t.scene_id + ".ppm"), img);
    }
    spdlog::info("wrote {} images to {}", scenes.size(), out.string());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage learned camera ISP: synthesis, training, evaluation and analysis"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus and its manifest");
    synth->add_option("--config", synth_args.config, "Synthesis config JSON (defaults when omitted)");
    synth->add_option("--out", synth_args.out, "Output directory")->required();
    synth->add_option("--count", synth_args.count, "Number of scenes")->capture_default_str();
    synth->add_option("--seed", synth_args.seed, "Corpus seed")->capture_default_str();

    TrainArgs train_args;
    auto* trn = app.add_subcommand("train", "Run training steps 1, 2 and 3");
    trn->add_option("--config", train_args.config, "Training config JSON")->required();
    trn->add_option("--manifest", train_args.manifest, "Dataset manifest")->required();
    trn->add_option("--out", train_args.out, "Checkpoint and log directory")->required();
    trn->add_option("--steps", train_args.steps, "Comma-separated subset of 1,2,3")->capture_default_str();
    trn->add_option("--seed", train_args.seed, "Override the schedule seed");
    trn->add_flag("--force", train_args.force, "Allow step 3 without checkpoints from steps 1 and 2");

    EvalArgs eval_args;
    auto* ev = app.add_subcommand("eval", "PSNR, SSIM and color error against the enhancement ground truth");
    ev->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint prefix")->required();
    ev->add_option("--manifest", eval_args.manifest, "Dataset manifest")->required();
    ev->add_option("--report", eval_args.report, "Report path; writes .csv and .json")->required();
    ev->add_option("--split", eval_args.split, "train, test or all")->capture_default_str();

    HistArgs hist_args;
    auto* hist = app.add_subcommand("analyze-hist", "Histogram divergence of restoration and enhancement operators");
    hist->add_option("--manifest", hist_args.manifest, "Dataset manifest")->required();
    hist->add_option("--report", hist_args.report, "Report path; writes .csv and .json")->required();
    hist->add_option("--operators", hist_args.operators,
                     "Comma-separated operators (identity, demosaic-roundtrip, denoise-roundtrip, enhance)");
    hist->add_option("--split", hist_args.split, "train, test or all")->capture_default_str();
    hist->add_option("--seed", hist_args.seed, "Noise seed of denoise-roundtrip")->capture_default_str();

    AblateArgs ablate_args;
    auto* abl = app.add_subcommand("ablate", "Two-stage default against one-stage and training-scheme variants");
    abl->add_option("--config", ablate_args.config, "Ablation config JSON")->required();
    abl->add_option("--manifest", ablate_args.manifest, "Dataset manifest")->required();
    abl->add_option("--out", ablate_args.out, "Report directory")->required();
    abl->add_flag("--dry-run", ablate_args.dry_run, "First seed only, one epoch per step");

    InferArgs infer_args;
    auto* inf = app.add_subcommand("infer", "Write enhanced sRGB images for a split");
    inf->add_option("--checkpoint", infer_args.checkpoint, "Checkpoint prefix")->required();
    inf->add_option("--manifest", infer_args.manifest, "Dataset manifest")->required();
    inf->add_option("--out", infer_args.out, "Output directory")->required();
    inf->add_option("--split", infer_args.split, "train, test or all")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        init_logging();
        if (*synth) cmd_synth(synth_args);
        if (*trn) cmd_train(train_args);
        if (*ev) cmd_eval(eval_args);
        if (*hist) cmd_analyze_hist(hist_args);
        if (*abl) cmd_ablate(ablate_args);
        if (*inf) cmd_infer(infer_args);
    } catch (const TrainingAborted& e) {
        spdlog::error("{} (checkpoint {})", e.what(), e.checkpoint());
        return kExitRuntime;
    } catch (const ValidationError& e) {
        spdlog::error("validation error: {}", e.what());
        return kExitValidation;
    } catch (const DataError& e) {
        spdlog::error("dataset error: {}", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitRuntime;
    }
    return 0;
}
