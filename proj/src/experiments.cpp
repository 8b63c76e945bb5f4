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

#include "isp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "isp/json_fields.hpp"
#include "isp/metrics.hpp"
#include "isp/synth.hpp"

namespace isp::exp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_report(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write report " + path.string());
    return out;
}

} // namespace

// evaluation --------------------------------------------------------------------

EvalRow evaluate_pair(const std::string& scene_id, const SrgbImage& pred, const SrgbImage& gt) {
    return {scene_id, metrics::psnr(pred, gt), metrics::ssim(pred, gt), metrics::color_error(pred, gt)};
}

EvalSummary summarize(std::vector<EvalRow> rows) {
    if (rows.empty()) throw ValidationError("evaluation split is empty");
    EvalSummary s;
    for (const auto& r : rows) {
        s.mean_psnr += r.psnr;
        s.mean_ssim += r.ssim;
        s.mean_color_error += r.color_error;
    }
    const auto n = static_cast<double>(rows.size());
    s.mean_psnr /= n;
    s.mean_ssim /= n;
    s.mean_color_error /= n;
    s.rows = std::move(rows);
    return s;
}

EvalSummary evaluate(const std::vector<SampleTriplet>& scenes, const Predictor& predict) {
    std::vector<EvalRow> rows;
    rows.reserve(scenes.size());
    for (const auto& t : scenes) rows.push_back(evaluate_pair(t.scene_id, predict(t), t.g_enh));
    return summarize(std::move(rows));
}

Predictor two_stage_predictor(const IspModel& model) {
    return [&model](const SampleTriplet& t) { return run_full(t.raw, model).enh_srgb; };
}

Predictor one_stage_predictor(const nn::ModuleParams<float>& theta, const nn::UNetSpec& spec) {
    return [&theta, &spec](const SampleTriplet& t) { return run_one_stage(t.raw, theta, spec); };
}

std::string format_metric(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

json metric_json(double v) {
    if (std::isinf(v)) return format_metric(v);
    return v;
}

void write_eval_csv(const fs::path& path, const EvalSummary& s) {
    auto out = open_report(path);
    out << "scene_id,psnr,ssim,color_error\n";
    for (const auto& r : s.rows) {
        out << r.scene_id << ',' << format_metric(r.psnr) << ',' << format_metric(r.ssim) << ','
            << format_metric(r.color_error) << '\n';
    }
    if (!out) throw IoError("failed writing report " + path.string());
}

json eval_json(const EvalSummary& s) {
    json rows = json::array();
    for (const auto& r : s.rows) {
        rows.push_back({{"scene_id", r.scene_id},
                        {"psnr", metric_json(r.psnr)},
                        {"ssim", metric_json(r.ssim)},
                        {"color_error", metric_json(r.color_error)}});
    }
    return {{"count", s.rows.size()},
            {"mean_psnr", metric_json(s.mean_psnr)},
            {"mean_ssim", metric_json(s.mean_ssim)},
            {"mean_color_error", metric_json(s.mean_color_error)},
            {"rows", rows}};
}

// histogram analysis ------------------------------------------------------------

double HistTable::median(const std::string& op) const {
    const auto it = std::find(operators.begin(), operators.end(), op);
    if (it == operators.end()) throw ValidationError("operator '" + op + "' not in the table");
    if (values.empty()) throw ValidationError("histogram table is empty");
    const auto k = static_cast<std::size_t>(it - operators.begin());
    std::vector<double> v;
    for (const auto& row : values) v.push_back(row[k]);
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace {

std::vector<float> gamma_encode(std::span<const float> linear) {
    std::vector<float> out(linear.size());
    for (std::size_t i = 0; i < linear.size(); ++i) {
        out[i] = static_cast<float>(std::pow(std::clamp(static_cast<double>(linear[i]), 0.0, 1.0), 1.0 / 2.2));
    }
    return out;
}

} // namespace

HistTable analyze_histograms(const std::vector<SampleTriplet>& scenes, const std::vector<std::string>& operators,
                             std::uint64_t seed, double denoise_sigma) {
    for (const auto& op : operators) {
        if (std::find(kHistOperators.begin(), kHistOperators.end(), op) == kHistOperators.end()) {
            throw ValidationError("unknown histogram operator '" + op + "'");
        }
    }
    if (!(denoise_sigma >= 0.0)) throw ValidationError("denoise sigma must be non-negative");
    HistTable t;
    t.operators = operators;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const SampleTriplet& s = scenes[i];
        const SrgbImage linear = xyz_to_srgb(s.g_rest);
        const std::vector<float> base = gamma_encode(linear.data());
        std::vector<double> row;
        for (const auto& op : operators) {
            if (op == "identity") {
                row.push_back(metrics::histogram_divergence(base, base));
            } else if (op == "demosaic-roundtrip") {
                const CameraImage cam(linear.height(), linear.width(),
                                      std::vector<float>(linear.data().begin(), linear.data().end()));
                const auto plane = synth::mosaic(cam, s.raw.pattern);
                const CameraImage back = initial_demosaic(plane, linear.height(), linear.width(), s.raw.pattern);
                row.push_back(metrics::histogram_divergence(base, gamma_encode(back.data())));
            } else if (op == "denoise-roundtrip") {
                std::mt19937_64 rng(synth::scene_seed(seed, i));
                std::normal_distribution<double> noise(0.0, denoise_sigma > 0.0 ? denoise_sigma : 1.0);
                std::vector<float> noisy(base);
                if (denoise_sigma > 0.0) {
                    for (float& v : noisy) v = static_cast<float>(v + noise(rng));
                }
                row.push_back(metrics::histogram_divergence(noisy, base));
            } else {
                row.push_back(metrics::histogram_divergence(base, std::vector<float>(s.g_enh.data().begin(),
                                                                                     s.g_enh.data().end())));
            }
        }
        t.scene_ids.push_back(s.scene_id);
        t.values.push_back(std::move(row));
    }
    return t;
}

void write_hist_csv(const fs::path& path, const HistTable& t) {
    auto out = open_report(path);
    out << "scene_id";
    for (const auto& op : t.operators) out << ',' << op;
    out << '\n';
    for (std::size_t i = 0; i < t.values.size(); ++i) {
        out << t.scene_ids[i];
        for (double v : t.values[i]) out << ',' << format_metric(v);
        out << '\n';
    }
    if (!out) throw IoError("failed writing report " + path.string());
}

json hist_json(const HistTable& t) {
    json medians = json::object();
    if (!t.values.empty()) {
        for (const auto& op : t.operators) medians[op] = t.median(op);
    }
    return {{"count", t.values.size()}, {"operators", t.operators}, {"medians", medians}};
}

// ablation ----------------------------------------------------------------------

void AblationConfig::validate() const {
    model.validate();
    if (one_stage_base) one_stage_base->validate();
    schedule.validate();
    if (seeds.empty()) throw ValidationError("ablation field 'seeds' must not be empty");
}

json to_json(const AblationConfig& c) {
    json j{{"model", to_json(c.model)}, {"schedule", train::to_json(c.schedule)}, {"seeds", c.seeds}};
    if (c.one_stage_base) j["one_stage_base"] = nn::to_json(*c.one_stage_base);
    return j;
}

AblationConfig ablation_config_from_json(const json& j, const std::string& context) {
    JsonFields f(j, context);
    AblationConfig c;
    if (f.has("model")) c.model = pipeline_spec_from_json(f.raw("model"), f.path("model"));
    if (f.has("one_stage_base")) {
        c.one_stage_base = nn::unet_spec_from_json(f.raw("one_stage_base"), f.path("one_stage_base"));
    }
    if (f.has("schedule")) c.schedule = train::schedule_from_json(f.raw("schedule"), f.path("schedule"));
    f.get("seeds", c.seeds);
    f.finish();
    try {
        c.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(context + ": " + e.what());
    }
    return c;
}

AblationReport run_ablation(const AblationConfig& cfg, const std::vector<SampleTriplet>& train_scenes,
                            const std::vector<SampleTriplet>& test_scenes, const AblationOptions& opts) {
    cfg.validate();
    if (train_scenes.empty()) throw ValidationError("ablation: training split is empty");
    if (test_scenes.empty()) throw ValidationError("ablation: test split is empty");
    AblationReport report;
    report.dry_run = opts.dry_run;
    const std::vector<std::uint64_t> seeds =
        opts.dry_run ? std::vector<std::uint64_t>{cfg.seeds.front()} : cfg.seeds;
    const nn::UNetSpec os_spec = one_stage_spec(cfg.model, cfg.one_stage_base);
    const std::size_t two_stage_params =
        nn::parameter_count(cfg.model.restore) + nn::parameter_count(cfg.model.enhance);

    auto logger = [&](const std::string& variant) {
        train::RunOptions o;
        if (opts.on_epoch) o.on_epoch = [&, variant](const train::EpochRecord& r) { opts.on_epoch(variant, r); };
        return o;
    };
    auto row = [&](const std::string& variant, std::uint64_t seed, const EvalSummary& e, std::size_t params,
                   int epochs) {
        report.rows.push_back({variant, seed, e.mean_psnr, e.mean_ssim, e.mean_color_error, params, epochs});
    };

    for (const std::uint64_t seed : seeds) {
        train::TrainingSchedule s = cfg.schedule;
        s.seed = seed;
        if (opts.dry_run) s.epochs_step1 = s.epochs_step2 = s.epochs_step3 = 1;
        const int e1 = s.epochs_step1, e2 = s.epochs_step2, e3 = s.epochs_step3;

        const IspModel init = build_model(cfg.model, seed);
        const IspModel m12 =
            train::train_step2(train::train_step1(init, train_scenes, s, logger("default")), train_scenes, s,
                               logger("default"));
        const IspModel full = train::train_step3_joint(m12, train_scenes, s, logger("default"));
        // The forced step-3-only mode: joint fine-tuning settings applied to the
        // initialization, given the epochs of the longer first step plus step 3.
        train::TrainingSchedule forced = s;
        forced.epochs_step3 = std::max(e1, e2) + e3;
        const IspModel joint = train::train_step3_joint(init, train_scenes, forced, logger("without_steps_1_2"));
        const auto os_init = build_one_stage_counterpart(os_spec, seed);
        const auto os = train::train_one_stage(os_init, os_spec, train_scenes, s, e1 + e2 + e3, logger("one_stage"));

        row("default", seed, evaluate(test_scenes, two_stage_predictor(full)), two_stage_params, e1 + e2 + e3);
        row("one_stage", seed, evaluate(test_scenes, one_stage_predictor(os, os_spec)),
            nn::parameter_count(os_spec), e1 + e2 + e3);
        row("without_steps_1_2", seed, evaluate(test_scenes, two_stage_predictor(joint)), two_stage_params,
            std::max(e1, e2) + e3);
        row("without_step_3", seed, evaluate(test_scenes, two_stage_predictor(m12)), two_stage_params, e1 + e2);
    }

    auto psnr_of = [&](std::uint64_t seed, const std::string& variant) {
        for (const auto& r : report.rows) {
            if (r.seed == seed && r.variant == variant) return r.psnr;
        }
        throw Error("missing ablation row");
    };
    for (const auto seed : seeds) {
        if (psnr_of(seed, "default") > psnr_of(seed, "one_stage")) ++report.default_beats_one_stage;
        if (psnr_of(seed, "default") > psnr_of(seed, "without_steps_1_2")) ++report.default_beats_without_12;
    }
    for (const auto& v : kAblationVariants) {
        AblationRow mean{v, 0, 0.0, 0.0, 0.0, 0, 0};
        int n = 0;
        for (const auto& r : report.rows) {
            if (r.variant != v) continue;
            mean.psnr += r.psnr;
            mean.ssim += r.ssim;
            mean.color_error += r.color_error;
            mean.parameters = r.parameters;
            mean.epochs = r.epochs;
            ++n;
        }
        mean.psnr /= n;
        mean.ssim /= n;
        mean.color_error /= n;
        report.means.push_back(mean);
    }
    const double d = report.means[0].psnr, w12 = report.means[2].psnr, w3 = report.means[3].psnr;
    report.without_3_between = w12 <= w3 && w3 <= d;
    return report;
}

json ablation_json(const AblationReport& r) {
    auto row_json = [](const AblationRow& a, bool with_seed) {
        json j{{"variant", a.variant},
               {"psnr", metric_json(a.psnr)},
               {"ssim", metric_json(a.ssim)},
               {"color_error", metric_json(a.color_error)},
               {"parameters", a.parameters},
               {"epochs", a.epochs}};
        if (with_seed) j["seed"] = a.seed;
        return j;
    };
    json rows = json::array(), table = json::array();
    for (const auto& a : r.rows) rows.push_back(row_json(a, true));
    for (const auto& a : r.means) table.push_back(row_json(a, false));
    const auto seeds = r.rows.size() / kAblationVariants.size();
    return {{"dry_run", r.dry_run},
            {"seeds", seeds},
            {"table", table},
            {"rows", rows},
            {"checks",
             {{"default_beats_one_stage", r.default_beats_one_stage},
              {"default_beats_without_steps_1_2", r.default_beats_without_12},
              {"without_step_3_between", r.without_3_between}}}};
}

void write_ablation_csv(const fs::path& path, const AblationReport& r) {
    auto out = open_report(path);
    out << "variant,seed,psnr,ssim,color_error,parameters,epochs\n";
    auto line = [&](const AblationRow& a, const std::string& seed) {
        out << a.variant << ',' << seed << ',' << format_metric(a.psnr) << ',' << format_metric(a.ssim) << ','
            << format_metric(a.color_error) << ',' << a.parameters << ',' << a.epochs << '\n';
    };
    for (const auto& a : r.rows) line(a, std::to_string(a.seed));
    for (const auto& a : r.means) line(a, "mean");
    if (!out) throw IoError("failed writing report " + path.string());
}

} // namespace isp::exp
