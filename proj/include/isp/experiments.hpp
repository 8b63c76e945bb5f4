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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "isp/dataset.hpp"
#include "isp/pipeline.hpp"
#include "isp/training.hpp"

namespace isp::exp {

// Evaluation ------------------------------------------------------------------

struct EvalRow {
    std::string scene_id;
    double psnr = 0.0;
    double ssim = 0.0;
    double color_error = 0.0; // degrees
};

struct EvalSummary {
    std::vector<EvalRow> rows;
    double mean_psnr = 0.0; // infinite when any row is
    double mean_ssim = 0.0;
    double mean_color_error = 0.0;
};

using Predictor = std::function<SrgbImage(const SampleTriplet&)>;

EvalRow evaluate_pair(const std::string& scene_id, const SrgbImage& pred, const SrgbImage& gt);
EvalSummary summarize(std::vector<EvalRow> rows);
// Compares predict(scene) with the scene's enhancement ground truth.
EvalSummary evaluate(const std::vector<SampleTriplet>& scenes, const Predictor& predict);

Predictor two_stage_predictor(const IspModel& model);
Predictor one_stage_predictor(const nn::ModuleParams<float>& theta, const nn::UNetSpec& spec);

// Numbers as written to reports; infinity becomes "inf".
std::string format_metric(double v);
nlohmann::json metric_json(double v);

void write_eval_csv(const std::filesystem::path& path, const EvalSummary& s);
nlohmann::json eval_json(const EvalSummary& s);

// Histogram analysis ------------------------------------------------------------

// Operators applied to the display-referred restoration ground truth
// B = (C_srgb G_rest)^(1/2.2):
//   identity            B -> B
//   demosaic-roundtrip  B -> gamma(demosaic(mosaic(C_srgb G_rest)))
//   denoise-roundtrip   B + N(0, sigma) -> B
//   enhance             B -> G_enh
inline const std::vector<std::string> kHistOperators{"identity", "demosaic-roundtrip", "denoise-roundtrip",
                                                     "enhance"};
inline constexpr double kDenoiseSigma = 20.0 / 255.0;

struct HistTable {
    std::vector<std::string> operators;
    std::vector<std::string> scene_ids;
    std::vector<std::vector<double>> values; // [scene][operator]

    double median(const std::string& op) const;
};

// Unknown operator names raise ValidationError.
HistTable analyze_histograms(const std::vector<SampleTriplet>& scenes, const std::vector<std::string>& operators,
                             std::uint64_t seed, double denoise_sigma = kDenoiseSigma);
void write_hist_csv(const std::filesystem::path& path, const HistTable& t);
nlohmann::json hist_json(const HistTable& t);

// Ablation ----------------------------------------------------------------------

inline const std::vector<std::string> kAblationVariants{"default", "one_stage", "without_steps_1_2",
                                                        "without_step_3"};

struct AblationConfig {
    PipelineSpec model;
    std::optional<nn::UNetSpec> one_stage_base; // block design the one-stage width search starts from
    train::TrainingSchedule schedule;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};

    void validate() const;
};

nlohmann::json to_json(const AblationConfig& c);
AblationConfig ablation_config_from_json(const nlohmann::json& j, const std::string& context = "ablation");

struct AblationRow {
    std::string variant;
    std::uint64_t seed = 0;
    double psnr = 0.0;
    double ssim = 0.0;
    double color_error = 0.0;
    std::size_t parameters = 0;
    int epochs = 0; // epochs of training received, summed over steps
};

struct AblationReport {
    std::vector<AblationRow> rows;       // one per (seed, variant)
    std::vector<AblationRow> means;      // one per variant, averaged over seeds
    int default_beats_one_stage = 0;     // seeds where default PSNR > one-stage PSNR
    int default_beats_without_12 = 0;    // seeds where default PSNR > without-steps-1,2 PSNR
    bool without_3_between = false;      // mean PSNR ordering: without_1_2 <= without_3 <= default
    bool dry_run = false;
};

struct AblationOptions {
    bool dry_run = false; // one seed, one epoch per step
    std::function<void(const std::string& variant, const train::EpochRecord&)> on_epoch;
};

AblationReport run_ablation(const AblationConfig& cfg, const std::vector<SampleTriplet>& train_scenes,
                            const std::vector<SampleTriplet>& test_scenes, const AblationOptions& opts = {});

nlohmann::json ablation_json(const AblationReport& r);
void write_ablation_csv(const std::filesystem::path& path, const AblationReport& r);

} // namespace isp::exp
