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
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "isp/dataset.hpp"
#include "isp/losses.hpp"
#include "isp/pipeline.hpp"

namespace isp::train {

struct AugmentFlags {
    bool rotate = true;
    bool flip = true;

    bool operator==(const AugmentFlags&) const = default;
};

struct TrainingSchedule {
    int epochs_step1 = 20;
    int epochs_step2 = 20;
    int epochs_step3 = 5;
    double lr_initial = 1e-4;
    double lr_decay_factor = 0.1;
    double lr_decay_at = 0.75; // fraction of the epochs after which the decay applies
    double lr_step3 = 1e-5;
    double lambda = 0.5;
    double epsilon = 1e-4; // log clamp of the restoration loss
    int patch_size = 64;
    std::uint64_t seed = 0;
    AugmentFlags augment;
    int checkpoint_every = 0; // epochs between periodic checkpoints, 0 disables

    void validate() const;
    LossConfig loss_config() const;
    bool operator==(const TrainingSchedule&) const = default;
};

nlohmann::json to_json(const TrainingSchedule& s);
TrainingSchedule schedule_from_json(const nlohmann::json& j, const std::string& context = "schedule");

// lr_initial before lr_decay_at * total epochs, lr_initial * lr_decay_factor after.
double lr_at(int epoch, int total_epochs, const TrainingSchedule& s);

// Patches ---------------------------------------------------------------------

// Crops all three images; the offsets must be even so the CFA phase is kept.
SampleTriplet crop_patch(const SampleTriplet& t, int y0, int x0, int size);

// Even-aligned random crop of `size` pixels.
SampleTriplet sample_patch(const SampleTriplet& t, int size, std::mt19937_64& rng);

// Dihedral element k in [0, 8): rotate k % 4 quarter turns counterclockwise,
// then mirror left-right when k >= 4. The result is translated circularly by
// at most one pixel per axis so every raw site keeps the channel the declared
// CFA pattern assigns to it; the same map is applied to the ground truths,
// the vignette map and the bad-pixel list.
SampleTriplet augment(const SampleTriplet& patch, int element);

// Element drawn uniformly from those the flags allow.
int draw_element(const AugmentFlags& flags, std::mt19937_64& rng);
SampleTriplet augment(const SampleTriplet& patch, const AugmentFlags& flags, std::uint64_t seed);

// Network inputs and targets of one patch.
struct StageInputs {
    XyzImage raw_xyz;   // C_xyz prepare(raw)
    XyzImage g_rest;
    SrgbImage rest_srgb; // C_srgb g_rest, the Enhance-Net input of step 2
    SrgbImage g_enh;
};

StageInputs stage_inputs(const SampleTriplet& patch);

// Losses of one patch -----------------------------------------------------------

struct JointTerms {
    ad::Tensor<float> rest;
    ad::Tensor<float> enh;
    ad::Tensor<float> joint;
};

ad::Tensor<float> step1_loss(ad::Tape<float>& tape, const StageInputs& in, const IspModel& model,
                             const LossConfig& cfg);
ad::Tensor<float> step2_loss(ad::Tape<float>& tape, const StageInputs& in, const IspModel& model);
// The enhancement branch consumes enhance(C_srgb restore(.)).
JointTerms joint_terms(ad::Tape<float>& tape, const StageInputs& in, const IspModel& model, const LossConfig& cfg);

// Training runs -----------------------------------------------------------------

struct EpochRecord {
    std::string step; // "step1", "step2", "step3", "joint", "one_stage"
    int epoch = 0;
    int epochs = 0;
    double lr = 0.0;
    double loss = 0.0; // mean over the epoch's iterations
    double loss_rest = 0.0;
    double loss_enh = 0.0;
    int iterations = 0;
};

nlohmann::json to_json(const EpochRecord& r);

struct RunOptions {
    std::filesystem::path out_dir; // checkpoints and abort dumps; empty disables periodic checkpoints
    std::function<void(const EpochRecord&)> on_epoch;
    // Called after on_epoch with the current two-module state; not used by train_one_stage.
    std::function<void(const EpochRecord&, const IspModel&)> on_model_epoch;
};

// Each step returns updated copies; the inputs are never modified. Steps 1 and
// 2 draw patches from independent streams, so their order does not matter.
IspModel train_step1(const IspModel& model, const std::vector<SampleTriplet>& scenes, const TrainingSchedule& s,
                     const RunOptions& opts = {});
IspModel train_step2(const IspModel& model, const std::vector<SampleTriplet>& scenes, const TrainingSchedule& s,
                     const RunOptions& opts = {});
// Fine-tuning at the fixed lr_step3 for epochs_step3 epochs.
IspModel train_step3_joint(const IspModel& model, const std::vector<SampleTriplet>& scenes,
                           const TrainingSchedule& s, const RunOptions& opts = {});

// Joint training from initialization with the decaying schedule of steps 1
// and 2, for `epochs` epochs.
IspModel train_joint_from_scratch(const IspModel& model, const std::vector<SampleTriplet>& scenes,
                                  const TrainingSchedule& s, int epochs, const RunOptions& opts = {});

// Single network trained on the enhancement loss from C_srgb C_xyz prepare(raw).
nn::ModuleParams<float> train_one_stage(const nn::ModuleParams<float>& theta, const nn::UNetSpec& spec,
                                        const std::vector<SampleTriplet>& scenes, const TrainingSchedule& s,
                                        int epochs, const RunOptions& opts = {});

// Joint loss terms over whole scenes, averaged, without gradients.
struct ValidationLoss {
    double rest = 0.0;
    double enh = 0.0;
    double joint = 0.0;
};

ValidationLoss validation_loss(const IspModel& model, const std::vector<SampleTriplet>& scenes,
                               const LossConfig& cfg);

// Checkpoints -------------------------------------------------------------------

// Both modules under "restore/" and "enhance/" plus the model spec.
void save_model(const std::filesystem::path& prefix, const IspModel& model, nlohmann::json metadata = {});
IspModel load_model(const std::filesystem::path& prefix, nlohmann::json* metadata = nullptr);

void save_module(const std::filesystem::path& prefix, const nn::ModuleParams<float>& m, const nn::UNetSpec& spec,
                 nlohmann::json metadata = {});
nn::ModuleParams<float> load_module(const std::filesystem::path& prefix, nn::UNetSpec* spec = nullptr,
                                    nlohmann::json* metadata = nullptr);

// CRC-32 over the parameter names, shapes and values.
std::string params_checksum(const ad::ParamSet<float>& p);

} // namespace isp::train
