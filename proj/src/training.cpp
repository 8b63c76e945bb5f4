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

#include "isp/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include <zlib.h>

#include "isp/adam.hpp"
#include "isp/checkpoint.hpp"
#include "isp/json_fields.hpp"

namespace isp::train {

namespace fs = std::filesystem;
using nlohmann::json;

// schedule ----------------------------------------------------------------------

void TrainingSchedule::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw ValidationError("schedule field '" + field + "': " + why);
    };
    if (epochs_step1 < 0) fail("epochs_step1", "must be non-negative");
    if (epochs_step2 < 0) fail("epochs_step2", "must be non-negative");
    if (epochs_step3 < 0) fail("epochs_step3", "must be non-negative");
    if (!(lr_initial > 0.0 && std::isfinite(lr_initial))) fail("lr_initial", "must be positive");
    if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0)) fail("lr_decay_factor", "must lie within (0, 1]");
    if (!(lr_decay_at >= 0.0 && lr_decay_at <= 1.0)) fail("lr_decay_at", "must lie within [0, 1]");
    if (!(lr_step3 > 0.0 && std::isfinite(lr_step3))) fail("lr_step3", "must be positive");
    if (!(lambda >= 0.0 && lambda <= 1.0)) fail("lambda", "must lie within [0, 1]");
    if (!(epsilon > 0.0)) fail("epsilon", "must be positive");
    if (patch_size <= 0 || patch_size % 16 != 0) fail("patch_size", "must be a positive multiple of 16");
    if (checkpoint_every < 0) fail("checkpoint_every", "must be non-negative");
}

LossConfig TrainingSchedule::loss_config() const {
    LossConfig c;
    c.epsilon = static_cast<float>(epsilon);
    c.lambda = static_cast<float>(lambda);
    return c;
}

json to_json(const TrainingSchedule& s) {
    return {{"epochs_step1", s.epochs_step1},
            {"epochs_step2", s.epochs_step2},
            {"epochs_step3", s.epochs_step3},
            {"lr_initial", s.lr_initial},
            {"lr_decay_factor", s.lr_decay_factor},
            {"lr_decay_at", s.lr_decay_at},
            {"lr_step3", s.lr_step3},
            {"lambda", s.lambda},
            {"epsilon", s.epsilon},
            {"patch_size", s.patch_size},
            {"seed", s.seed},
            {"augment", {{"rotate", s.augment.rotate}, {"flip", s.augment.flip}}},
            {"checkpoint_every", s.checkpoint_every}};
}

TrainingSchedule schedule_from_json(const json& j, const std::string& context) {
    JsonFields f(j, context);
    TrainingSchedule s;
    f.get("epochs_step1", s.epochs_step1);
    f.get("epochs_step2", s.epochs_step2);
    f.get("epochs_step3", s.epochs_step3);
    f.get("lr_initial", s.lr_initial);
    f.get("lr_decay_factor", s.lr_decay_factor);
    f.get("lr_decay_at", s.lr_decay_at);
    f.get("lr_step3", s.lr_step3);
    f.get("lambda", s.lambda);
    f.get("epsilon", s.epsilon);
    f.get("patch_size", s.patch_size);
    f.get("seed", s.seed);
    if (f.has("augment")) {
        JsonFields a(f.raw("augment"), f.path("augment"));
        a.get("rotate", s.augment.rotate);
        a.get("flip", s.augment.flip);
        a.finish();
    }
    f.get("checkpoint_every", s.checkpoint_every);
    f.finish();
    try {
        s.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(context + ": " + e.what());
    }
    return s;
}

double lr_at(int epoch, int total_epochs, const TrainingSchedule& s) {
    if (total_epochs <= 0 || epoch < 0 || epoch >= total_epochs) {
        throw ValidationError("lr_at: epoch " + std::to_string(epoch) + " outside [0, " +
                              std::to_string(total_epochs) + ")");
    }
    return epoch < s.lr_decay_at * total_epochs ? s.lr_initial : s.lr_initial * s.lr_decay_factor;
}

// patches -----------------------------------------------------------------------

namespace {

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

SampleTriplet crop_triplet(const SampleTriplet& t, int y0, int x0, int h, int w) {
    if (y0 % 2 || x0 % 2 || h % 2 || w % 2) throw ValidationError("crop offsets and extents must be even");
    if (y0 < 0 || x0 < 0 || y0 + h > t.raw.height || x0 + w > t.raw.width) {
        throw ShapeError("crop window outside the scene");
    }
    SampleTriplet out;
    out.scene_id = t.scene_id;
    RawImage& r = out.raw;
    r.height = h;
    r.width = w;
    r.pattern = t.raw.pattern;
    r.black_level = t.raw.black_level;
    r.white_level = t.raw.white_level;
    r.metadata = t.raw.metadata;
    r.metadata.bad_pixels.clear();
    r.cfa.resize(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            r.cfa[static_cast<std::size_t>(y) * w + x] = t.raw.at(y0 + y, x0 + x);
    if (t.raw.metadata.vignette_gain) {
        const auto& g = *t.raw.metadata.vignette_gain;
        std::vector<float> v(static_cast<std::size_t>(h) * w);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                v[static_cast<std::size_t>(y) * w + x] = g[static_cast<std::size_t>(y0 + y) * t.raw.width + x0 + x];
        r.metadata.vignette_gain = std::move(v);
    }
    for (const auto& p : t.raw.metadata.bad_pixels) {
        if (p.y >= y0 && p.y < y0 + h && p.x >= x0 && p.x < x0 + w) {
            r.metadata.bad_pixels.push_back({p.y - y0, p.x - x0});
        }
    }
    out.g_rest = crop(t.g_rest, y0, x0, h, w);
    out.g_enh = crop(t.g_enh, y0, x0, h, w);
    return out;
}

// Source coordinate of output pixel (y, x) under dihedral element k on an
// n x n torus, after the circular shift (dy, dx).
struct Dihedral {
    int k = 0;
    int n = 0;
    int dy = 0;
    int dx = 0;

    std::pair<int, int> source(int y, int x) const {
        y = ((y + dy) % n + n) % n;
        x = ((x + dx) % n + n) % n;
        if (k >= 4) x = n - 1 - x;
        for (int r = 0; r < k % 4; ++r) {
            const int ny = x, nx = n - 1 - y;
            y = ny;
            x = nx;
        }
        return {y, x};
    }
};

// Smallest shift that keeps the CFA phase. Mirrors and the half turn are
// their own inverse; for them the shift must keep that property.
Dihedral phase_preserving(int k, int n, CfaPattern p) {
    const bool involution = k == 2 || k >= 4;
    static constexpr std::pair<int, int> kShifts[] = {{0, 0},  {0, 1},  {1, 0}, {1, 1},  {0, -1},
                                                      {-1, 0}, {1, -1}, {-1, 1}, {-1, -1}};
    for (const auto& [dy, dx] : kShifts) {
        const Dihedral d{k, n, dy, dx};
        bool ok = true;
        for (int y = 0; y < 2 && ok; ++y)
            for (int x = 0; x < 2 && ok; ++x) {
                const auto [sy, sx] = d.source(y, x);
                ok = cfa_channel(p, sy, sx) == cfa_channel(p, y, x);
                if (ok && involution) {
                    const auto [by, bx] = d.source(sy, sx);
                    ok = by == y && bx == x;
                }
            }
        if (ok) return d;
    }
    throw Error("no CFA-preserving shift for dihedral element " + std::to_string(k));
}

template <ColorSpace S>
Image<S> remap(const Image<S>& img, const Dihedral& d) {
    Image<S> out(d.n, d.n);
    for (int y = 0; y < d.n; ++y)
        for (int x = 0; x < d.n; ++x) {
            const auto [sy, sx] = d.source(y, x);
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(sy, sx, c);
        }
    return out;
}

template <typename V>
std::vector<V> remap_plane(const std::vector<V>& plane, const Dihedral& d) {
    std::vector<V> out(plane.size());
    for (int y = 0; y < d.n; ++y)
        for (int x = 0; x < d.n; ++x) {
            const auto [sy, sx] = d.source(y, x);
            out[static_cast<std::size_t>(y) * d.n + x] = plane[static_cast<std::size_t>(sy) * d.n + sx];
        }
    return out;
}

} // namespace

SampleTriplet crop_patch(const SampleTriplet& t, int y0, int x0, int size) {
    return crop_triplet(t, y0, x0, size, size);
}

SampleTriplet sample_patch(const SampleTriplet& t, int size, std::mt19937_64& rng) {
    if (size <= 0 || size % 2) throw ValidationError("patch size must be positive and even");
    if (size > t.raw.height || size > t.raw.width) {
        throw ValidationError("patch size " + std::to_string(size) + " exceeds scene '" + t.scene_id + "' (" +
                              std::to_string(t.raw.height) + "x" + std::to_string(t.raw.width) + ")");
    }
    const int y0 = 2 * static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>((t.raw.height - size) / 2 + 1)));
    const int x0 = 2 * static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>((t.raw.width - size) / 2 + 1)));
    return crop_patch(t, y0, x0, size);
}

SampleTriplet augment(const SampleTriplet& patch, int element) {
    if (element < 0 || element >= 8) throw ValidationError("dihedral element must lie within [0, 8)");
    const int n = patch.raw.height;
    if (n != patch.raw.width) throw ShapeError("augment needs a square patch");
    if (n % 2) throw ShapeError("augment needs even extents");
    if (element == 0) return patch;
    const Dihedral d = phase_preserving(element, n, patch.raw.pattern);

    SampleTriplet out = patch;
    out.raw.cfa = remap_plane(patch.raw.cfa, d);
    if (patch.raw.metadata.vignette_gain) {
        out.raw.metadata.vignette_gain = remap_plane(*patch.raw.metadata.vignette_gain, d);
    }
    if (!patch.raw.metadata.bad_pixels.empty()) {
        std::vector<std::uint8_t> flags(static_cast<std::size_t>(n) * n, 0);
        for (const auto& p : patch.raw.metadata.bad_pixels) flags[static_cast<std::size_t>(p.y) * n + p.x] = 1;
        const auto moved = remap_plane(flags, d);
        out.raw.metadata.bad_pixels.clear();
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x)
                if (moved[static_cast<std::size_t>(y) * n + x]) out.raw.metadata.bad_pixels.push_back({y, x});
    }
    out.g_rest = remap(patch.g_rest, d);
    out.g_enh = remap(patch.g_enh, d);
    return out;
}

int draw_element(const AugmentFlags& flags, std::mt19937_64& rng) {
    static constexpr int kAll[] = {0, 1, 2, 3, 4, 5, 6, 7};
    static constexpr int kRotations[] = {0, 1, 2, 3};
    static constexpr int kFlips[] = {0, 4, 6}; // identity, left-right, up-down
    if (flags.rotate && flags.flip) return kAll[uniform_below(rng, 8)];
    if (flags.rotate) return kRotations[uniform_below(rng, 4)];
    if (flags.flip) return kFlips[uniform_below(rng, 3)];
    return 0;
}

SampleTriplet augment(const SampleTriplet& patch, const AugmentFlags& flags, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return augment(patch, draw_element(flags, rng));
}

StageInputs stage_inputs(const SampleTriplet& patch) {
    XyzImage raw_xyz = camera_rgb_to_xyz(prepare(patch.raw), patch.raw.metadata);
    return {std::move(raw_xyz), patch.g_rest, xyz_to_srgb(patch.g_rest), patch.g_enh};
}

// losses ------------------------------------------------------------------------

ad::Tensor<float> step1_loss(ad::Tape<float>& tape, const StageInputs& in, const IspModel& model,
                             const LossConfig& cfg) {
    const auto pred = restore(tape, tagged(in.raw_xyz), model.restore, model.spec.restore);
    return restoration_loss(tape, pred, tagged(in.g_rest), cfg.epsilon);
}

ad::Tensor<float> step2_loss(ad::Tape<float>& tape, const StageInputs& in, const IspModel& model) {
    const auto pred = enhance(tape, tagged(in.rest_srgb), model.enhance, model.spec.enhance);
    return enhancement_loss(tape, pred, tagged(in.g_enh));
}

JointTerms joint_terms(ad::Tape<float>& tape, const StageInputs& in, const IspModel& model, const LossConfig& cfg) {
    cfg.validate();
    const auto rest = restore(tape, tagged(in.raw_xyz), model.restore, model.spec.restore);
    const auto enh = enhance(tape, to_srgb(tape, rest), model.enhance, model.spec.enhance);
    JointTerms t;
    t.rest = restoration_loss(tape, rest, tagged(in.g_rest), cfg.epsilon);
    t.enh = enhancement_loss(tape, enh, tagged(in.g_enh));
    t.joint = ad::add(tape, ad::scale(tape, t.rest, cfg.lambda), ad::scale(tape, t.enh, 1.0f - cfg.lambda));
    return t;
}

// training loop -----------------------------------------------------------------

json to_json(const EpochRecord& r) {
    return {{"step", r.step},         {"epoch", r.epoch},         {"epochs", r.epochs},
            {"lr", r.lr},             {"loss", r.loss},           {"loss_rest", r.loss_rest},
            {"loss_enh", r.loss_enh}, {"iterations", r.iterations}};
}

namespace {

enum StreamTag : std::uint32_t { kStep1 = 1, kStep2 = 2, kStep3 = 3, kJoint = 4, kOneStage = 5 };

std::mt19937_64 stream(std::uint64_t seed, StreamTag tag, int epoch, std::uint32_t item) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(epoch), item};
    return std::mt19937_64(seq);
}

ad::ParamSet<float> trainable_copy(const ad::ParamSet<float>& p) {
    auto c = p.clone();
    c.set_requires_grad(true);
    return c;
}

IspModel clone_model(const IspModel& m) {
    return {m.spec,
            {m.restore.role, trainable_copy(m.restore.params)},
            {m.enhance.role, trainable_copy(m.enhance.params)}};
}

struct Terms {
    ad::Tensor<float> loss;
    double rest = 0.0;
    double enh = 0.0;
};

struct Fit {
    std::string step;
    StreamTag tag;
    int epochs = 0;
    std::function<double(int)> lr;
    std::vector<ad::ParamSet<float>*> params;
    std::function<Terms(ad::Tape<float>&, const StageInputs&)> loss;
    std::function<void(const fs::path&, const json&)> save; // writes a checkpoint of the current state
    const IspModel* model = nullptr;
};

void run(const Fit& fit, const std::vector<SampleTriplet>& scenes, const TrainingSchedule& s, const RunOptions& opts) {
    s.validate();
    if (fit.epochs == 0) return;
    if (scenes.empty()) throw ValidationError(fit.step + ": training set is empty");
    std::vector<ad::AdamState> states(fit.params.size());
    const auto n = static_cast<std::uint32_t>(scenes.size());

    auto abort = [&](int epoch, const std::string& why) {
        const fs::path dir = opts.out_dir.empty() ? fs::temp_directory_path() / "isp_abort" : opts.out_dir;
        const fs::path prefix = dir / (fit.step + "_abort");
        fit.save(prefix, {{"step", fit.step}, {"epoch", epoch}, {"reason", why}});
        throw TrainingAborted(fit.step + " aborted at epoch " + std::to_string(epoch) + ": " + why +
                                  " (checkpoint " + prefix.string() + ")",
                              prefix.string());
    };

    for (int epoch = 0; epoch < fit.epochs; ++epoch) {
        const double lr = fit.lr(epoch);
        std::vector<std::uint32_t> order(n);
        std::iota(order.begin(), order.end(), 0u);
        auto shuffler = stream(s.seed, fit.tag, epoch, n);
        for (std::uint32_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_below(shuffler, i)]);

        EpochRecord rec{fit.step, epoch, fit.epochs, lr, 0.0, 0.0, 0.0, 0};
        for (std::uint32_t idx : order) {
            auto rng = stream(s.seed, fit.tag, epoch, idx);
            const SampleTriplet patch = sample_patch(scenes[idx], s.patch_size, rng);
            const StageInputs in = stage_inputs(augment(patch, draw_element(s.augment, rng)));

            for (auto* p : fit.params) p->clear_grads();
            ad::Tape<float> tape;
            const Terms t = fit.loss(tape, in);
            const double value = t.loss.item();
            if (!std::isfinite(value)) abort(epoch, "non-finite loss");
            tape.backward(t.loss);
            try {
                for (std::size_t k = 0; k < fit.params.size(); ++k) {
                    ad::adam_step(*fit.params[k], states[k], static_cast<float>(lr));
                }
            } catch (const NumericError& e) {
                abort(epoch, e.what());
            }
            rec.loss += value;
            rec.loss_rest += t.rest;
            rec.loss_enh += t.enh;
            ++rec.iterations;
        }
        rec.loss /= rec.iterations;
        rec.loss_rest /= rec.iterations;
        rec.loss_enh /= rec.iterations;
        if (opts.on_epoch) opts.on_epoch(rec);
        if (opts.on_model_epoch && fit.model) opts.on_model_epoch(rec, *fit.model);
        if (!opts.out_dir.empty() && s.checkpoint_every > 0 && (epoch + 1) % s.checkpoint_every == 0) {
            fit.save(opts.out_dir / (fit.step + "_epoch" + std::to_string(epoch + 1)),
                     {{"step", fit.step}, {"epoch", epoch + 1}});
        }
    }
}

} // namespace

IspModel train_step1(const IspModel& model, const std::vector<SampleTriplet>& scenes, const TrainingSchedule& s,
                     const RunOptions& opts) {
    IspModel m = clone_model(model);
    const LossConfig cfg = s.loss_config();
    Fit fit{"step1", kStep1, s.epochs_step1, [&](int e) { return lr_at(e, s.epochs_step1, s); },
            {&m.restore.params},
            [&](ad::Tape<float>& tape, const StageInputs& in) {
                auto l = step1_loss(tape, in, m, cfg);
                return Terms{l, l.item(), 0.0};
            },
            [&](const fs::path& p, const json& meta) { save_model(p, m, meta); }, &m};
    run(fit, scenes, s, opts);
    return m;
}

IspModel train_step2(const IspModel& model, const std::vector<SampleTriplet>& scenes, const TrainingSchedule& s,
                     const RunOptions& opts) {
    IspModel m = clone_model(model);
    Fit fit{"step2", kStep2, s.epochs_step2, [&](int e) { return lr_at(e, s.epochs_step2, s); },
            {&m.enhance.params},
            [&](ad::Tape<float>& tape, const StageInputs& in) {
                auto l = step2_loss(tape, in, m);
                return Terms{l, 0.0, l.item()};
            },
            [&](const fs::path& p, const json& meta) { save_model(p, m, meta); }, &m};
    run(fit, scenes, s, opts);
    return m;
}

namespace {

IspModel joint(const IspModel& model, const std::vector<SampleTriplet>& scenes, const TrainingSchedule& s,
               const RunOptions& opts, const std::string& name, StreamTag tag, int epochs,
               std::function<double(int)> lr) {
    IspModel m = clone_model(model);
    const LossConfig cfg = s.loss_config();
    Fit fit{name, tag, epochs, std::move(lr), {&m.restore.params, &m.enhance.params},
            [&](ad::Tape<float>& tape, const StageInputs& in) {
                auto t = joint_terms(tape, in, m, cfg);
                return Terms{t.joint, t.rest.item(), t.enh.item()};
            },
            [&](const fs::path& p, const json& meta) { save_model(p, m, meta); }, &m};
    run(fit, scenes, s, opts);
    return m;
}

} // namespace

IspModel train_step3_joint(const IspModel& model, const std::vector<SampleTriplet>& scenes,
                           const TrainingSchedule& s, const RunOptions& opts) {
    return joint(model, scenes, s, opts, "step3", kStep3, s.epochs_step3, [&](int) { return s.lr_step3; });
}

IspModel train_joint_from_scratch(const IspModel& model, const std::vector<SampleTriplet>& scenes,
                                  const TrainingSchedule& s, int epochs, const RunOptions& opts) {
    if (epochs < 0) throw ValidationError("epochs must be non-negative");
    return joint(model, scenes, s, opts, "joint", kJoint, epochs, [&, epochs](int e) { return lr_at(e, epochs, s); });
}

nn::ModuleParams<float> train_one_stage(const nn::ModuleParams<float>& theta, const nn::UNetSpec& spec,
                                        const std::vector<SampleTriplet>& scenes, const TrainingSchedule& s,
                                        int epochs, const RunOptions& opts) {
    if (epochs < 0) throw ValidationError("epochs must be non-negative");
    nn::ModuleParams<float> m{theta.role, trainable_copy(theta.params)};
    Fit fit{"one_stage", kOneStage, epochs, [&, epochs](int e) { return lr_at(e, epochs, s); },
            {&m.params},
            [&](ad::Tape<float>& tape, const StageInputs& in) {
                const auto pred = enhance(tape, tagged(xyz_to_srgb(in.raw_xyz)), m, spec);
                auto l = enhancement_loss(tape, pred, tagged(in.g_enh));
                return Terms{l, 0.0, l.item()};
            },
            [&](const fs::path& p, const json& meta) { save_module(p, m, spec, meta); }};
    run(fit, scenes, s, opts);
    return m;
}

ValidationLoss validation_loss(const IspModel& model, const std::vector<SampleTriplet>& scenes,
                               const LossConfig& cfg) {
    if (scenes.empty()) throw ValidationError("validation set is empty");
    const int mult = std::max(model.spec.restore.extent_multiple(), model.spec.enhance.extent_multiple());
    ValidationLoss v;
    for (const auto& t : scenes) {
        const int h = t.raw.height / mult * mult, w = t.raw.width / mult * mult;
        if (h == 0 || w == 0) throw ValidationError("scene '" + t.scene_id + "' is smaller than the network multiple");
        const StageInputs in = stage_inputs(crop_triplet(t, 0, 0, h, w));
        ad::Tape<float> tape(false);
        const auto terms = joint_terms(tape, in, model, cfg);
        v.rest += terms.rest.item();
        v.enh += terms.enh.item();
        v.joint += terms.joint.item();
    }
    const auto n = static_cast<double>(scenes.size());
    v.rest /= n;
    v.enh /= n;
    v.joint /= n;
    return v;
}

// checkpoints -------------------------------------------------------------------

void save_model(const fs::path& prefix, const IspModel& model, json metadata) {
    ad::ParamSet<float> all;
    for (const auto& e : model.restore.params) all.add("restore/" + e.name, e.tensor);
    for (const auto& e : model.enhance.params) all.add("enhance/" + e.name, e.tensor);
    ad::save_checkpoint(prefix, all,
                        {{"kind", "model"}, {"model", to_json(model.spec)}, {"info", std::move(metadata)}});
}

IspModel load_model(const fs::path& prefix, json* metadata) {
    auto ck = ad::load_checkpoint(prefix);
    if (ck.metadata.value("kind", "") != "model") throw ValidationError(prefix.string() + " is not a model checkpoint");
    IspModel m{pipeline_spec_from_json(ck.metadata.at("model")), {nn::Role::Restore, {}}, {nn::Role::Enhance, {}}};
    for (auto& e : ck.params) {
        e.tensor.set_requires_grad(true);
        if (e.name.starts_with("restore/")) {
            m.restore.params.add(e.name.substr(8), e.tensor);
        } else if (e.name.starts_with("enhance/")) {
            m.enhance.params.add(e.name.substr(8), e.tensor);
        } else {
            throw ValidationError("unexpected parameter '" + e.name + "' in " + prefix.string());
        }
    }
    // Shapes must match what the spec builds.
    const IspModel ref = build_model(m.spec, 0);
    auto check = [&](const ad::ParamSet<float>& got, const ad::ParamSet<float>& want, const char* which) {
        if (got.size() != want.size()) {
            throw ValidationError(std::string(which) + " parameter count mismatch in " + prefix.string());
        }
        auto g = got.begin();
        for (const auto& w : want) {
            if (g->name != w.name || g->tensor.shape() != w.tensor.shape()) {
                throw ValidationError(std::string(which) + " parameter '" + w.name + "' mismatch in " +
                                      prefix.string());
            }
            ++g;
        }
    };
    check(m.restore.params, ref.restore.params, "restore");
    check(m.enhance.params, ref.enhance.params, "enhance");
    if (metadata) *metadata = ck.metadata.value("info", json::object());
    return m;
}

void save_module(const fs::path& prefix, const nn::ModuleParams<float>& m, const nn::UNetSpec& spec, json metadata) {
    ad::save_checkpoint(prefix, m.params,
                        {{"kind", "module"}, {"role", nn::to_string(m.role)}, {"spec", nn::to_json(spec)},
                         {"info", std::move(metadata)}});
}

nn::ModuleParams<float> load_module(const fs::path& prefix, nn::UNetSpec* spec, json* metadata) {
    auto ck = ad::load_checkpoint(prefix);
    if (ck.metadata.value("kind", "") != "module") {
        throw ValidationError(prefix.string() + " is not a module checkpoint");
    }
    nn::ModuleParams<float> m{nn::role_from_string(ck.metadata.at("role").get<std::string>()), std::move(ck.params)};
    m.params.set_requires_grad(true);
    if (spec) *spec = nn::unet_spec_from_json(ck.metadata.at("spec"));
    if (metadata) *metadata = ck.metadata.value("info", json::object());
    return m;
}

std::string params_checksum(const ad::ParamSet<float>& p) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    for (const auto& e : p) {
        crc = ::crc32(crc, reinterpret_cast<const Bytef*>(e.name.data()), static_cast<uInt>(e.name.size()));
        for (auto d : e.tensor.shape()) {
            const auto v = static_cast<std::int64_t>(d);
            crc = ::crc32(crc, reinterpret_cast<const Bytef*>(&v), sizeof v);
        }
        const auto data = e.tensor.data();
        crc = ::crc32(crc, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size_bytes()));
    }
    char hex[9];
    std::snprintf(hex, sizeof hex, "%08lx", static_cast<unsigned long>(crc));
    return hex;
}

} // namespace isp::train
