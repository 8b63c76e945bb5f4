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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "isp/experiments.hpp"
#include "isp/metrics.hpp"
#include "isp/synth.hpp"

using namespace isp;
using namespace isp::exp;
namespace fs = std::filesystem;

namespace {

nn::UNetSpec tiny(nn::UNetSpec s) {
    s.scales = 3;
    s.base_channels = 4;
    s.max_channels = 8;
    s.blocks_per_scale = 1;
    s.dilations = s.residual_blocks ? std::vector<int>{1, 2, 2} : std::vector<int>{1, 1, 1};
    return s;
}

std::vector<SampleTriplet> scenes(int count, int size, std::uint64_t seed = 3) {
    synth::SynthConfig c;
    c.height = size;
    c.width = size;
    std::vector<SampleTriplet> out;
    for (int i = 0; i < count; ++i) {
        out.push_back(synth::generate_scene(synth::scene_seed(seed, i), c, "s" + std::to_string(i)).triplet);
    }
    return out;
}

struct TempDir {
    fs::path path = fs::temp_directory_path() / ("isp_exp_" + std::to_string(::getpid()));
    TempDir() { fs::create_directories(path); }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<std::string> lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

AblationConfig tiny_ablation() {
    AblationConfig c;
    c.model = {tiny(nn::UNetSpec::restore()), tiny(nn::UNetSpec::enhance())};
    c.schedule.patch_size = 16;
    c.schedule.lr_initial = 1e-3;
    c.seeds = {0, 1};
    return c;
}

} // namespace

TEST(Eval, GroundTruthAgainstItself) {
    const auto data = scenes(3, 32);
    const auto s = evaluate(data, [](const SampleTriplet& t) { return t.g_enh; });
    ASSERT_EQ(s.rows.size(), 3u);
    for (const auto& r : s.rows) {
        EXPECT_EQ(r.psnr, metrics::kInfinitePsnr);
        EXPECT_EQ(r.ssim, 1.0);
        EXPECT_EQ(r.color_error, 0.0);
    }
    EXPECT_EQ(eval_json(s).at("mean_psnr"), "inf");
    EXPECT_EQ(eval_json(s).at("mean_ssim"), 1.0);
}

TEST(Eval, MeansEqualMeanOfRows) {
    const auto data = scenes(4, 32);
    const auto model = build_model({tiny(nn::UNetSpec::restore()), tiny(nn::UNetSpec::enhance())}, 1);
    const auto s = evaluate(data, two_stage_predictor(model));
    ASSERT_EQ(s.rows.size(), data.size());
    double p = 0.0, q = 0.0, c = 0.0;
    for (const auto& r : s.rows) {
        EXPECT_TRUE(std::isfinite(r.psnr));
        p += r.psnr;
        q += r.ssim;
        c += r.color_error;
    }
    EXPECT_DOUBLE_EQ(s.mean_psnr, p / 4);
    EXPECT_DOUBLE_EQ(s.mean_ssim, q / 4);
    EXPECT_DOUBLE_EQ(s.mean_color_error, c / 4);
    EXPECT_EQ(s.rows[2].scene_id, "s2");
}

TEST(Eval, EmptySplitRejected) {
    EXPECT_THROW(evaluate({}, [](const SampleTriplet& t) { return t.g_enh; }), ValidationError);
}

TEST(Eval, CsvHasOneRowPerScene) {
    TempDir tmp;
    const auto s = evaluate(scenes(3, 32), [](const SampleTriplet& t) { return t.g_enh; });
    write_eval_csv(tmp.path / "r" / "eval.csv", s);
    const auto l = lines(tmp.path / "r" / "eval.csv");
    ASSERT_EQ(l.size(), 4u);
    EXPECT_EQ(l[0], "scene_id,psnr,ssim,color_error");
    EXPECT_EQ(l[1], "s0,inf,1.000000,0.000000");
}

TEST(Eval, MetricFormatting) {
    EXPECT_EQ(format_metric(20.0), "20.000000");
    EXPECT_EQ(format_metric(metrics::kInfinitePsnr), "inf");
    EXPECT_EQ(metric_json(1.5), 1.5);
}

TEST(Hist, IdentityColumnIsZero) {
    const auto t = analyze_histograms(scenes(4, 32), kHistOperators, 0);
    ASSERT_EQ(t.values.size(), 4u);
    for (const auto& row : t.values) {
        ASSERT_EQ(row.size(), kHistOperators.size());
        EXPECT_EQ(row[0], 0.0);
        for (std::size_t k = 1; k < row.size(); ++k) EXPECT_GT(row[k], 0.0);
    }
    EXPECT_EQ(t.median("identity"), 0.0);
}

TEST(Hist, UnknownOperatorRejected) {
    const auto data = scenes(1, 32);
    try {
        analyze_histograms(data, {"identity", "sharpen"}, 0);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("sharpen"), std::string::npos);
    }
    EXPECT_THROW(analyze_histograms(data, {"enhance"}, 0, -1.0), ValidationError);
}

TEST(Hist, DeterministicAndSeeded) {
    const auto data = scenes(3, 32);
    const auto a = analyze_histograms(data, kHistOperators, 5);
    const auto b = analyze_histograms(data, kHistOperators, 5);
    EXPECT_EQ(a.values, b.values);
    const auto c = analyze_histograms(data, {"denoise-roundtrip"}, 6);
    EXPECT_NE(c.values[0][0], a.values[0][2]);
}

TEST(Hist, ZeroNoiseDenoiseIsIdentity) {
    const auto t = analyze_histograms(scenes(2, 32), {"denoise-roundtrip"}, 0, 0.0);
    for (const auto& row : t.values) EXPECT_EQ(row[0], 0.0);
}

TEST(Hist, MedianAndReports) {
    HistTable t;
    t.operators = {"a"};
    t.scene_ids = {"x", "y", "z", "w"};
    t.values = {{4.0}, {1.0}, {3.0}, {2.0}};
    EXPECT_EQ(t.median("a"), 2.5);
    t.values.pop_back();
    t.scene_ids.pop_back();
    EXPECT_EQ(t.median("a"), 3.0);
    EXPECT_THROW(t.median("b"), ValidationError);
    TempDir tmp;
    write_hist_csv(tmp.path / "h.csv", t);
    const auto l = lines(tmp.path / "h.csv");
    ASSERT_EQ(l.size(), 4u);
    EXPECT_EQ(l[0], "scene_id,a");
    EXPECT_EQ(l[1], "x,4.000000");
    EXPECT_EQ(hist_json(t).at("medians").at("a"), 3.0);
}

TEST(Ablation, ConfigJsonRoundTrip) {
    auto c = tiny_ablation();
    c.one_stage_base = tiny(nn::UNetSpec::restore());
    const auto back = ablation_config_from_json(to_json(c));
    EXPECT_EQ(back.model, c.model);
    EXPECT_EQ(back.one_stage_base, c.one_stage_base);
    EXPECT_EQ(back.schedule, c.schedule);
    EXPECT_EQ(back.seeds, c.seeds);
    auto j = to_json(c);
    j["seeds"] = nlohmann::json::array();
    EXPECT_THROW(ablation_config_from_json(j), ValidationError);
    j = to_json(c);
    j["epochs"] = 3;
    EXPECT_THROW(ablation_config_from_json(j), ValidationError);
}

TEST(Ablation, PresetLoads) {
    std::ifstream in(fs::path(ISP_CONFIG_DIR) / "ablation" / "sid.json");
    ASSERT_TRUE(in);
    const auto c = ablation_config_from_json(nlohmann::json::parse(in));
    EXPECT_EQ(c.schedule.lambda, 0.9);
    EXPECT_EQ(c.seeds.size(), 5u);
}

TEST(Ablation, DryRunHasFourVariantRows) {
    const auto data = scenes(3, 32);
    std::vector<SampleTriplet> train(data.begin(), data.begin() + 2), test(data.begin() + 2, data.end());
    AblationOptions o;
    o.dry_run = true;
    std::vector<std::string> seen;
    o.on_epoch = [&](const std::string& v, const train::EpochRecord&) { seen.push_back(v); };
    const auto r = run_ablation(tiny_ablation(), train, test, o);
    ASSERT_EQ(r.rows.size(), 4u);
    ASSERT_EQ(r.means.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(r.means[i].variant, kAblationVariants[i]);
        EXPECT_EQ(r.means[i].psnr, r.rows[i].psnr);
    }
    EXPECT_EQ(r.rows[0].epochs, 3);
    EXPECT_EQ(r.rows[2].epochs, 2);
    // Parameter budgets agree within the parity tolerance.
    const double ratio = static_cast<double>(r.rows[1].parameters) / r.rows[0].parameters;
    EXPECT_NEAR(ratio, 1.0, kOneStageParity);
    EXPECT_EQ(std::count(seen.begin(), seen.end(), "default"), 3);
    EXPECT_EQ(std::count(seen.begin(), seen.end(), "without_steps_1_2"), 2);
    EXPECT_EQ(std::count(seen.begin(), seen.end(), "one_stage"), 3);

    const auto j = ablation_json(r);
    EXPECT_EQ(j.at("table").size(), 4u);
    EXPECT_TRUE(j.at("dry_run").get<bool>());
    TempDir tmp;
    write_ablation_csv(tmp.path / "a.csv", r);
    EXPECT_EQ(lines(tmp.path / "a.csv").size(), 9u);
}

TEST(Ablation, Reproducible) {
    const auto data = scenes(3, 32);
    std::vector<SampleTriplet> train(data.begin(), data.begin() + 2), test(data.begin() + 2, data.end());
    AblationOptions o;
    o.dry_run = true;
    const auto a = run_ablation(tiny_ablation(), train, test, o);
    const auto b = run_ablation(tiny_ablation(), train, test, o);
    EXPECT_EQ(ablation_json(a), ablation_json(b));
    EXPECT_THROW(run_ablation(tiny_ablation(), {}, test, o), ValidationError);
}
