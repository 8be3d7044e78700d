#include <doctest.h>

#include <cmath>

#include "svseg/synthgen.hpp"
#include "test_util.hpp"

using namespace svseg;

namespace {

SceneSpec one_actor_scene(std::uint64_t seed) {
    SceneSpec s;
    s.name = "one";
    s.frames = 8;
    s.seed = seed;
    Actor a;
    a.motion = {.kind = MotionKind::Linear, .x = 25.0, .y = 30.0, .vx = 1.5, .vy = -0.5};
    a.pose_jitter = 0.4;
    s.actors.push_back(a);
    return s;
}

ActorMasks masks_of(const SyntheticVideo& v) {
    return {v.frames.width(), v.frames.height(), v.actor_masks};
}

/// |observed - n p| <= 3 sqrt(n p (1 - p))
bool within_binomial_3sigma(double observed, double n, double p) {
    return std::abs(observed - n * p) <= 3.0 * std::sqrt(n * p * (1.0 - p));
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

} // namespace

TEST_CASE("negative video has empty ground truth") {
    SceneSpec s;
    s.name = "neg";
    s.frames = 5;
    SyntheticVideo v = generate_video(s);
    REQUIRE(v.ground_truth.size() == 5);
    for (const auto& m : v.ground_truth)
        CHECK(count_set(m) == 0);
}

TEST_CASE("static circle keeps its mask") {
    SceneSpec s;
    s.name = "still";
    s.frames = 6;
    Actor a;
    a.half_w = a.half_h = 7.0;
    a.motion = {.kind = MotionKind::Linear, .x = 30.0, .y = 30.0};
    s.actors.push_back(a);
    SyntheticVideo v = generate_video(s);
    for (const auto& m : v.ground_truth) {
        CHECK(m == v.ground_truth.front());
        CHECK(count_set(m) > 100);
    }
}

TEST_CASE("generation is deterministic and consistent") {
    SceneSpec s = one_actor_scene(3);
    s.props.push_back(Actor{.shape = Shape::RoundedRect, .half_w = 4.0, .half_h = 4.0, .upper = {40, 160, 60}});
    SyntheticVideo a = generate_video(s), b = generate_video(s);
    CHECK(a.frames.frames() == b.frames.frames());
    CHECK(a.ground_truth == b.ground_truth);
    for (std::size_t t = 0; t < a.ground_truth.size(); ++t) {
        CHECK(a.ground_truth[t].same_shape(a.frames[static_cast<int>(t)]));
        CHECK(a.gt_pixel_counts[t] == count_set(a.ground_truth[t]));
        for (const auto& pm : a.prop_masks[t])
            for (std::size_t p = 0; p < pm.size(); ++p)
                CHECK(!(pm[p] && a.ground_truth[t][p]));
    }
    s.seed = 4;
    CHECK(!(generate_video(s).frames.frames() == a.frames.frames()));
}

TEST_CASE("scene contract") {
    SceneSpec s = one_actor_scene(1);
    s.actors[0].half_w = 40.0;
    CHECK_THROWS_AS(generate_video(s), InvalidArgument);
    s = one_actor_scene(1);
    s.cut_frames = {8};
    CHECK_THROWS_AS(generate_video(s), InvalidArgument);
}

TEST_CASE("detector extremes") {
    SyntheticVideo v = generate_video(one_actor_scene(5));
    DetectorNoise none;
    none.miss_rate = 1.0;
    none.false_positive_rate = 0.0;
    CHECK(simulate_detections(masks_of(v), none, 1).empty());

    DetectorNoise exact;
    exact.miss_rate = 0.0;
    exact.false_positive_rate = 0.0;
    exact.center_sigma = 0.0;
    exact.scale_sigma = 0.0;
    auto dets = simulate_detections(masks_of(v), exact, 1);
    REQUIRE(dets.size() == v.ground_truth.size());
    for (const auto& d : dets)
        CHECK(d.box == tight_box(v.ground_truth[static_cast<std::size_t>(d.frame_index)]));

    DetectorNoise bad;
    bad.miss_rate = 1.5;
    CHECK_THROWS_AS(simulate_detections(masks_of(v), bad, 1), InvalidArgument);
}

TEST_CASE("detector statistics on the default suite match the configured rates") {
    SuiteSpec suite = load_suite("suite-v1");
    const DetectorNoise defaults;
    double actors = 0.0, hits = 0.0, true_kept = 0.0, frames = 0.0, false_boxes = 0.0, false_rejected = 0.0;
    for (const auto& [scene, split] : suite.videos) {
        SyntheticVideo v = generate_video(scene);
        const ActorMasks am = masks_of(v);
        for (const auto& per_frame : v.actor_masks)
            for (const auto& m : per_frame)
                actors += count_set(m) > 0;
        frames += static_cast<double>(v.actor_masks.size());

        DetectorNoise only_true = defaults;
        only_true.false_positive_rate = 0.0;
        for (const auto& d : simulate_detections(am, only_true, scene.seed)) {
            hits += 1.0;
            true_kept += d.score > -1.0;
        }
        DetectorNoise only_false = defaults;
        only_false.miss_rate = 1.0;
        for (const auto& d : simulate_detections(am, only_false, scene.seed)) {
            false_boxes += 1.0;
            false_rejected += d.score <= -1.0;
        }
    }
    REQUIRE(actors > 100);
    CHECK(within_binomial_3sigma(hits, actors, 1.0 - defaults.miss_rate));
    // Poisson count: mean and variance both rate * frames.
    const double lambda = defaults.false_positive_rate * frames;
    CHECK(std::abs(false_boxes - lambda) <= 3.0 * std::sqrt(lambda));
    const double p_keep = 1.0 - normal_cdf((-1.0 - defaults.true_score_mean) / defaults.true_score_sd);
    const double p_reject = normal_cdf((-1.0 - defaults.false_score_mean) / defaults.false_score_sd);
    CHECK(p_keep == doctest::Approx(0.95).epsilon(0.01));
    CHECK(p_reject == doctest::Approx(0.90).epsilon(0.01));
    CHECK(within_binomial_3sigma(true_kept, hits, p_keep));
    CHECK(within_binomial_3sigma(false_rejected, false_boxes, p_reject));
}

TEST_CASE("unperturbed proposals are the silhouettes") {
    SyntheticVideo v = generate_video(one_actor_scene(6));
    ProposalParams p;
    p.perturb_levels = 0;
    p.distractors = false;
    ProposalSimulation sim = simulate_proposals(masks_of(v), p, 2);
    for (std::size_t t = 0; t < v.ground_truth.size(); ++t) {
        const auto& list = sim.proposals.at(static_cast<int>(t));
        REQUIRE(list.size() == 1);
        CHECK(list[0].mask == v.ground_truth[t]);
        CHECK(sim.best_iou[t][0] == 1.0);
    }
}

TEST_CASE("graded proposals on the default suite") {
    SuiteSpec suite = load_suite("suite-v1");
    CHECK(suite.proposals.per_frame == 50);
    int checked = 0;
    for (const auto& [scene, split] : suite.videos) {
        SyntheticVideo v = generate_video(scene);
        const ActorMasks am = masks_of(v);
        ProposalSimulation a = simulate_proposals(am, suite.proposals, scene.seed);
        ProposalSimulation b = simulate_proposals(am, suite.proposals, scene.seed);
        CHECK(format_proposals(a.proposals) == format_proposals(b.proposals));
        for (std::size_t t = 0; t < v.actor_masks.size(); ++t) {
            const auto& list = a.proposals[static_cast<int>(t)];
            CHECK(list.size() <= 50);
            for (std::size_t k = 0; k < v.actor_masks[t].size(); ++k) {
                const BinaryMask& m = v.actor_masks[t][k];
                if (count_set(m) == 0)
                    continue;
                double best = 0.0;
                for (const auto& r : list)
                    best = std::max(best, compute_iou(r.mask, m));
                CHECK(best >= 0.85);
                CHECK(a.best_iou[t][k] >= 0.85);
                CHECK(best >= a.best_iou[t][k]);
                ++checked;
            }
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("default suite composition") {
    SuiteSpec suite = load_suite("suite-v1");
    int train = 0, eval = 0, negative = 0;
    for (const auto& [scene, split] : suite.videos) {
        CHECK(scene.width == 64);
        CHECK(scene.height == 64);
        CHECK(scene.frames == 40);
        if (scene.actors.empty())
            ++negative;
        else if (split == "train")
            ++train;
        else if (split == "eval")
            ++eval;
    }
    CHECK(train == 12);
    CHECK(eval == 4);
    CHECK(negative == 3);
}

TEST_CASE("suite json errors") {
    CHECK_THROWS_AS(parse_suite("{"), FormatError);
    CHECK_THROWS_AS(parse_suite(R"({"name":"x","videos":[{"name":"a","split":"test"}]})"), FormatError);
    CHECK_THROWS(load_suite("no-such-suite"));
}

TEST_CASE("written suite is complete") {
    SuiteSpec suite;
    suite.name = "mini";
    SceneSpec s = one_actor_scene(9);
    s.cut_frames = {4};
    suite.videos.push_back({s, "train"});
    SceneSpec n;
    n.name = "empty";
    n.frames = 8;
    suite.videos.push_back({n, "eval"});
    testutil::TempDir dir("suite");
    auto manifest = write_suite(suite, dir.path());
    CHECK(std::filesystem::exists(manifest));
    for (const char* name : {"one", "empty"}) {
        CHECK(std::filesystem::exists(dir / name / "frames" / frame_filename(7)));
        CHECK(std::filesystem::exists(dir / name / "gt"));
        CHECK(std::filesystem::exists(dir / name / "detections.txt"));
        CHECK(std::filesystem::exists(dir / name / "proposals.txt"));
        CHECK(std::filesystem::exists(dir / name / "meta.txt"));
    }
    const std::string meta = read_text_file(dir / "one" / "meta.txt");
    CHECK(meta.find("cuts=4") != std::string::npos);

    testutil::TempDir again("suite2");
    write_suite(suite, again.path());
    CHECK(read_text_file(dir / "one" / "proposals.txt") == read_text_file(again / "one" / "proposals.txt"));
    CHECK(read_text_file(dir / "one" / "detections.txt") == read_text_file(again / "one" / "detections.txt"));
}

TEST_CASE("morphology") {
    BinaryMask m(7, 7);
    m(3, 3) = 1;
    BinaryMask d = dilate(m, 1);
    CHECK(count_set(d) == 5);
    CHECK(count_set(dilate(m, 2)) == 13);
    CHECK(erode(d, 1) == m);
    CHECK(count_set(erode(m, 1)) == 0);
}
