#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "svseg/supervoxel.hpp"
#include "svseg/videoio.hpp"

namespace svseg {

enum class Shape { Ellipse, RoundedRect };
enum class MotionKind { Linear, Sinusoidal };

struct Motion {
    MotionKind kind = MotionKind::Linear;
    double x = 0.0, y = 0.0;   // start (linear) or centre (sinusoidal)
    double vx = 0.0, vy = 0.0; // px/frame (linear)
    double amp_x = 0.0, amp_y = 0.0, period = 20.0, phase = 0.0; // sinusoidal
};

/// A moving object. Actors are humans (ground truth); props are not.
struct Actor {
    Shape shape = Shape::Ellipse;
    double half_w = 6.0, half_h = 10.0;
    Rgb upper{200, 150, 120};
    Rgb lower{60, 60, 160};
    double color_noise = 4.0; // per-pixel std
    Motion motion;
    double pose_jitter = 0.0; // per-frame std of size/position wobble, px
};

struct Background {
    Rgb base{90, 130, 90};
    double texture_amplitude = 8.0;
    double texture_scale = 8.0; // lattice spacing, px
    double sensor_noise = 1.5;
    double pan_x = 0.0, pan_y = 0.0; // px/frame
};

struct SceneSpec {
    std::string name;
    int width = 64;
    int height = 64;
    int frames = 40;
    std::uint64_t seed = 1;
    Background background;
    std::vector<int> cut_frames;
    std::vector<Actor> actors;
    std::vector<Actor> props;
};

struct DetectorNoise {
    double center_sigma = 1.5;
    double scale_sigma = 0.08;
    double miss_rate = 0.2;
    double false_positive_rate = 0.3; // expected false boxes per frame
    double true_score_mean = 0.5;
    double true_score_sd = 0.91;
    double false_score_mean = -1.64;
    double false_score_sd = 0.5;
    /// Chance per frame that the detector also fires on a visible prop.
    double prop_rate = 0.0;
    double prop_score_mean = 0.5;
    double prop_score_sd = 0.91;
};

struct ProposalParams {
    int per_frame = 50;
    int perturb_levels = 3; // 0 = exact ground-truth silhouettes only
    bool distractors = true;
};

struct SyntheticVideo {
    FrameSequence frames;
    std::vector<BinaryMask> ground_truth;              // union of actor silhouettes
    std::vector<std::vector<BinaryMask>> actor_masks;  // [frame][actor], visible pixels
    std::vector<std::vector<BinaryMask>> prop_masks;   // [frame][prop], visible pixels
    std::vector<int> cut_frames;
    std::vector<std::size_t> gt_pixel_counts;
};

SyntheticVideo generate_video(const SceneSpec& spec);

/// Per-frame, per-actor visible silhouettes with the frame size (frames may have no actors).
struct ActorMasks {
    int width = 0;
    int height = 0;
    std::vector<std::vector<BinaryMask>> frames;
};

/// Jittered boxes on actors plus random false boxes; with `props`, also
/// boxes on visible props at `prop_rate`.
std::vector<DetectionBox> simulate_detections(const ActorMasks& actor_masks, const DetectorNoise& noise,
                                              std::uint64_t seed, const ActorMasks* props = nullptr);

struct ProposalSimulation {
    ProposalSet proposals;
    std::vector<std::vector<double>> best_iou; // [frame][actor]
};

/// Region candidates per frame; `objects` (non-human shapes) get the same
/// perturbation families as actors but do not enter `best_iou`.
ProposalSimulation simulate_proposals(const ActorMasks& actor_masks, const ProposalParams& params,
                                      std::uint64_t seed, const ActorMasks* objects = nullptr);

struct SuiteSpec {
    std::string name;
    SupervoxelParams supervoxel;
    DetectorNoise detector;
    ProposalParams proposals;
    std::vector<std::pair<SceneSpec, std::string>> videos; // scene, split ("train"/"eval")
};

SuiteSpec parse_suite(const std::string& json_text);
/// Built-in suite by name ("suite-v1") or a JSON file path.
SuiteSpec load_suite(const std::string& name_or_path);
std::string builtin_suite_json(const std::string& name);

/// Writes every video (frames, gt, supervoxels, detections, proposals,
/// meta) plus manifest.txt under `out`. Returns the manifest path.
std::filesystem::path write_suite(const SuiteSpec& suite, const std::filesystem::path& out);

BinaryMask dilate(const BinaryMask& m, int radius);
BinaryMask erode(const BinaryMask& m, int radius);

} // namespace svseg
