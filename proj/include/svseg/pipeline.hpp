#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "svseg/energy.hpp"
#include "svseg/learner.hpp"
#include "svseg/stgraph.hpp"
#include "svseg/supervoxel.hpp"
#include "svseg/videoio.hpp"

namespace svseg {

struct VideoDescriptor {
    std::string name;
    std::string split; // "train" or "eval"
    std::filesystem::path frames_dir;
    std::filesystem::path supervoxel_dir;
    std::filesystem::path detections;
    std::filesystem::path proposals;
    std::filesystem::path gt_dir; // empty when absent ("-" in the manifest)
};

struct VideoSet {
    std::vector<VideoDescriptor> videos;
};

/// One video per line, tab-separated: name split frames supervoxels
/// detections proposals gt. Relative paths resolve against the manifest's
/// directory. '#' starts a comment line.
VideoSet read_manifest(const std::filesystem::path& path);

/// FNV-1a over the bytes of every artifact in manifest order.
std::uint64_t dataset_hash(const VideoSet& videos);

struct PipelineConfig {
    double det_threshold = -1.0;
    bool use_pairwise = true;
    bool use_higher_order = true;
    bool use_sample_weights = true;
    bool use_negatives = true;
    int max_per_video = 5;
    double negative_fraction = 1.0 / 3.0;
    int iterations = 10;
    /// Stop once eval IoU gains less than this many points; negative disables.
    double early_stop_points = 0.2;
    std::uint64_t seed = 7;
    double shot_turnover = 0.5;
    int keyframe_churn = 10;
    unsigned threads = 0; // 0 = hardware concurrency
    TrainOptions train{.epochs = 60, .lr0 = 0.5, .decay_every = 20, .decay_factor = 0.1, .batch_size = 20};
};

/// A video with everything inference needs, loaded and validated once.
struct LoadedVideo {
    VideoDescriptor desc;
    std::shared_ptr<const FrameSequence> frames;
    SupervoxelMap svmap;
    std::vector<DetectionBox> detections;
    ProposalSet proposals;
    std::vector<BinaryMask> ground_truth; // empty without a gt dir
    std::vector<Shot> shots;
    std::vector<STGraph> graphs; // one per shot, over its candidate key frames

    /// Frame as a shared handle for training samples.
    std::shared_ptr<const RgbImage> frame_handle(int t) const;
};

LoadedVideo load_video(const VideoDescriptor& desc, const PipelineConfig& config);

struct KeyframeResult {
    int frame = 0;
    BinaryMask mask;
    double omega = 0.0;
    std::size_t human_nodes = 0;
};

struct VideoInference {
    std::vector<KeyframeResult> keyframes; // ascending frame order
    double max_certificate_gap = 0.0;      // max |E(labeling) - (flow + offset)| over solves
    std::size_t solves = 0;
};

/// Shot split, key frames, graph, potentials, min-cut, rasterized masks and
/// per-frame quality. Without a model the confidence terms are dropped.
VideoInference infer_masks(const LoadedVideo& video, const PixelModel* model, const PipelineConfig& config);

struct TrainingFrame {
    std::size_t video = 0;
    int frame = 0;
    BinaryMask mask;
    double omega = 1.0;
    bool negative = false;
};

struct NegativeCandidate {
    std::size_t video = 0;
    int frame = 0;
};

using TrainingCorpus = std::vector<TrainingFrame>;

/// Frames of `video` without any detection above the threshold.
std::vector<int> zero_detection_frames(const LoadedVideo& video, double det_threshold);

/// Up to `max_per_video` non-empty masks per video by descending quality
/// (ties: lower frame), then seeded negatives so that they make up about
/// `negative_fraction` of the corpus. Negatives carry empty masks, weight 1.
TrainingCorpus select_training_frames(const std::vector<VideoInference>& results,
                                      const std::vector<NegativeCandidate>& negatives_pool,
                                      const std::vector<std::pair<int, int>>& frame_sizes, int max_per_video,
                                      double negative_fraction, std::uint64_t seed);

/// Number of negatives that brings `positives` to the requested fraction.
std::size_t negative_count_for(std::size_t positives, double negative_fraction);

/// Mean IoU of thresholded (> 0.5) confidence maps against ground truth over every eval frame.
double evaluate(const PixelModel& model, const std::vector<const LoadedVideo*>& eval_videos);

struct VideoSelection {
    std::string name;
    std::vector<int> frames;
    std::vector<double> omegas;
    std::vector<bool> selected;
};

struct IterationReport {
    int iteration = 0;
    std::vector<VideoSelection> videos;
    std::size_t corpus_size = 0;
    std::size_t negative_count = 0;
    double mean_omega = 0.0; // over selected positive frames
    std::vector<double> loss_curve;
    double eval_iou = 0.0;
    double max_certificate_gap = 0.0;
    std::size_t solves = 0;
};

struct RunResult {
    std::vector<IterationReport> reports;
    PixelModel final_model;
};

/// The iterative loop. When `out_dir` is given, masks and models of every
/// iteration are written under it (iter_XX/masks/<video>/, iter_XX/model.pxm).
RunResult run_iterations(const std::vector<LoadedVideo>& videos, const PipelineConfig& config,
                         const std::filesystem::path* out_dir = nullptr);

} // namespace svseg
