#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "svseg/videoio.hpp"

namespace svseg {

using SupervoxelId = std::uint32_t;

/// Per-frame supervoxel id rasters. Ids are contiguous from 0, every id's
/// per-frame region is 4-connected and its frame set is one interval.
class SupervoxelMap {
public:
    SupervoxelMap() = default;
    /// Validates coverage, contiguity of ids, per-frame 4-connectivity and
    /// temporal contiguity.
    explicit SupervoxelMap(std::vector<Raster<SupervoxelId>> labels);

    int width() const noexcept { return labels_.empty() ? 0 : labels_.front().width(); }
    int height() const noexcept { return labels_.empty() ? 0 : labels_.front().height(); }
    int frame_count() const noexcept { return static_cast<int>(labels_.size()); }
    SupervoxelId id_count() const noexcept { return id_count_; }

    const Raster<SupervoxelId>& frame(int t) const { return labels_.at(static_cast<std::size_t>(t)); }
    /// Sorted distinct ids present in frame t.
    const std::vector<SupervoxelId>& ids_in_frame(int t) const {
        return frame_ids_.at(static_cast<std::size_t>(t));
    }
    /// [first, last] frames touched by an id.
    std::pair<int, int> frame_span(SupervoxelId id) const { return spans_.at(id); }
    /// Row-major pixel indices of `id` in frame t (empty if absent).
    std::vector<std::size_t> pixels(int t, SupervoxelId id) const;

private:
    std::vector<Raster<SupervoxelId>> labels_;
    std::vector<std::vector<SupervoxelId>> frame_ids_;
    std::vector<std::pair<int, int>> spans_;
    SupervoxelId id_count_ = 0;
};

struct SupervoxelParams {
    int seed_grid = 8;       // seed spacing in px
    double color_tol = 20.0; // max RGB distance for region growth and temporal linking
    int min_size = 16;       // regions below this many px are merged away
};

SupervoxelMap extract_supervoxels(const FrameSequence& frames, const SupervoxelParams& params);

/// [start, end) frame interval with its candidate key frames.
struct Shot {
    int start = 0;
    int end = 0;
    std::vector<int> candidate_keyframes;
};

/// Boundary between t and t+1 iff |ids(t) xor ids(t+1)| / |ids(t) or ids(t+1)| > threshold.
/// Each shot comes with its candidate key frames.
std::vector<Shot> split_shots(const SupervoxelMap& svmap, double turnover_threshold = 0.5,
                              int churn_threshold = 10);

/// The shot's first frame plus every later frame whose id set differs from
/// its predecessor's by more than `churn_threshold` ids (symmetric difference).
std::vector<int> select_candidate_keyframes(const Shot& shot, const SupervoxelMap& svmap,
                                            int churn_threshold = 10);

/// Count of ids in exactly one of the two sorted sets.
std::size_t symmetric_difference_size(const std::vector<SupervoxelId>& a, const std::vector<SupervoxelId>& b);

/// sv_%05d.pgm (16-bit P5) per frame plus ids.txt holding the id count.
void write_supervoxels(const std::filesystem::path& dir, const SupervoxelMap& svmap);
SupervoxelMap read_supervoxels(const std::filesystem::path& dir);

} // namespace svseg
