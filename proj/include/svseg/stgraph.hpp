#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "svseg/supervoxel.hpp"

namespace svseg {

inline constexpr std::size_t kFeatureBins = 25;
inline constexpr std::size_t kFeatureDim = 3 * kFeatureBins;

using NodeFeature = std::array<double, kFeatureDim>;

/// 27-cell 3x3x3 grid index -> one of the 25 colour bins. The (0,0,0) and
/// (2,2,2) corners fold into their nearest neighbours (0,0,1) and (2,2,1).
const std::array<int, 27>& color_cell_table();

/// Three 25-bin histograms over the pixel set: quantized RGB, quantized Lab,
/// and magnitude-weighted unsigned gradient orientation. Each sums to 1.
NodeFeature node_features(const RgbImage& frame, std::span<const std::size_t> pixels);

double node_distance(const NodeFeature& a, const NodeFeature& b) noexcept;

/// One superpixel: a 4-connected slice of a supervoxel in one key frame.
struct Node {
    int frame = 0;
    SupervoxelId supervoxel = 0;
    std::vector<std::size_t> pixels; // row-major, ascending
    NodeFeature feature{};
};

struct Edge {
    std::size_t a = 0;
    std::size_t b = 0; // a < b
    double distance = 0.0;
};

/// A supervoxel's nodes across the key frames, with its consistency parameters.
struct Clique {
    SupervoxelId supervoxel = 0;
    std::vector<std::size_t> nodes;
    double sigma = 0.0;      // mean per-channel RGB variance over member pixels
    double lambda_max = 0.0; // |y_s| * exp(-beta_s * sigma)
    double q = 0.0;          // 0.1 * |y_s|
};

/// Key-frame superpixel graph of one shot. Nodes ordered by (frame, id,
/// component); edges ordered by (a, b).
struct STGraph {
    int width = 0;
    int height = 0;
    std::vector<int> keyframes;
    std::vector<Node> nodes;
    std::vector<Edge> edges;
    std::vector<Clique> cliques;
    std::vector<std::size_t> node_clique; // node -> clique index
    double beta_p = 1.0;
    double beta_s = 1.0;

    std::size_t node_count() const noexcept { return nodes.size(); }
};

STGraph build_graph(const Shot& shot, const std::vector<int>& keyframes, const SupervoxelMap& svmap,
                    const FrameSequence& frames);

/// Node table, edge list with distances, clique table.
std::string dump_graph(const STGraph& graph);

} // namespace svseg
