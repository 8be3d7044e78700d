#pragma once

#include <cstddef>
#include <vector>

namespace svseg {

/// Directed s-t network with floating-point capacities. Residual arcs are
/// stored pairwise: arc 2k is forward, 2k+1 its reverse.
class FlowNetwork {
public:
    /// Residual capacities at or below this are treated as saturated.
    static constexpr double kSaturation = 1e-12;

    explicit FlowNetwork(std::size_t nodes, std::size_t source, std::size_t sink);

    std::size_t node_count() const noexcept { return head_.size(); }
    std::size_t arc_count() const noexcept { return to_.size() / 2; }
    std::size_t source() const noexcept { return source_; }
    std::size_t sink() const noexcept { return sink_; }

    /// Adds u->v; returns its arc id. Capacity must be finite and >= 0.
    std::size_t add_arc(std::size_t u, std::size_t v, double capacity);

    double capacity(std::size_t arc) const { return capacity_[2 * arc]; }
    double flow(std::size_t arc) const { return capacity_[2 * arc] - residual_[2 * arc]; }
    std::size_t arc_from(std::size_t arc) const { return to_[2 * arc + 1]; }
    std::size_t arc_to(std::size_t arc) const { return to_[2 * arc]; }

    /// Shortest augmenting paths (BFS, arcs scanned in insertion order).
    double max_flow();
    std::size_t augmentations() const noexcept { return augmentations_; }

    /// Nodes reachable from the source in the residual graph (the minimal source side).
    std::vector<bool> source_side() const;
    /// Sum of capacities of arcs leaving `side`.
    double cut_capacity(const std::vector<bool>& side) const;

private:
    std::size_t source_, sink_;
    std::vector<std::vector<std::size_t>> head_; // node -> residual arc ids
    std::vector<std::size_t> to_;
    std::vector<double> capacity_;
    std::vector<double> residual_;
    std::size_t augmentations_ = 0;
};

} // namespace svseg
