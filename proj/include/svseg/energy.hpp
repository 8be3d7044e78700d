#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "svseg/stgraph.hpp"

namespace svseg {

enum class Label : std::int8_t { Background = -1, Human = 1 };

using Labeling = std::vector<Label>;

inline constexpr double kProbabilityEpsilon = 1e-6;
/// Weights of the proposal-mask and confidence terms in the node probability.
inline constexpr double kRegionWeight = 0.5;
inline constexpr double kConfidenceWeight = 0.5;

/// Index of argmax over proposals of box IoU(tight box, det box) + mean
/// confidence inside the proposal (confidence term dropped without a map).
/// Ties go to the lower index.
std::size_t select_proposal(const DetectionBox& box, std::span<const RegionProposal> proposals,
                            const ConfidenceMap* conf);

/// Union of the selected proposal of every detection on `frame` scoring above
/// `det_threshold`. Detections on frames without proposals are skipped.
BinaryMask build_proposal_mask(int frame, int width, int height, std::span<const DetectionBox> detections,
                               const ProposalSet& proposals, const ConfidenceMap* conf,
                               double det_threshold = -1.0);

/// Fraction of node pixels inside the proposal mask.
double region_overlap(std::span<const std::size_t> pixels, const BinaryMask& proposal_mask);
/// Mean of the confidence map over the node pixels.
double mean_confidence(std::span<const std::size_t> pixels, const ConfidenceMap& conf);

/// 0.5*overlap + 0.5*mean confidence, or the overlap alone without a map;
/// clamped to [eps, 1-eps].
double human_probability(std::span<const std::size_t> pixels, const BinaryMask& proposal_mask,
                         const ConfidenceMap* conf);

double unary_potential(double probability, Label label);
double pairwise_potential(Label a, Label b, double beta_p, double distance);
/// Truncated-linear Robust P^n cost: min(#+1,#-1) * lambda_max / q, capped at lambda_max.
double higher_order_potential(std::size_t minority_count, double lambda_max, double q);

struct UnaryTable {
    std::vector<double> probability; // P(y = +1) per node
    std::vector<double> human_cost;      // -log P
    std::vector<double> background_cost; // -log(1 - P)

    static UnaryTable from_probabilities(std::vector<double> probabilities);
    std::size_t size() const noexcept { return probability.size(); }
};

struct CliqueTerm {
    std::vector<std::size_t> nodes;
    double lambda_max = 0.0;
    double q = 0.0;
};

struct PotentialSet {
    UnaryTable unary;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::vector<double> pairwise_weight; // per edge, exp(-beta_p * D)
    std::vector<CliqueTerm> cliques;
    bool use_pairwise = true;
    bool use_higher_order = true;

    std::size_t node_count() const noexcept { return unary.size(); }
};

/// Potentials for one graph. `masks` and `confs` map key frame -> per-frame inputs.
PotentialSet build_potentials(const STGraph& graph, const std::map<int, BinaryMask>& proposal_masks,
                              const std::map<int, ConfidenceMap>* confs, bool use_pairwise = true,
                              bool use_higher_order = true);

struct EnergyBreakdown {
    double unary = 0.0;
    double pairwise = 0.0;
    double higher_order = 0.0;
    double total() const noexcept { return unary + pairwise + higher_order; }
};

EnergyBreakdown energy_breakdown(const PotentialSet& pots, const Labeling& labeling);
double total_energy(const PotentialSet& pots, const Labeling& labeling);

} // namespace svseg
