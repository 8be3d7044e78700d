#include "svseg/energy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace svseg {

namespace {

double mean_over(const BinaryMask& mask, const ConfidenceMap& conf) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < mask.size(); ++p)
        if (mask[p]) {
            sum += conf[p];
            ++n;
        }
    return n ? sum / static_cast<double>(n) : 0.0;
}

} // namespace

std::size_t select_proposal(const DetectionBox& box, std::span<const RegionProposal> proposals,
                            const ConfidenceMap* conf) {
    if (proposals.empty())
        throw InvalidArgument("select_proposal: no proposals for frame " + std::to_string(box.frame_index));
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < proposals.size(); ++i) {
        double score = box_iou(proposals[i].tight_box, box.box);
        if (conf) {
            if (!conf->same_shape(proposals[i].mask))
                throw InvalidArgument("select_proposal: confidence map size mismatch");
            score += mean_over(proposals[i].mask, *conf);
        }
        if (score > best_score) {
            best_score = score;
            best = i;
        }
    }
    return best;
}

BinaryMask build_proposal_mask(int frame, int width, int height, std::span<const DetectionBox> detections,
                               const ProposalSet& proposals, const ConfidenceMap* conf, double det_threshold) {
    BinaryMask out(width, height, 0);
    const auto it = proposals.find(frame);
    if (it == proposals.end() || it->second.empty())
        return out;
    for (const DetectionBox& d : detections) {
        if (d.frame_index != frame || !(d.score > det_threshold))
            continue;
        const RegionProposal& r = it->second[select_proposal(d, it->second, conf)];
        if (!r.mask.same_shape(out))
            throw InvalidArgument("build_proposal_mask: proposal size mismatch");
        for (std::size_t p = 0; p < out.size(); ++p)
            out[p] |= r.mask[p];
    }
    return out;
}

double region_overlap(std::span<const std::size_t> pixels, const BinaryMask& proposal_mask) {
    if (pixels.empty())
        return 0.0;
    std::size_t inside = 0;
    for (std::size_t p : pixels)
        inside += proposal_mask[p] != 0;
    return static_cast<double>(inside) / static_cast<double>(pixels.size());
}

double mean_confidence(std::span<const std::size_t> pixels, const ConfidenceMap& conf) {
    if (pixels.empty())
        return 0.0;
    double sum = 0.0;
    for (std::size_t p : pixels)
        sum += conf[p];
    return sum / static_cast<double>(pixels.size());
}

double human_probability(std::span<const std::size_t> pixels, const BinaryMask& proposal_mask,
                         const ConfidenceMap* conf) {
    for (std::size_t p : pixels)
        if (p >= proposal_mask.size() || (conf && p >= conf->size()))
            throw InvalidArgument("human_probability: node pixel outside frame");
    const double eta = region_overlap(pixels, proposal_mask);
    const double p = conf ? kRegionWeight * eta + kConfidenceWeight * mean_confidence(pixels, *conf) : eta;
    return std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
}

double unary_potential(double probability, Label label) {
    return label == Label::Human ? -std::log(probability) : -std::log(1.0 - probability);
}

double pairwise_potential(Label a, Label b, double beta_p, double distance) {
    return a == b ? 0.0 : std::exp(-beta_p * distance);
}

double higher_order_potential(std::size_t minority_count, double lambda_max, double q) {
    const double n = static_cast<double>(minority_count);
    if (n <= q)
        return q > 0.0 ? n * (lambda_max / q) : 0.0;
    return lambda_max;
}

UnaryTable UnaryTable::from_probabilities(std::vector<double> probabilities) {
    UnaryTable t;
    t.probability = std::move(probabilities);
    for (double p : t.probability) {
        if (!(p >= kProbabilityEpsilon && p <= 1.0 - kProbabilityEpsilon))
            throw InvalidArgument("unary probability outside [eps, 1-eps]");
        t.human_cost.push_back(unary_potential(p, Label::Human));
        t.background_cost.push_back(unary_potential(p, Label::Background));
    }
    return t;
}

PotentialSet build_potentials(const STGraph& graph, const std::map<int, BinaryMask>& proposal_masks,
                              const std::map<int, ConfidenceMap>* confs, bool use_pairwise, bool use_higher_order) {
    std::vector<double> probs;
    probs.reserve(graph.nodes.size());
    for (const Node& n : graph.nodes) {
        const auto mit = proposal_masks.find(n.frame);
        if (mit == proposal_masks.end())
            throw InvalidArgument("build_potentials: no proposal mask for key frame " + std::to_string(n.frame));
        const ConfidenceMap* conf = nullptr;
        if (confs) {
            const auto cit = confs->find(n.frame);
            if (cit == confs->end())
                throw InvalidArgument("build_potentials: no confidence map for key frame " + std::to_string(n.frame));
            conf = &cit->second;
        }
        probs.push_back(human_probability(n.pixels, mit->second, conf));
    }
    PotentialSet pots;
    pots.unary = UnaryTable::from_probabilities(std::move(probs));
    for (const Edge& e : graph.edges) {
        pots.edges.emplace_back(e.a, e.b);
        pots.pairwise_weight.push_back(std::exp(-graph.beta_p * e.distance));
    }
    for (const Clique& c : graph.cliques)
        pots.cliques.push_back({c.nodes, c.lambda_max, c.q});
    pots.use_pairwise = use_pairwise;
    pots.use_higher_order = use_higher_order;
    return pots;
}

EnergyBreakdown energy_breakdown(const PotentialSet& pots, const Labeling& labeling) {
    if (labeling.size() != pots.node_count())
        throw InvalidArgument("total_energy: labeling has " + std::to_string(labeling.size()) + " labels for " +
                              std::to_string(pots.node_count()) + " nodes");
    EnergyBreakdown e;
    for (std::size_t i = 0; i < labeling.size(); ++i)
        e.unary += labeling[i] == Label::Human ? pots.unary.human_cost[i] : pots.unary.background_cost[i];
    if (pots.use_pairwise)
        for (std::size_t k = 0; k < pots.edges.size(); ++k)
            if (labeling[pots.edges[k].first] != labeling[pots.edges[k].second])
                e.pairwise += pots.pairwise_weight[k];
    if (pots.use_higher_order)
        for (const CliqueTerm& c : pots.cliques) {
            std::size_t humans = 0;
            for (std::size_t n : c.nodes)
                humans += labeling[n] == Label::Human;
            const std::size_t minority = std::min(humans, c.nodes.size() - humans);
            e.higher_order += higher_order_potential(minority, c.lambda_max, c.q);
        }
    return e;
}

double total_energy(const PotentialSet& pots, const Labeling& labeling) {
    return energy_breakdown(pots, labeling).total();
}

} // namespace svseg
