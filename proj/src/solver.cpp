#include "svseg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "svseg/maxflow.hpp"

namespace svseg {

namespace {

void require_finite(double v, const char* what) {
    if (!std::isfinite(v))
        throw InvalidArgument(std::string("minimize: non-finite ") + what);
}

} // namespace

SolveResult minimize(const PotentialSet& pots) {
    const std::size_t n = pots.node_count();
    if (pots.unary.human_cost.size() != n || pots.unary.background_cost.size() != n)
        throw InvalidArgument("minimize: inconsistent unary table");
    const std::size_t source = n, sink = n + 1;
    const std::size_t aux_base = n + 2;
    const std::size_t clique_count = pots.use_higher_order ? pots.cliques.size() : 0;
    FlowNetwork net(n + 2 + 2 * clique_count, source, sink);
    double offset = 0.0;

    // Source side = human. A node on the sink side pays its background cost.
    for (std::size_t i = 0; i < n; ++i) {
        const double hc = pots.unary.human_cost[i], bc = pots.unary.background_cost[i];
        require_finite(hc, "unary potential");
        require_finite(bc, "unary potential");
        const double m = std::min(hc, bc);
        offset += m;
        if (bc > m)
            net.add_arc(source, i, bc - m);
        if (hc > m)
            net.add_arc(i, sink, hc - m);
    }
    if (pots.use_pairwise) {
        if (pots.pairwise_weight.size() != pots.edges.size())
            throw InvalidArgument("minimize: inconsistent pairwise table");
        for (std::size_t k = 0; k < pots.edges.size(); ++k) {
            const double w = pots.pairwise_weight[k];
            require_finite(w, "pairwise weight");
            if (w < 0.0)
                throw InvalidArgument("minimize: negative pairwise weight is not submodular");
            const auto [a, b] = pots.edges[k];
            if (a >= n || b >= n)
                throw InvalidArgument("minimize: edge endpoint out of range");
            if (w > 0.0) {
                net.add_arc(a, b, w);
                net.add_arc(b, a, w);
            }
        }
    }
    // min(lambda, a*n_bg, a*n_human) == min(lambda, a*n_bg) + min(lambda, a*n_human) - lambda
    // whenever n_bg and n_human cannot both be below q, i.e. 2q <= |clique|.
    for (std::size_t c = 0; c < clique_count; ++c) {
        const CliqueTerm& term = pots.cliques[c];
        require_finite(term.lambda_max, "clique lambda_max");
        require_finite(term.q, "clique truncation");
        if (term.nodes.empty() || term.lambda_max == 0.0)
            continue;
        if (term.lambda_max < 0.0 || term.q <= 0.0 || 2.0 * term.q > static_cast<double>(term.nodes.size()))
            throw InvalidArgument("minimize: clique " + std::to_string(c) + " needs lambda_max >= 0 and 0 < 2q <= size");
        const double slope = term.lambda_max / term.q;
        require_finite(slope, "clique slope");
        const std::size_t z_bg = aux_base + 2 * c;    // source side: pays slope per background member
        const std::size_t z_human = aux_base + 2 * c + 1; // sink side: pays slope per human member
        net.add_arc(source, z_bg, term.lambda_max);
        for (std::size_t i : term.nodes) {
            if (i >= n)
                throw InvalidArgument("minimize: clique member out of range");
            net.add_arc(z_bg, i, slope);
        }
        for (std::size_t i : term.nodes)
            net.add_arc(i, z_human, slope);
        net.add_arc(z_human, sink, term.lambda_max);
        offset -= term.lambda_max;
    }

    SolveResult r;
    r.flow_value = net.max_flow();
    r.offset = offset;
    const std::vector<bool> side = net.source_side();
    r.labeling.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        r.labeling[i] = side[i] ? Label::Human : Label::Background;
    r.energy = total_energy(pots, r.labeling);
    r.stats = {net.node_count(), net.arc_count(), net.augmentations()};
    return r;
}

SolveResult brute_force_min(const PotentialSet& pots) {
    const std::size_t n = pots.node_count();
    if (n > kBruteForceMaxNodes)
        throw InvalidArgument("brute_force_min: " + std::to_string(n) + " nodes exceeds the limit of " +
                              std::to_string(kBruteForceMaxNodes));
    SolveResult best;
    Labeling labels(n, Label::Background);
    bool have = false;
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t code = 0; code < total; ++code) {
        // Node 0 is the most significant position; bit 0 means -1.
        for (std::size_t i = 0; i < n; ++i)
            labels[i] = (code >> (n - 1 - i)) & 1u ? Label::Human : Label::Background;
        const double e = total_energy(pots, labels);
        if (!have || e < best.energy) {
            best.energy = e;
            best.labeling = labels;
            have = true;
        }
    }
    return best;
}

} // namespace svseg
