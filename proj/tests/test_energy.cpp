#include <doctest.h>

#include <cmath>
#include <random>

#include "svseg/energy.hpp"
#include "test_util.hpp"

using namespace svseg;

namespace {

RegionProposal box_proposal(int w, int h, Box b) {
    BinaryMask m(w, h);
    for (int y = b.y0; y <= b.y1; ++y)
        for (int x = b.x0; x <= b.x1; ++x)
            m(x, y) = 1;
    return RegionProposal(0, std::move(m));
}

std::vector<std::size_t> range_pixels(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = i;
    return v;
}

PotentialSet random_potentials(std::mt19937_64& rng, std::size_t nodes, std::size_t edges, std::size_t cliques) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p(nodes);
    for (double& x : p)
        x = std::clamp(u(rng), kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
    PotentialSet pots;
    pots.unary = UnaryTable::from_probabilities(p);
    std::uniform_int_distribution<std::size_t> pick(0, nodes - 1);
    for (std::size_t e = 0; e < edges; ++e) {
        std::size_t a = pick(rng), b = pick(rng);
        if (a == b)
            continue;
        pots.edges.emplace_back(std::min(a, b), std::max(a, b));
        pots.pairwise_weight.push_back(u(rng));
    }
    for (std::size_t c = 0; c < cliques; ++c) {
        CliqueTerm t;
        for (std::size_t n = 0; n < nodes; ++n)
            if (u(rng) < 0.4)
                t.nodes.push_back(n);
        if (t.nodes.empty())
            t.nodes.push_back(pick(rng));
        t.q = 0.1 * static_cast<double>(t.nodes.size());
        t.lambda_max = static_cast<double>(t.nodes.size()) * u(rng);
        pots.cliques.push_back(std::move(t));
    }
    return pots;
}

/// Direct evaluation of the energy from its definition.
double reference_energy(const PotentialSet& pots, const Labeling& y) {
    double e = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double p = pots.unary.probability[i];
        e += y[i] == Label::Human ? -std::log(p) : -std::log(1.0 - p);
    }
    if (pots.use_pairwise)
        for (std::size_t k = 0; k < pots.edges.size(); ++k)
            if (y[pots.edges[k].first] != y[pots.edges[k].second])
                e += pots.pairwise_weight[k];
    if (pots.use_higher_order)
        for (const CliqueTerm& c : pots.cliques) {
            std::size_t pos = 0, neg = 0;
            for (std::size_t n : c.nodes)
                (y[n] == Label::Human ? pos : neg)++;
            const double minority = static_cast<double>(std::min(pos, neg));
            e += std::min(minority * c.lambda_max / c.q, c.lambda_max);
        }
    return e;
}

Labeling random_labeling(std::mt19937_64& rng, std::size_t n) {
    std::bernoulli_distribution b(0.5);
    Labeling y(n);
    for (auto& l : y)
        l = b(rng) ? Label::Human : Label::Background;
    return y;
}

} // namespace

TEST_CASE("proposal selection") {
    // Disjoint masks so each proposal's mean confidence is exact.
    // r1: tight box (0,0)-(9,7), box IoU 0.8, conf 0.5 -> 1.3.
    // r2: tight box (0,0)-(5,9), box IoU 0.6, conf 0.9 -> 1.5.
    DetectionBox det{0, 1.0, {0, 0, 9, 9}};
    BinaryMask m1(20, 20), m2(20, 20);
    m1(0, 0) = 1;
    for (int y = 0; y <= 7; ++y)
        for (int x = 6; x <= 9; ++x)
            m1(x, y) = 1;
    for (int y = 0; y <= 9; ++y)
        for (int x = 0; x <= 5; ++x)
            if (!(x == 0 && y == 0))
                m2(x, y) = 1;
    std::vector<RegionProposal> props{RegionProposal(0, m1), RegionProposal(0, m2)};
    CHECK(box_iou(props[0].tight_box, det.box) == doctest::Approx(0.8));
    CHECK(box_iou(props[1].tight_box, det.box) == doctest::Approx(0.6));

    ConfidenceMap conf(20, 20, 0.0);
    for (std::size_t p = 0; p < conf.size(); ++p)
        conf[p] = m1[p] ? 0.5 : (m2[p] ? 0.9 : 0.0);
    CHECK(select_proposal(det, props, &conf) == 1);
    CHECK(select_proposal(det, props, nullptr) == 0);

    std::vector<RegionProposal> tied{props[0], props[0]};
    CHECK(select_proposal(det, tied, &conf) == 0);
    CHECK_THROWS_AS(select_proposal(det, std::vector<RegionProposal>{}, nullptr), InvalidArgument);
}

TEST_CASE("same tight box is separated by confidence") {
    BinaryMask a(12, 12), b(12, 12);
    for (int y = 2; y <= 9; ++y)
        for (int x = 2; x <= 9; ++x) {
            a(x, y) = 1;
            b(x, y) = (x == 2 || x == 9 || y == 2 || y == 9) ? 1 : 0;
        }
    std::vector<RegionProposal> props{RegionProposal(0, b), RegionProposal(0, a)};
    CHECK(props[0].tight_box == props[1].tight_box);
    DetectionBox det{0, 0.0, {2, 2, 9, 9}};
    CHECK(select_proposal(det, props, nullptr) == 0);
    ConfidenceMap conf(12, 12, 0.0);
    for (int y = 3; y <= 8; ++y)
        for (int x = 3; x <= 8; ++x)
            conf(x, y) = 1.0;
    CHECK(select_proposal(det, props, &conf) == 1);
}

TEST_CASE("selection without confidence is the first box-IoU argmax") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<RegionProposal> props;
        std::uniform_int_distribution<int> xy(0, 15);
        for (int k = 0; k < 8; ++k) {
            BinaryMask m = testutil::random_mask(rng, 16, 16, 0.01);
            m(xy(rng), xy(rng)) = 1;
            props.emplace_back(0, std::move(m));
        }
        props.push_back(props[3]);
        DetectionBox det{0, 0.0, {3, 3, 12, 12}};
        std::size_t best = 0;
        for (std::size_t k = 1; k < props.size(); ++k)
            if (box_iou(props[k].tight_box, det.box) > box_iou(props[best].tight_box, det.box))
                best = k;
        CHECK(select_proposal(det, props, nullptr) == best);
    }
}

TEST_CASE("proposal mask") {
    ProposalSet set;
    set[0].push_back(box_proposal(10, 10, {0, 0, 4, 4}));
    set[0].push_back(box_proposal(10, 10, {3, 3, 8, 8}));
    std::vector<DetectionBox> none{{0, -2.0, {0, 0, 4, 4}}};
    CHECK(count_set(build_proposal_mask(0, 10, 10, none, set, nullptr)) == 0);

    std::vector<DetectionBox> one{{0, 0.5, {0, 0, 4, 4}}};
    CHECK(build_proposal_mask(0, 10, 10, one, set, nullptr) == set[0][0].mask);

    std::vector<DetectionBox> two{{0, 0.5, {0, 0, 4, 4}}, {0, 0.5, {3, 3, 8, 8}}};
    BinaryMask u = build_proposal_mask(0, 10, 10, two, set, nullptr);
    CHECK(count_set(u) == 25 + 36 - 4);
    CHECK(count_set(u) <= count_set(set[0][0].mask) + count_set(set[0][1].mask));

    std::vector<DetectionBox> other_frame{{3, 0.5, {0, 0, 4, 4}}};
    CHECK(count_set(build_proposal_mask(3, 10, 10, other_frame, set, nullptr)) == 0);
}

TEST_CASE("human probability") {
    BinaryMask r(10, 1);
    for (int x = 0; x < 8; ++x)
        r(x, 0) = 1;
    ConfidenceMap conf(10, 1, 0.6);
    auto px = range_pixels(10);
    CHECK(human_probability(px, r, &conf) == doctest::Approx(0.7).epsilon(1e-12));

    BinaryMask empty(10, 1);
    CHECK(human_probability(px, empty, nullptr) == kProbabilityEpsilon);

    BinaryMask full(10, 1, 1);
    ConfidenceMap one(10, 1, 1.0);
    CHECK(human_probability(px, full, &one) == 1.0 - kProbabilityEpsilon);
    CHECK(human_probability(px, r, nullptr) == doctest::Approx(0.8));
}

TEST_CASE("unary potential") {
    CHECK(std::abs(unary_potential(0.5, Label::Human) - std::log(2.0)) < 1e-12);
    CHECK(std::abs(unary_potential(0.5, Label::Background) - std::log(2.0)) < 1e-12);
    CHECK(std::abs(unary_potential(0.9, Label::Background) - 2.302585092994046) < 1e-12);
    CHECK(std::abs(unary_potential(1.0 - 1e-6, Label::Human) - 1.0000005000003334e-06) < 1e-12);
}

TEST_CASE("pairwise potential") {
    CHECK(pairwise_potential(Label::Human, Label::Human, 2.0, 0.3) == 0.0);
    CHECK(pairwise_potential(Label::Background, Label::Background, 2.0, 0.3) == 0.0);
    CHECK(std::abs(pairwise_potential(Label::Human, Label::Background, 2.0, 0.5) - 0.36787944117144233) < 1e-12);
    CHECK(pairwise_potential(Label::Background, Label::Human, 2.0, 0.0) == 1.0);
}

TEST_CASE("higher-order potential") {
    CHECK(higher_order_potential(0, 2.0, 4.0) == 0.0);
    CHECK(std::abs(higher_order_potential(2, 2.0, 4.0) - 1.0) < 1e-12);
    CHECK(higher_order_potential(7, 2.0, 4.0) == 2.0);
    double prev = 0.0;
    for (std::size_t n = 0; n <= 20; ++n) {
        const double v = higher_order_potential(n, 2.0, 4.0);
        CHECK(v >= prev);
        CHECK(v <= 2.0);
        prev = v;
    }
}

TEST_CASE("small energies") {
    PotentialSet one;
    one.unary = UnaryTable::from_probabilities({0.5});
    CHECK(std::abs(total_energy(one, {Label::Human}) - std::log(2.0)) < 1e-12);

    PotentialSet two;
    two.unary = UnaryTable::from_probabilities({0.5, 0.5});
    two.edges = {{0, 1}};
    two.pairwise_weight = {0.7};
    two.cliques = {{{0, 1}, 1.5, 0.2}};
    CHECK(std::abs(total_energy(two, {Label::Human, Label::Human}) - 2.0 * std::log(2.0)) < 1e-12);
    EnergyBreakdown e = energy_breakdown(two, {Label::Human, Label::Background});
    CHECK(e.pairwise == doctest::Approx(0.7));
    CHECK(e.higher_order == doctest::Approx(1.5));
    CHECK_THROWS_AS(total_energy(two, {Label::Human}), InvalidArgument);
}

TEST_CASE("energy matches a term-by-term re-summation") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 100; ++trial) {
        PotentialSet pots = random_potentials(rng, 10, 15, 3);
        for (int k = 0; k < 10; ++k) {
            Labeling y = random_labeling(rng, 10);
            CHECK(std::abs(total_energy(pots, y) - reference_energy(pots, y)) < 1e-12);
        }
    }
}

TEST_CASE("ablation flags and label flip") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        PotentialSet pots = random_potentials(rng, 12, 20, 4);
        Labeling y = random_labeling(rng, 12);
        PotentialSet unary_only = pots;
        unary_only.use_pairwise = unary_only.use_higher_order = false;
        double sum = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
            sum += unary_potential(pots.unary.probability[i], y[i]);
        CHECK(std::abs(total_energy(unary_only, y) - sum) < 1e-12);

        Labeling flipped = y;
        for (auto& l : flipped)
            l = l == Label::Human ? Label::Background : Label::Human;
        EnergyBreakdown a = energy_breakdown(pots, y), b = energy_breakdown(pots, flipped);
        CHECK(a.pairwise == b.pairwise);
        CHECK(a.higher_order == b.higher_order);
        double swapped = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
            swapped += y[i] == Label::Human ? pots.unary.background_cost[i] : pots.unary.human_cost[i];
        CHECK(b.unary == doctest::Approx(swapped));
    }
}

TEST_CASE("unary table rejects unclamped probabilities") {
    CHECK_THROWS_AS(UnaryTable::from_probabilities({0.0}), InvalidArgument);
    CHECK_THROWS_AS(UnaryTable::from_probabilities({1.0}), InvalidArgument);
}
