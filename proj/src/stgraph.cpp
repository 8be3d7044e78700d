#include "svseg/stgraph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>

#include "svseg/color.hpp"

namespace svseg {

const std::array<int, 27>& color_cell_table() {
    static const std::array<int, 27> table = [] {
        std::array<int, 27> t{};
        int bin = 0;
        for (int cell = 0; cell < 27; ++cell) {
            if (cell == 0 || cell == 26)
                continue;
            t[static_cast<std::size_t>(cell)] = bin++;
        }
        t[0] = t[1];   // (0,0,0) -> (0,0,1)
        t[26] = t[25]; // (2,2,2) -> (2,2,1)
        return t;
    }();
    return table;
}

namespace {

int level3(double v, double lo_cut, double hi_cut) noexcept { return v < lo_cut ? 0 : (v < hi_cut ? 1 : 2); }

int rgb_bin(const Rgb& p) noexcept {
    auto q = [](std::uint8_t v) { return std::min(2, v * 3 / 256); };
    return color_cell_table()[static_cast<std::size_t>(q(p.r) * 9 + q(p.g) * 3 + q(p.b))];
}

int lab_bin(const Rgb& p) noexcept {
    const auto lab = rgb_to_lab(p);
    const int l = level3(lab[0], 100.0 / 3.0, 200.0 / 3.0);
    const int a = level3(lab[1], -20.0, 20.0);
    const int b = level3(lab[2], -20.0, 20.0);
    return color_cell_table()[static_cast<std::size_t>(l * 9 + a * 3 + b)];
}

double luma_at(const RgbImage& img, int x, int y) {
    x = std::clamp(x, 0, img.width() - 1);
    y = std::clamp(y, 0, img.height() - 1);
    return luma(img(x, y));
}

void normalize_block(double* block) {
    double sum = 0.0;
    for (std::size_t i = 0; i < kFeatureBins; ++i)
        sum += block[i];
    if (sum <= 0.0) {
        std::fill(block, block + kFeatureBins, 1.0 / kFeatureBins);
        return;
    }
    for (std::size_t i = 0; i < kFeatureBins; ++i)
        block[i] /= sum;
}

} // namespace

NodeFeature node_features(const RgbImage& frame, std::span<const std::size_t> pixels) {
    if (pixels.empty())
        throw InvalidArgument("node_features: empty pixel set");
    NodeFeature f{};
    double* rgb = f.data();
    double* lab = f.data() + kFeatureBins;
    double* grad = f.data() + 2 * kFeatureBins;
    const auto w = static_cast<std::size_t>(frame.width());
    for (std::size_t p : pixels) {
        if (p >= frame.size())
            throw InvalidArgument("node_features: pixel outside frame");
        const Rgb& px = frame[p];
        rgb[rgb_bin(px)] += 1.0;
        lab[lab_bin(px)] += 1.0;
        const int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
        const double gx = 0.5 * (luma_at(frame, x + 1, y) - luma_at(frame, x - 1, y));
        const double gy = 0.5 * (luma_at(frame, x, y + 1) - luma_at(frame, x, y - 1));
        const double mag = std::hypot(gx, gy);
        if (mag > 0.0) {
            double theta = std::atan2(gy, gx);
            if (theta < 0.0)
                theta += std::numbers::pi;
            if (theta >= std::numbers::pi)
                theta -= std::numbers::pi;
            const int bin = std::min(static_cast<int>(kFeatureBins) - 1,
                                     static_cast<int>(theta / std::numbers::pi * kFeatureBins));
            grad[bin] += mag;
        }
    }
    normalize_block(rgb);
    normalize_block(lab);
    normalize_block(grad);
    return f;
}

double node_distance(const NodeFeature& a, const NodeFeature& b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < kFeatureDim; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

namespace {

/// 4-connected components of `pixels` (ascending), each ascending.
std::vector<std::vector<std::size_t>> components(const std::vector<std::size_t>& pixels, int width, int height) {
    std::map<std::size_t, int> comp;
    for (std::size_t p : pixels)
        comp[p] = -1;
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t seed : pixels) {
        if (comp[seed] >= 0)
            continue;
        const int c = static_cast<int>(out.size());
        out.emplace_back();
        std::vector<std::size_t> stack{seed};
        comp[seed] = c;
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            out.back().push_back(p);
            const int x = static_cast<int>(p % static_cast<std::size_t>(width));
            const int y = static_cast<int>(p / static_cast<std::size_t>(width));
            const int nbr[4][2] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
            for (const auto& n : nbr) {
                if (n[0] < 0 || n[1] < 0 || n[0] >= width || n[1] >= height)
                    continue;
                const std::size_t q = static_cast<std::size_t>(n[1]) * static_cast<std::size_t>(width) +
                                      static_cast<std::size_t>(n[0]);
                auto it = comp.find(q);
                if (it != comp.end() && it->second < 0) {
                    it->second = c;
                    stack.push_back(q);
                }
            }
        }
        std::sort(out.back().begin(), out.back().end());
    }
    return out;
}

} // namespace

STGraph build_graph(const Shot& shot, const std::vector<int>& keyframes, const SupervoxelMap& svmap,
                    const FrameSequence& frames) {
    if (keyframes.empty())
        throw InvalidArgument("build_graph: shot has no key frames");
    if (svmap.frame_count() != frames.size() || svmap.width() != frames.width() || svmap.height() != frames.height())
        throw InvalidArgument("build_graph: supervoxel map does not match frames");
    STGraph g;
    g.width = frames.width();
    g.height = frames.height();
    g.keyframes = keyframes;
    std::sort(g.keyframes.begin(), g.keyframes.end());
    g.keyframes.erase(std::unique(g.keyframes.begin(), g.keyframes.end()), g.keyframes.end());
    for (int k : g.keyframes)
        if (k < shot.start || k >= shot.end)
            throw InvalidArgument("build_graph: key frame " + std::to_string(k) + " outside shot");

    const int w = g.width, h = g.height;
    std::map<SupervoxelId, std::size_t> clique_of;
    for (int k : g.keyframes) {
        const auto& lab = svmap.frame(k);
        std::map<SupervoxelId, std::vector<std::size_t>> by_id;
        for (std::size_t p = 0; p < lab.size(); ++p)
            by_id[lab[p]].push_back(p);
        Raster<std::size_t> node_at(w, h, 0);
        for (auto& [id, px] : by_id) {
            auto [it, inserted] = clique_of.try_emplace(id, g.cliques.size());
            if (inserted)
                g.cliques.push_back(Clique{id, {}, 0.0, 0.0, 0.0});
            for (auto& comp : components(px, w, h)) {
                const std::size_t n = g.nodes.size();
                for (std::size_t p : comp)
                    node_at[p] = n;
                Node node{k, id, std::move(comp), {}};
                node.feature = node_features(frames[k], node.pixels);
                g.nodes.push_back(std::move(node));
                g.node_clique.push_back(it->second);
                g.cliques[it->second].nodes.push_back(n);
            }
        }
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const std::size_t a = node_at(x, y);
                if (x + 1 < w && node_at(x + 1, y) != a)
                    pairs.emplace_back(std::min(a, node_at(x + 1, y)), std::max(a, node_at(x + 1, y)));
                if (y + 1 < h && node_at(x, y + 1) != a)
                    pairs.emplace_back(std::min(a, node_at(x, y + 1)), std::max(a, node_at(x, y + 1)));
            }
        std::sort(pairs.begin(), pairs.end());
        pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
        for (auto [a, b] : pairs)
            g.edges.push_back({a, b, node_distance(g.nodes[a].feature, g.nodes[b].feature)});
    }

    // Cliques were created in first-seen order; reorder by supervoxel id.
    std::vector<std::size_t> order(g.cliques.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return g.cliques[a].supervoxel < g.cliques[b].supervoxel; });
    std::vector<Clique> sorted;
    std::vector<std::size_t> remap(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        remap[order[i]] = i;
        sorted.push_back(std::move(g.cliques[order[i]]));
    }
    g.cliques = std::move(sorted);
    for (auto& c : g.node_clique)
        c = remap[c];

    double dist_sum = 0.0;
    for (const Edge& e : g.edges)
        dist_sum += e.distance;
    const double mean_dist = g.edges.empty() ? 0.0 : dist_sum / static_cast<double>(g.edges.size());
    g.beta_p = mean_dist > 0.0 ? 1.0 / mean_dist : 1.0;

    double sigma_sum = 0.0;
    for (Clique& c : g.cliques) {
        std::array<double, 3> s{}, s2{};
        double n = 0.0;
        for (std::size_t node : c.nodes) {
            const RgbImage& img = frames[g.nodes[node].frame];
            for (std::size_t p : g.nodes[node].pixels) {
                const double v[3] = {double(img[p].r), double(img[p].g), double(img[p].b)};
                for (int ch = 0; ch < 3; ++ch) {
                    s[static_cast<std::size_t>(ch)] += v[ch];
                    s2[static_cast<std::size_t>(ch)] += v[ch] * v[ch];
                }
                n += 1.0;
            }
        }
        double var = 0.0;
        for (int ch = 0; ch < 3; ++ch) {
            const double mean = s[static_cast<std::size_t>(ch)] / n;
            var += std::max(0.0, s2[static_cast<std::size_t>(ch)] / n - mean * mean);
        }
        c.sigma = var / 3.0;
        sigma_sum += c.sigma;
    }
    const double mean_sigma = g.cliques.empty() ? 0.0 : sigma_sum / static_cast<double>(g.cliques.size());
    g.beta_s = mean_sigma > 0.0 ? 1.0 / mean_sigma : 1.0;
    for (Clique& c : g.cliques) {
        const double size = static_cast<double>(c.nodes.size());
        c.q = 0.1 * size;
        c.lambda_max = size * std::exp(-g.beta_s * c.sigma);
    }
    return g;
}

std::string dump_graph(const STGraph& g) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "graph nodes=%zu edges=%zu cliques=%zu beta_p=%.9g beta_s=%.9g\n",
                  g.nodes.size(), g.edges.size(), g.cliques.size(), g.beta_p, g.beta_s);
    out += buf;
    out += "# node frame supervoxel pixels clique\n";
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        std::snprintf(buf, sizeof buf, "node %zu %d %u %zu %zu\n", i, g.nodes[i].frame, g.nodes[i].supervoxel,
                      g.nodes[i].pixels.size(), g.node_clique[i]);
        out += buf;
    }
    out += "# edge a b distance\n";
    for (const Edge& e : g.edges) {
        std::snprintf(buf, sizeof buf, "edge %zu %zu %.9g\n", e.a, e.b, e.distance);
        out += buf;
    }
    out += "# clique supervoxel size sigma lambda_max q\n";
    for (const Clique& c : g.cliques) {
        std::snprintf(buf, sizeof buf, "clique %u %zu %.9g %.9g %.9g\n", c.supervoxel, c.nodes.size(), c.sigma,
                      c.lambda_max, c.q);
        out += buf;
    }
    return out;
}

} // namespace svseg
