#include "svseg/supervoxel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <queue>
#include <string>
#include <tuple>

namespace svseg {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::array<int, 2>, 4> kNeighbors4{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

template <typename Label>
bool is_connected(const Raster<Label>& labels, const std::vector<std::size_t>& pixels) {
    if (pixels.empty())
        return true;
    const Label id = labels[pixels.front()];
    std::vector<std::uint8_t> seen(labels.size(), 0);
    std::vector<std::size_t> stack{pixels.front()};
    seen[pixels.front()] = 1;
    std::size_t reached = 0;
    while (!stack.empty()) {
        const std::size_t p = stack.back();
        stack.pop_back();
        ++reached;
        const int x = static_cast<int>(p % static_cast<std::size_t>(labels.width()));
        const int y = static_cast<int>(p / static_cast<std::size_t>(labels.width()));
        for (auto [dx, dy] : kNeighbors4) {
            const int nx = x + dx, ny = y + dy;
            if (!labels.contains(nx, ny))
                continue;
            const std::size_t q = labels.index(nx, ny);
            if (!seen[q] && labels[q] == id) {
                seen[q] = 1;
                stack.push_back(q);
            }
        }
    }
    return reached == pixels.size();
}

double color_distance(const std::array<double, 3>& a, const std::array<double, 3>& b) noexcept {
    const double dr = a[0] - b[0], dg = a[1] - b[1], db = a[2] - b[2];
    return std::sqrt(dr * dr + dg * dg + db * db);
}

std::array<double, 3> as_vec(const Rgb& p) noexcept { return {double(p.r), double(p.g), double(p.b)}; }

struct RegionStats {
    std::array<double, 3> sum{0, 0, 0};
    std::size_t size = 0;

    void add(const Rgb& p) {
        sum[0] += p.r;
        sum[1] += p.g;
        sum[2] += p.b;
        ++size;
    }
    std::array<double, 3> mean() const {
        const double n = size ? static_cast<double>(size) : 1.0;
        return {sum[0] / n, sum[1] / n, sum[2] / n};
    }
};

constexpr int kUnlabeled = -1;
// Weight of the seed-distance term relative to colour distance, per seed spacing.
constexpr double kCompactness = 10.0;

/// Seeded region growing with a SLIC-like colour+position priority. Returns
/// compact labels 0..R-1 ordered by first pixel in raster order.
Raster<int> segment_frame(const RgbImage& img, const SupervoxelParams& params) {
    const int w = img.width(), h = img.height();
    Raster<int> label(w, h, kUnlabeled);
    std::vector<RegionStats> stats;
    std::vector<std::array<double, 2>> seed_pos;

    using Entry = std::tuple<double, std::uint64_t, std::size_t, int>; // priority, seq, pixel, region
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    std::uint64_t seq = 0;
    const double grid = std::max(1, params.seed_grid);

    auto push_neighbors = [&](std::size_t p, int region) {
        const int x = static_cast<int>(p % static_cast<std::size_t>(w));
        const int y = static_cast<int>(p / static_cast<std::size_t>(w));
        const auto mean = stats[static_cast<std::size_t>(region)].mean();
        const auto& sp = seed_pos[static_cast<std::size_t>(region)];
        for (auto [dx, dy] : kNeighbors4) {
            const int nx = x + dx, ny = y + dy;
            if (!img.contains(nx, ny) || label(nx, ny) != kUnlabeled)
                continue;
            const double dc = color_distance(as_vec(img(nx, ny)), mean);
            if (dc > params.color_tol)
                continue;
            const double ds = std::hypot(nx - sp[0], ny - sp[1]);
            queue.emplace(dc + kCompactness * ds / grid, seq++, img.index(nx, ny), region);
        }
    };
    auto start_region = [&](int x, int y) {
        const int region = static_cast<int>(stats.size());
        stats.emplace_back();
        seed_pos.push_back({double(x), double(y)});
        label(x, y) = region;
        stats.back().add(img(x, y));
        push_neighbors(img.index(x, y), region);
    };
    auto grow = [&] {
        while (!queue.empty()) {
            const auto [prio, s, p, region] = queue.top();
            queue.pop();
            if (label[p] != kUnlabeled)
                continue;
            label[p] = region;
            stats[static_cast<std::size_t>(region)].add(img[p]);
            push_neighbors(p, region);
        }
    };

    const int nx = std::max(1, static_cast<int>(w / grid));
    const int ny = std::max(1, static_cast<int>(h / grid));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int sx = std::min(w - 1, static_cast<int>((i + 0.5) * w / nx));
            const int sy = std::min(h - 1, static_cast<int>((j + 0.5) * h / ny));
            if (label(sx, sy) == kUnlabeled)
                start_region(sx, sy);
        }
    grow();
    for (std::size_t p = 0; p < label.size(); ++p)
        if (label[p] == kUnlabeled) {
            start_region(static_cast<int>(p % static_cast<std::size_t>(w)),
                         static_cast<int>(p / static_cast<std::size_t>(w)));
            grow();
        }

    // Merge undersized regions into the colour-nearest 4-adjacent region.
    int regions = static_cast<int>(stats.size());
    std::vector<int> parent(static_cast<std::size_t>(regions));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int r) {
        while (parent[static_cast<std::size_t>(r)] != r)
            r = parent[static_cast<std::size_t>(r)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(r)])];
        return r;
    };
    while (true) {
        int victim = -1;
        for (int r = 0; r < regions; ++r)
            if (find(r) == r && stats[static_cast<std::size_t>(r)].size < static_cast<std::size_t>(params.min_size) &&
                (victim < 0 || stats[static_cast<std::size_t>(r)].size < stats[static_cast<std::size_t>(victim)].size))
                victim = r;
        if (victim < 0)
            break;
        std::vector<int> adjacent;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                if (find(label(x, y)) != victim)
                    continue;
                for (auto [dx, dy] : kNeighbors4) {
                    const int ax = x + dx, ay = y + dy;
                    if (!label.contains(ax, ay))
                        continue;
                    const int other = find(label(ax, ay));
                    if (other != victim)
                        adjacent.push_back(other);
                }
            }
        if (adjacent.empty())
            break; // the only region left
        std::sort(adjacent.begin(), adjacent.end());
        adjacent.erase(std::unique(adjacent.begin(), adjacent.end()), adjacent.end());
        const auto vmean = stats[static_cast<std::size_t>(victim)].mean();
        int target = adjacent.front();
        double best = color_distance(vmean, stats[static_cast<std::size_t>(target)].mean());
        for (int a : adjacent) {
            const double d = color_distance(vmean, stats[static_cast<std::size_t>(a)].mean());
            if (d < best) {
                best = d;
                target = a;
            }
        }
        auto& ts = stats[static_cast<std::size_t>(target)];
        const auto& vs = stats[static_cast<std::size_t>(victim)];
        for (int c = 0; c < 3; ++c)
            ts.sum[static_cast<std::size_t>(c)] += vs.sum[static_cast<std::size_t>(c)];
        ts.size += vs.size;
        parent[static_cast<std::size_t>(victim)] = target;
    }

    std::vector<int> compact(static_cast<std::size_t>(regions), -1);
    int next = 0;
    for (std::size_t p = 0; p < label.size(); ++p) {
        const int root = find(label[p]);
        if (compact[static_cast<std::size_t>(root)] < 0)
            compact[static_cast<std::size_t>(root)] = next++;
        label[p] = compact[static_cast<std::size_t>(root)];
    }
    return label;
}

} // namespace

SupervoxelMap::SupervoxelMap(std::vector<Raster<SupervoxelId>> labels) : labels_(std::move(labels)) {
    if (labels_.empty())
        throw InvalidArgument("supervoxel map without frames");
    const int w = labels_.front().width(), h = labels_.front().height();
    SupervoxelId max_id = 0;
    for (const auto& f : labels_) {
        if (!f.same_shape(w, h))
            throw InvalidArgument("supervoxel frames differ in size");
        for (SupervoxelId v : f.data())
            max_id = std::max(max_id, v);
    }
    id_count_ = max_id + 1;
    spans_.assign(id_count_, {-1, -1});
    frame_ids_.resize(labels_.size());
    for (std::size_t t = 0; t < labels_.size(); ++t) {
        std::vector<SupervoxelId> ids(labels_[t].data());
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        for (SupervoxelId id : ids) {
            auto& span = spans_[id];
            if (span.first < 0) {
                span = {static_cast<int>(t), static_cast<int>(t)};
            } else if (span.second != static_cast<int>(t) - 1) {
                throw InvalidArgument("supervoxel " + std::to_string(id) + " reappears at frame " +
                                      std::to_string(t) + " after a gap");
            } else {
                span.second = static_cast<int>(t);
            }
        }
        frame_ids_[t] = std::move(ids);
    }
    for (SupervoxelId id = 0; id < id_count_; ++id)
        if (spans_[id].first < 0)
            throw InvalidArgument("supervoxel ids are not contiguous: " + std::to_string(id) + " unused");
    for (std::size_t t = 0; t < labels_.size(); ++t) {
        std::map<SupervoxelId, std::vector<std::size_t>> regions;
        for (std::size_t p = 0; p < labels_[t].size(); ++p)
            regions[labels_[t][p]].push_back(p);
        for (const auto& [id, px] : regions)
            if (!is_connected(labels_[t], px))
                throw InvalidArgument("supervoxel " + std::to_string(id) + " is not 4-connected in frame " +
                                      std::to_string(t));
    }
}

std::vector<std::size_t> SupervoxelMap::pixels(int t, SupervoxelId id) const {
    std::vector<std::size_t> out;
    const auto& f = frame(t);
    for (std::size_t p = 0; p < f.size(); ++p)
        if (f[p] == id)
            out.push_back(p);
    return out;
}

SupervoxelMap extract_supervoxels(const FrameSequence& frames, const SupervoxelParams& params) {
    if (frames.size() < 1)
        throw InvalidArgument("extract_supervoxels: empty frame sequence");
    if (params.seed_grid < 1 || params.min_size < 0 || !(params.color_tol >= 0))
        throw InvalidArgument("extract_supervoxels: invalid parameters");

    std::vector<Raster<SupervoxelId>> out;
    out.reserve(static_cast<std::size_t>(frames.size()));
    SupervoxelId next_id = 0;
    std::vector<SupervoxelId> prev_ids; // local region -> global id, previous frame
    std::vector<std::array<double, 3>> prev_means;
    Raster<int> prev_local;

    for (int t = 0; t < frames.size(); ++t) {
        const RgbImage& img = frames[t];
        const Raster<int> local = segment_frame(img, params);
        const int regions = 1 + *std::max_element(local.data().begin(), local.data().end());
        std::vector<RegionStats> stats(static_cast<std::size_t>(regions));
        for (std::size_t p = 0; p < local.size(); ++p)
            stats[static_cast<std::size_t>(local[p])].add(img[p]);
        std::vector<std::array<double, 3>> means(static_cast<std::size_t>(regions));
        for (int r = 0; r < regions; ++r)
            means[static_cast<std::size_t>(r)] = stats[static_cast<std::size_t>(r)].mean();

        std::vector<SupervoxelId> ids(static_cast<std::size_t>(regions), 0);
        std::vector<bool> assigned(static_cast<std::size_t>(regions), false);
        if (t > 0) {
            std::map<std::pair<int, int>, std::size_t> overlap; // (current, previous) -> px
            for (std::size_t p = 0; p < local.size(); ++p)
                ++overlap[{local[p], prev_local[p]}];
            struct Link {
                std::size_t overlap;
                int cur, prev;
            };
            std::vector<Link> links;
            for (const auto& [key, count] : overlap) {
                const auto [cur, prev] = key;
                if (2 * count < stats[static_cast<std::size_t>(cur)].size)
                    continue;
                if (color_distance(means[static_cast<std::size_t>(cur)], prev_means[static_cast<std::size_t>(prev)]) >
                    params.color_tol)
                    continue;
                links.push_back({count, cur, prev});
            }
            std::sort(links.begin(), links.end(), [](const Link& a, const Link& b) {
                return std::tie(b.overlap, a.cur, a.prev) < std::tie(a.overlap, b.cur, b.prev);
            });
            std::vector<bool> prev_taken(prev_ids.size(), false);
            for (const Link& l : links) {
                if (assigned[static_cast<std::size_t>(l.cur)] || prev_taken[static_cast<std::size_t>(l.prev)])
                    continue;
                assigned[static_cast<std::size_t>(l.cur)] = true;
                prev_taken[static_cast<std::size_t>(l.prev)] = true;
                ids[static_cast<std::size_t>(l.cur)] = prev_ids[static_cast<std::size_t>(l.prev)];
            }
        }
        for (int r = 0; r < regions; ++r)
            if (!assigned[static_cast<std::size_t>(r)])
                ids[static_cast<std::size_t>(r)] = next_id++;

        Raster<SupervoxelId> lab(img.width(), img.height());
        for (std::size_t p = 0; p < local.size(); ++p)
            lab[p] = ids[static_cast<std::size_t>(local[p])];
        out.push_back(std::move(lab));
        prev_ids = std::move(ids);
        prev_means = std::move(means);
        prev_local = local;
    }
    return SupervoxelMap(std::move(out));
}

std::size_t symmetric_difference_size(const std::vector<SupervoxelId>& a, const std::vector<SupervoxelId>& b) {
    std::size_t common = 0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++common;
            ++i;
            ++j;
        }
    }
    return a.size() + b.size() - 2 * common;
}

std::vector<Shot> split_shots(const SupervoxelMap& svmap, double turnover_threshold, int churn_threshold) {
    std::vector<Shot> shots;
    int start = 0;
    for (int t = 0; t + 1 < svmap.frame_count(); ++t) {
        const auto& a = svmap.ids_in_frame(t);
        const auto& b = svmap.ids_in_frame(t + 1);
        const std::size_t diff = symmetric_difference_size(a, b);
        const std::size_t uni = (a.size() + b.size() + diff) / 2;
        if (uni > 0 && static_cast<double>(diff) / static_cast<double>(uni) > turnover_threshold) {
            shots.push_back({start, t + 1, {}});
            start = t + 1;
        }
    }
    shots.push_back({start, svmap.frame_count(), {}});
    for (auto& shot : shots)
        shot.candidate_keyframes = select_candidate_keyframes(shot, svmap, churn_threshold);
    return shots;
}

std::vector<int> select_candidate_keyframes(const Shot& shot, const SupervoxelMap& svmap, int churn_threshold) {
    if (shot.start < 0 || shot.end > svmap.frame_count() || shot.end <= shot.start)
        throw InvalidArgument("shot outside the supervoxel map");
    std::vector<int> out{shot.start};
    for (int t = shot.start + 1; t < shot.end; ++t)
        if (symmetric_difference_size(svmap.ids_in_frame(t), svmap.ids_in_frame(t - 1)) >
            static_cast<std::size_t>(churn_threshold))
            out.push_back(t);
    return out;
}

void write_supervoxels(const fs::path& dir, const SupervoxelMap& svmap) {
    if (svmap.id_count() > 65536)
        throw InvalidArgument("more than 65536 supervoxels cannot be stored as 16-bit P5");
    fs::create_directories(dir);
    for (int t = 0; t < svmap.frame_count(); ++t) {
        const auto& f = svmap.frame(t);
        Raster<std::uint16_t> img(f.width(), f.height());
        for (std::size_t p = 0; p < f.size(); ++p)
            img[p] = static_cast<std::uint16_t>(f[p]);
        char name[32];
        std::snprintf(name, sizeof name, "sv_%05d.pgm", t);
        write_pgm16(dir / name, img);
    }
    write_text_file(dir / "ids.txt", std::to_string(svmap.id_count()) + "\n");
}

SupervoxelMap read_supervoxels(const fs::path& dir) {
    const std::string count_text = read_text_file(dir / "ids.txt");
    long long declared = -1;
    try {
        declared = std::stoll(count_text);
    } catch (const std::exception&) {
        throw FormatError("ids.txt: not an integer");
    }
    std::vector<Raster<SupervoxelId>> frames;
    for (int t = 0;; ++t) {
        char name[32];
        std::snprintf(name, sizeof name, "sv_%05d.pgm", t);
        if (!fs::exists(dir / name))
            break;
        const auto img = read_pgm16(dir / name);
        Raster<SupervoxelId> lab(img.width(), img.height());
        for (std::size_t p = 0; p < img.size(); ++p)
            lab[p] = img[p];
        frames.push_back(std::move(lab));
    }
    if (frames.empty())
        throw FormatError("no supervoxel frames in " + dir.string());
    try {
        SupervoxelMap map(std::move(frames));
        if (static_cast<long long>(map.id_count()) != declared)
            throw FormatError("ids.txt declares " + std::to_string(declared) + " ids, maps contain " +
                              std::to_string(map.id_count()));
        return map;
    } catch (const InvalidArgument& e) {
        throw FormatError(dir.string() + ": " + e.what());
    }
}

} // namespace svseg
