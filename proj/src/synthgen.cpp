#include "svseg/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "svseg/builtin_suites.hpp"

namespace svseg {

namespace fs = std::filesystem;

namespace {

std::uint64_t mix(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t key(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0, std::uint64_t d = 0) noexcept {
    return mix(mix(mix(mix(a) ^ b) ^ c) ^ d);
}

/// Portable generator: splitmix64 stream with explicit distributions so
/// outputs do not depend on the standard library's distribution code.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() noexcept {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    int uniform_int(int lo, int hi) noexcept { // inclusive
        return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    double normal() noexcept {
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    double normal(double mean, double sd) noexcept { return mean + sd * normal(); }
    int poisson(double rate) noexcept {
        const double limit = std::exp(-rate);
        double p = uniform();
        int k = 0;
        while (p > limit) {
            p *= uniform();
            ++k;
        }
        return k;
    }

private:
    std::uint64_t state_;
};

double lattice_value(std::uint64_t seed, int shot, int channel, long long i, long long j) noexcept {
    const std::uint64_t h = key(seed, static_cast<std::uint64_t>(shot) * 8 + static_cast<std::uint64_t>(channel),
                                static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j));
    return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

double value_noise(std::uint64_t seed, int shot, int channel, double u, double v) noexcept {
    const double fu = std::floor(u), fv = std::floor(v);
    const double tu = u - fu, tv = v - fv;
    const auto i = static_cast<long long>(fu), j = static_cast<long long>(fv);
    const double su = tu * tu * (3 - 2 * tu), sv = tv * tv * (3 - 2 * tv);
    const double a = lattice_value(seed, shot, channel, i, j), b = lattice_value(seed, shot, channel, i + 1, j);
    const double c = lattice_value(seed, shot, channel, i, j + 1), d = lattice_value(seed, shot, channel, i + 1, j + 1);
    return (a * (1 - su) + b * su) * (1 - sv) + (c * (1 - su) + d * su) * sv;
}

std::uint8_t to_byte(double v) noexcept { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

struct Placement {
    double cx, cy, hw, hh;
};

Placement place(const Actor& a, int t, int shot, int width, std::uint64_t seed, std::size_t index) {
    const double te = t + 13.0 * shot;
    double cx = a.motion.x, cy = a.motion.y;
    if (a.motion.kind == MotionKind::Linear) {
        cx += a.motion.vx * te;
        cy += a.motion.vy * te;
    } else {
        const double w = 2.0 * std::numbers::pi / a.motion.period;
        cx += a.motion.amp_x * std::sin(w * te + a.motion.phase);
        cy += a.motion.amp_y * std::sin(w * te + a.motion.phase + 0.5 * std::numbers::pi);
    }
    if (shot % 2 == 1)
        cx = (width - 1) - cx;
    Placement p{cx, cy, a.half_w, a.half_h};
    if (a.pose_jitter > 0.0) {
        Rng rng(key(seed, 0x706f7365, index, static_cast<std::uint64_t>(t)));
        p.hw = std::max(1.0, p.hw + rng.normal(0.0, a.pose_jitter));
        p.hh = std::max(1.0, p.hh + rng.normal(0.0, a.pose_jitter));
        p.cx += rng.normal(0.0, 0.5 * a.pose_jitter);
        p.cy += rng.normal(0.0, 0.5 * a.pose_jitter);
    }
    return p;
}

bool inside(const Actor& a, const Placement& p, int x, int y) noexcept {
    const double dx = x - p.cx, dy = y - p.cy;
    if (a.shape == Shape::Ellipse)
        return (dx * dx) / (p.hw * p.hw) + (dy * dy) / (p.hh * p.hh) <= 1.0;
    const double ax = std::abs(dx), ay = std::abs(dy);
    if (ax > p.hw || ay > p.hh)
        return false;
    const double r = 0.4 * std::min(p.hw, p.hh);
    const double ex = ax - (p.hw - r), ey = ay - (p.hh - r);
    if (ex > 0.0 && ey > 0.0)
        return ex * ex + ey * ey <= r * r;
    return true;
}

int shot_of(const std::vector<int>& cuts, int t) {
    int s = 0;
    for (int c : cuts)
        if (t >= c)
            ++s;
    return s;
}

} // namespace

SyntheticVideo generate_video(const SceneSpec& spec) {
    if (spec.width < 8 || spec.height < 8 || spec.frames < 2)
        throw InvalidArgument("scene needs at least 2 frames of 8x8");
    for (const auto& a : spec.actors)
        if (a.half_w <= 0 || a.half_h <= 0 || 2 * a.half_w > spec.width || 2 * a.half_h > spec.height)
            throw InvalidArgument("actor does not fit the frame");
    std::vector<int> cuts = spec.cut_frames;
    std::sort(cuts.begin(), cuts.end());
    for (int c : cuts)
        if (c <= 0 || c >= spec.frames)
            throw InvalidArgument("cut frame outside (0, frames)");

    const Background& bg = spec.background;
    SyntheticVideo out;
    out.cut_frames = cuts;
    std::vector<RgbImage> frames;
    for (int t = 0; t < spec.frames; ++t) {
        const int shot = shot_of(cuts, t);
        double base[3] = {double(bg.base.r), double(bg.base.g), double(bg.base.b)};
        if (shot > 0) {
            Rng shift(key(spec.seed, 0x73686f74, static_cast<std::uint64_t>(shot)));
            for (double& c : base)
                c = std::clamp(c + shift.uniform(-60.0, 60.0), 20.0, 235.0);
        }
        RgbImage img(spec.width, spec.height);
        Rng sensor(key(spec.seed, 0x73656e73, static_cast<std::uint64_t>(t)));
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x) {
                const double u = (x + bg.pan_x * t) / bg.texture_scale;
                const double v = (y + bg.pan_y * t) / bg.texture_scale;
                double c[3];
                for (int ch = 0; ch < 3; ++ch)
                    c[ch] = base[ch] + bg.texture_amplitude * value_noise(spec.seed, shot, ch, u, v) +
                            sensor.normal(0.0, bg.sensor_noise);
                img(x, y) = Rgb{to_byte(c[0]), to_byte(c[1]), to_byte(c[2])};
            }

        auto draw = [&](const Actor& a, const Placement& p, std::uint64_t salt) {
            Rng shade(key(spec.seed, salt, static_cast<std::uint64_t>(t)));
            BinaryMask m(spec.width, spec.height, 0);
            const int x0 = std::max(0, static_cast<int>(std::floor(p.cx - p.hw)));
            const int x1 = std::min(spec.width - 1, static_cast<int>(std::ceil(p.cx + p.hw)));
            const int y0 = std::max(0, static_cast<int>(std::floor(p.cy - p.hh)));
            const int y1 = std::min(spec.height - 1, static_cast<int>(std::ceil(p.cy + p.hh)));
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    if (!inside(a, p, x, y))
                        continue;
                    const Rgb& col = y < p.cy ? a.upper : a.lower;
                    img(x, y) = Rgb{to_byte(col.r + shade.normal(0.0, a.color_noise)),
                                    to_byte(col.g + shade.normal(0.0, a.color_noise)),
                                    to_byte(col.b + shade.normal(0.0, a.color_noise))};
                    m(x, y) = 1;
                }
            return m;
        };

        std::vector<BinaryMask> prop_masks;
        for (std::size_t i = 0; i < spec.props.size(); ++i) {
            BinaryMask m =
                draw(spec.props[i], place(spec.props[i], t, shot, spec.width, spec.seed, 1000 + i), 0x70000 + i);
            for (auto& earlier : prop_masks)
                for (std::size_t p = 0; p < m.size(); ++p)
                    if (m[p])
                        earlier[p] = 0;
            prop_masks.push_back(std::move(m));
        }
        std::vector<BinaryMask> masks;
        for (std::size_t i = 0; i < spec.actors.size(); ++i) {
            BinaryMask m = draw(spec.actors[i], place(spec.actors[i], t, shot, spec.width, spec.seed, i), 0x60000 + i);
            for (auto& earlier : masks) // later actors occlude earlier ones
                for (std::size_t p = 0; p < m.size(); ++p)
                    if (m[p])
                        earlier[p] = 0;
            masks.push_back(std::move(m));
        }
        BinaryMask gt(spec.width, spec.height, 0);
        for (const auto& m : masks)
            for (std::size_t p = 0; p < m.size(); ++p)
                gt[p] |= m[p];
        for (auto& m : prop_masks)
            for (std::size_t p = 0; p < m.size(); ++p)
                if (gt[p])
                    m[p] = 0;
        out.gt_pixel_counts.push_back(count_set(gt));
        out.ground_truth.push_back(std::move(gt));
        out.actor_masks.push_back(std::move(masks));
        out.prop_masks.push_back(std::move(prop_masks));
        frames.push_back(std::move(img));
    }
    out.frames = FrameSequence(std::move(frames));
    return out;
}

namespace {

Box jittered_box(const BinaryMask& m, const DetectorNoise& noise, double jx, double jy, double sx, double sy) {
    const int w = m.width(), h = m.height();
    const Box b = tight_box(m);
    const double cx = 0.5 * (b.x0 + b.x1) + noise.center_sigma * jx;
    const double cy = 0.5 * (b.y0 + b.y1) + noise.center_sigma * jy;
    const double bw = (b.x1 - b.x0 + 1) * std::exp(noise.scale_sigma * sx);
    const double bh = (b.y1 - b.y0 + 1) * std::exp(noise.scale_sigma * sy);
    Box jb;
    jb.x0 = std::clamp(static_cast<int>(std::lround(cx - 0.5 * (bw - 1))), 0, w - 1);
    jb.x1 = std::clamp(static_cast<int>(std::lround(cx + 0.5 * (bw - 1))), 0, w - 1);
    jb.y0 = std::clamp(static_cast<int>(std::lround(cy - 0.5 * (bh - 1))), 0, h - 1);
    jb.y1 = std::clamp(static_cast<int>(std::lround(cy + 0.5 * (bh - 1))), 0, h - 1);
    if (jb.x1 < jb.x0)
        std::swap(jb.x0, jb.x1);
    if (jb.y1 < jb.y0)
        std::swap(jb.y0, jb.y1);
    return jb;
}

} // namespace

std::vector<DetectionBox> simulate_detections(const ActorMasks& actor_masks, const DetectorNoise& noise,
                                              std::uint64_t seed, const ActorMasks* props) {
    if (noise.miss_rate < 0 || noise.miss_rate > 1 || noise.false_positive_rate < 0 ||
        noise.false_positive_rate > 1 || noise.prop_rate < 0 || noise.prop_rate > 1)
        throw InvalidArgument("detector rates must lie in [0,1]");
    if (props && props->frames.size() != actor_masks.frames.size())
        throw InvalidArgument("prop masks do not cover the video");
    std::vector<DetectionBox> out;
    const int w = actor_masks.width, h = actor_masks.height;
    for (std::size_t t = 0; t < actor_masks.frames.size(); ++t) {
        Rng rng(key(seed, 0x64657465, t));
        for (const BinaryMask& m : actor_masks.frames[t]) {
            const double miss = rng.uniform();
            const double jx = rng.normal(), jy = rng.normal(), sx = rng.normal(), sy = rng.normal();
            const double score = rng.normal(noise.true_score_mean, noise.true_score_sd);
            if (count_set(m) == 0 || miss < noise.miss_rate)
                continue;
            out.push_back({static_cast<int>(t), score, jittered_box(m, noise, jx, jy, sx, sy)});
        }
        const int false_boxes = rng.poisson(noise.false_positive_rate);
        for (int k = 0; k < false_boxes; ++k) {
            const int bw = rng.uniform_int(6, std::max(6, w / 3));
            const int bh = rng.uniform_int(6, std::max(6, h / 2));
            Box fb;
            fb.x0 = rng.uniform_int(0, std::max(0, w - bw));
            fb.y0 = rng.uniform_int(0, std::max(0, h - bh));
            fb.x1 = std::min(w - 1, fb.x0 + bw - 1);
            fb.y1 = std::min(h - 1, fb.y0 + bh - 1);
            out.push_back({static_cast<int>(t), rng.normal(noise.false_score_mean, noise.false_score_sd), fb});
        }
        if (!props)
            continue;
        Rng prop_rng(key(seed, 0x70726f64, t));
        for (const BinaryMask& m : props->frames[t]) {
            const double fire = prop_rng.uniform();
            const double jx = prop_rng.normal(), jy = prop_rng.normal(), sx = prop_rng.normal(), sy = prop_rng.normal();
            const double score = prop_rng.normal(noise.prop_score_mean, noise.prop_score_sd);
            if (count_set(m) == 0 || fire >= noise.prop_rate)
                continue;
            out.push_back({static_cast<int>(t), score, jittered_box(m, noise, jx, jy, sx, sy)});
        }
    }
    return out;
}

BinaryMask dilate(const BinaryMask& m, int radius) {
    BinaryMask cur = m;
    for (int r = 0; r < radius; ++r) {
        BinaryMask next = cur;
        for (int y = 0; y < m.height(); ++y)
            for (int x = 0; x < m.width(); ++x)
                if (!cur(x, y) && ((x > 0 && cur(x - 1, y)) || (x + 1 < m.width() && cur(x + 1, y)) ||
                                   (y > 0 && cur(x, y - 1)) || (y + 1 < m.height() && cur(x, y + 1))))
                    next(x, y) = 1;
        cur = std::move(next);
    }
    return cur;
}

BinaryMask erode(const BinaryMask& m, int radius) {
    BinaryMask cur = m;
    for (int r = 0; r < radius; ++r) {
        BinaryMask next = cur;
        for (int y = 0; y < m.height(); ++y)
            for (int x = 0; x < m.width(); ++x)
                if (cur(x, y) && ((x > 0 && !cur(x - 1, y)) || (x + 1 < m.width() && !cur(x + 1, y)) ||
                                  (y > 0 && !cur(x, y - 1)) || (y + 1 < m.height() && !cur(x, y + 1))))
                    next(x, y) = 0;
        cur = std::move(next);
    }
    return cur;
}

namespace {

/// Flip `flips` pixels on the mask boundary band (inside or just outside).
BinaryMask jitter_boundary(const BinaryMask& m, std::size_t flips, Rng& rng) {
    const BinaryMask outer = dilate(m, 1), inner = erode(m, 1);
    std::vector<std::size_t> band;
    for (std::size_t p = 0; p < m.size(); ++p)
        if (outer[p] && !inner[p])
            band.push_back(p);
    BinaryMask out = m;
    for (std::size_t i = 0; i < flips && i < band.size(); ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next() % (band.size() - i));
        std::swap(band[i], band[j]);
        out[band[i]] ^= 1;
    }
    return out;
}

BinaryMask box_mask(int w, int h, const Box& b) {
    BinaryMask m(w, h, 0);
    for (int y = b.y0; y <= b.y1; ++y)
        for (int x = b.x0; x <= b.x1; ++x)
            m(x, y) = 1;
    return m;
}

BinaryMask ellipse_mask(int w, int h, double cx, double cy, double rx, double ry) {
    BinaryMask m(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double dx = (x - cx) / rx, dy = (y - cy) / ry;
            if (dx * dx + dy * dy <= 1.0)
                m(x, y) = 1;
        }
    return m;
}

} // namespace

ProposalSimulation simulate_proposals(const ActorMasks& actor_masks, const ProposalParams& params,
                                      std::uint64_t seed, const ActorMasks* objects) {
    if (params.per_frame < 1 || params.perturb_levels < 0)
        throw InvalidArgument("invalid proposal parameters");
    if (objects && objects->frames.size() != actor_masks.frames.size())
        throw InvalidArgument("object masks do not cover the video");
    ProposalSimulation sim;
    const int w = actor_masks.width, h = actor_masks.height;
    for (std::size_t t = 0; t < actor_masks.frames.size(); ++t) {
        Rng rng(key(seed, 0x70726f70, t));
        const auto& actors = actor_masks.frames[t];
        std::vector<BinaryMask> props;
        std::vector<double> best;
        auto add = [&](BinaryMask m) {
            if (count_set(m) > 0 && static_cast<int>(props.size()) < params.per_frame)
                props.push_back(std::move(m));
        };
        // Graded perturbations plus same-box and partial variants of one silhouette.
        auto perturb = [&](const BinaryMask& gt) {
            const std::size_t area = count_set(gt);
            if (params.perturb_levels == 0) {
                add(gt);
            } else {
                const Box b = tight_box(gt);
                for (int level = 1; level <= params.perturb_levels; ++level) {
                    add(jitter_boundary(gt, area * static_cast<std::size_t>(level) / 20, rng));
                    add(dilate(gt, level));
                    add(erode(gt, level));
                }
                // Same tight box as the silhouette, different content.
                const BinaryMask filled = box_mask(w, h, b);
                add(filled);
                BinaryMask complement = filled;
                for (std::size_t p = 0; p < complement.size(); ++p)
                    complement[p] &= static_cast<std::uint8_t>(!gt[p]);
                add(complement);
                // Partial silhouettes.
                BinaryMask top = gt, bottom = gt;
                const int mid = (b.y0 + b.y1) / 2;
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x)
                        (y <= mid ? bottom : top)(x, y) = 0;
                add(top);
                add(bottom);
            }
        };
        for (const BinaryMask& gt : actors) {
            if (count_set(gt) == 0) {
                best.push_back(0.0);
                continue;
            }
            const std::size_t first = props.size();
            perturb(gt);
            double b_iou = 0.0;
            for (std::size_t i = first; i < props.size(); ++i)
                b_iou = std::max(b_iou, compute_iou(props[i], gt));
            best.push_back(b_iou);
        }
        if (objects)
            for (const BinaryMask& m : objects->frames[t])
                if (count_set(m) > 0)
                    perturb(m);
        if (params.distractors) {
            for (int attempt = 0; static_cast<int>(props.size()) < params.per_frame && attempt < 4 * params.per_frame;
                 ++attempt) {
                const double rx = rng.uniform(2.5, w / 4.0), ry = rng.uniform(2.5, h / 3.0);
                const double cx = rng.uniform(0.0, w - 1.0), cy = rng.uniform(0.0, h - 1.0);
                BinaryMask m = ellipse_mask(w, h, cx, cy, rx, ry);
                if (rng.uniform() < 0.3 && !actors.empty()) {
                    // An object fused with a chunk of background.
                    const BinaryMask& gt = actors[static_cast<std::size_t>(rng.next() % actors.size())];
                    if (count_set(gt) > 0)
                        for (std::size_t p = 0; p < m.size(); ++p)
                            m[p] |= gt[p];
                }
                add(std::move(m));
            }
        }
        for (std::size_t i = props.size(); i > 1; --i)
            std::swap(props[i - 1], props[static_cast<std::size_t>(rng.next() % i)]);
        for (auto& m : props)
            sim.proposals[static_cast<int>(t)].emplace_back(static_cast<int>(t), std::move(m));
        sim.best_iou.push_back(std::move(best));
    }
    return sim;
}

namespace {

using nlohmann::json;

Rgb parse_rgb(const json& j) {
    if (!j.is_array() || j.size() != 3)
        throw FormatError("colour must be [r,g,b]");
    return Rgb{j[0].get<std::uint8_t>(), j[1].get<std::uint8_t>(), j[2].get<std::uint8_t>()};
}

Actor parse_actor(const json& j) {
    Actor a;
    const std::string shape = j.value("shape", "ellipse");
    if (shape == "ellipse")
        a.shape = Shape::Ellipse;
    else if (shape == "rounded-rect")
        a.shape = Shape::RoundedRect;
    else
        throw FormatError("unknown shape '" + shape + "'");
    a.half_w = j.at("half_w").get<double>();
    a.half_h = j.at("half_h").get<double>();
    if (j.contains("upper"))
        a.upper = parse_rgb(j["upper"]);
    if (j.contains("lower"))
        a.lower = parse_rgb(j["lower"]);
    a.color_noise = j.value("color_noise", a.color_noise);
    a.pose_jitter = j.value("pose_jitter", a.pose_jitter);
    const json& m = j.at("motion");
    const std::string kind = m.value("kind", "linear");
    if (kind == "linear")
        a.motion.kind = MotionKind::Linear;
    else if (kind == "sinusoidal")
        a.motion.kind = MotionKind::Sinusoidal;
    else
        throw FormatError("unknown motion '" + kind + "'");
    a.motion.x = m.value("x", 0.0);
    a.motion.y = m.value("y", 0.0);
    a.motion.vx = m.value("vx", 0.0);
    a.motion.vy = m.value("vy", 0.0);
    a.motion.amp_x = m.value("amp_x", 0.0);
    a.motion.amp_y = m.value("amp_y", 0.0);
    a.motion.period = m.value("period", 20.0);
    a.motion.phase = m.value("phase", 0.0);
    return a;
}

} // namespace

SuiteSpec parse_suite(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("suite json: ") + e.what());
    }
    try {
        SuiteSpec s;
        s.name = j.at("name").get<std::string>();
        const int width = j.at("width").get<int>(), height = j.at("height").get<int>();
        const int frames = j.at("frames").get<int>();
        const json& sv = j.at("supervoxel");
        s.supervoxel = {sv.at("seed_grid").get<int>(), sv.at("color_tol").get<double>(), sv.at("min_size").get<int>()};
        const json& d = j.at("detector");
        s.detector.center_sigma = d.value("center_sigma", s.detector.center_sigma);
        s.detector.scale_sigma = d.value("scale_sigma", s.detector.scale_sigma);
        s.detector.miss_rate = d.value("miss_rate", s.detector.miss_rate);
        s.detector.false_positive_rate = d.value("false_positive_rate", s.detector.false_positive_rate);
        s.detector.true_score_mean = d.value("true_score_mean", s.detector.true_score_mean);
        s.detector.true_score_sd = d.value("true_score_sd", s.detector.true_score_sd);
        s.detector.false_score_mean = d.value("false_score_mean", s.detector.false_score_mean);
        s.detector.false_score_sd = d.value("false_score_sd", s.detector.false_score_sd);
        s.detector.prop_rate = d.value("prop_rate", s.detector.prop_rate);
        s.detector.prop_score_mean = d.value("prop_score_mean", s.detector.prop_score_mean);
        s.detector.prop_score_sd = d.value("prop_score_sd", s.detector.prop_score_sd);
        const json& p = j.at("proposals");
        s.proposals.per_frame = p.value("per_frame", s.proposals.per_frame);
        s.proposals.perturb_levels = p.value("perturb_levels", s.proposals.perturb_levels);
        s.proposals.distractors = p.value("distractors", s.proposals.distractors);
        for (const json& v : j.at("videos")) {
            SceneSpec scene;
            scene.name = v.at("name").get<std::string>();
            scene.width = width;
            scene.height = height;
            scene.frames = frames;
            scene.seed = v.at("seed").get<std::uint64_t>();
            const json& b = v.at("background");
            scene.background.base = parse_rgb(b.at("base"));
            scene.background.texture_amplitude = b.value("texture_amplitude", scene.background.texture_amplitude);
            scene.background.texture_scale = b.value("texture_scale", scene.background.texture_scale);
            scene.background.sensor_noise = b.value("sensor_noise", scene.background.sensor_noise);
            scene.background.pan_x = b.value("pan_x", 0.0);
            scene.background.pan_y = b.value("pan_y", 0.0);
            scene.cut_frames = v.value("cuts", std::vector<int>{});
            for (const json& a : v.value("actors", json::array()))
                scene.actors.push_back(parse_actor(a));
            for (const json& a : v.value("props", json::array()))
                scene.props.push_back(parse_actor(a));
            const std::string split = v.at("split").get<std::string>();
            if (split != "train" && split != "eval")
                throw FormatError("video split must be train or eval");
            s.videos.emplace_back(std::move(scene), split);
        }
        return s;
    } catch (const json::exception& e) {
        throw FormatError(std::string("suite json: ") + e.what());
    }
}

std::string builtin_suite_json(const std::string& name) {
    if (name == "suite-v1")
        return std::string(kSuiteV1Json);
    throw InvalidArgument("unknown built-in suite '" + name + "'");
}

SuiteSpec load_suite(const std::string& name_or_path) {
    if (name_or_path == "suite-v1")
        return parse_suite(builtin_suite_json(name_or_path));
    return parse_suite(read_text_file(name_or_path));
}

fs::path write_suite(const SuiteSpec& suite, const fs::path& out) {
    fs::create_directories(out);
    std::string manifest;
    for (std::size_t vi = 0; vi < suite.videos.size(); ++vi) {
        const auto& [scene, split] = suite.videos[vi];
        const fs::path dir = out / scene.name;
        const SyntheticVideo video = generate_video(scene);
        write_frame_sequence(dir / "frames", video.frames);
        for (int t = 0; t < video.frames.size(); ++t) {
            char name[32];
            std::snprintf(name, sizeof name, "mask_%05d.pgm", t);
            write_mask(dir / "gt" / name, video.ground_truth[static_cast<std::size_t>(t)]);
        }
        write_supervoxels(dir / "supervoxels", extract_supervoxels(video.frames, suite.supervoxel));
        const ActorMasks actors{scene.width, scene.height, video.actor_masks};
        const ActorMasks objects{scene.width, scene.height, video.prop_masks};
        write_detections(dir / "detections.txt",
                         simulate_detections(actors, suite.detector, key(scene.seed, 0x444554), &objects));
        const ProposalSimulation props =
            simulate_proposals(actors, suite.proposals, key(scene.seed, 0x50524f50), &objects);
        write_proposals(dir / "proposals.txt", props.proposals);

        std::string meta = "name=" + scene.name + "\nsplit=" + split + "\nactors=" +
                           std::to_string(scene.actors.size()) + "\ncuts=";
        for (std::size_t i = 0; i < video.cut_frames.size(); ++i)
            meta += (i ? "," : "") + std::to_string(video.cut_frames[i]);
        meta += "\ngt_pixels=";
        for (std::size_t t = 0; t < video.gt_pixel_counts.size(); ++t)
            meta += (t ? "," : "") + std::to_string(video.gt_pixel_counts[t]);
        double worst_best = 1.0;
        for (std::size_t t = 0; t < props.best_iou.size(); ++t)
            for (std::size_t a = 0; a < props.best_iou[t].size(); ++a)
                if (count_set(video.actor_masks[t][a]) > 0)
                    worst_best = std::min(worst_best, props.best_iou[t][a]);
        char buf[64];
        std::snprintf(buf, sizeof buf, "\nmin_best_proposal_iou=%.6f\n", worst_best);
        meta += buf;
        write_text_file(dir / "meta.txt", meta);

        manifest += scene.name + '\t' + split + '\t' + scene.name + "/frames\t" + scene.name + "/supervoxels\t" +
                    scene.name + "/detections.txt\t" + scene.name + "/proposals.txt\t" + scene.name + "/gt\n";
    }
    const fs::path manifest_path = out / "manifest.txt";
    write_text_file(manifest_path, manifest);
    return manifest_path;
}

} // namespace svseg
