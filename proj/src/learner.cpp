#include "svseg/learner.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

#include "svseg/color.hpp"
#include "svseg/videoio.hpp"

namespace svseg {

namespace {

constexpr std::size_t kBias = kPixelFeatureDim - 1;

double softplus(double x) noexcept { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

/// P(human) for a standardized feature vector.
double human_prob(const std::array<PixelFeature, kClasses>& w, const PixelFeature& f) noexcept {
    double d = 0.0; // logit_bg - logit_human
    for (std::size_t k = 0; k < kPixelFeatureDim; ++k)
        d += (w[0][k] - w[1][k]) * f[k];
    return 1.0 / (1.0 + std::exp(d));
}

double cross_entropy(const std::array<PixelFeature, kClasses>& w, const PixelFeature& f, bool human) noexcept {
    double d = 0.0;
    for (std::size_t k = 0; k < kPixelFeatureDim; ++k)
        d += (w[0][k] - w[1][k]) * f[k];
    return human ? softplus(d) : softplus(-d);
}

std::uint64_t mix(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Partial Fisher-Yates: first `k` entries become a uniform sample.
void sample_prefix(std::vector<std::size_t>& items, std::size_t k, std::mt19937_64& rng) {
    for (std::size_t i = 0; i < k && i + 1 < items.size(); ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (items.size() - i));
        std::swap(items[i], items[j]);
    }
}

} // namespace

std::vector<PixelFeature> pixel_features(const RgbImage& frame) {
    const int w = frame.width(), h = frame.height();
    std::vector<PixelFeature> out(frame.size());
    auto at = [&](int x, int y) -> const Rgb& {
        return frame(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1));
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            PixelFeature& f = out[frame.index(x, y)];
            const Rgb& px = frame(x, y);
            f[0] = px.r / 255.0;
            f[1] = px.g / 255.0;
            f[2] = px.b / 255.0;
            const auto lab = rgb_to_lab(px);
            f[3] = lab[0] / 100.0;
            f[4] = lab[1] / 100.0;
            f[5] = lab[2] / 100.0;
            f[6] = w > 1 ? static_cast<double>(x) / (w - 1) : 0.0;
            f[7] = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
            double s[3] = {0, 0, 0}, s2[3] = {0, 0, 0};
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const Rgb& q = at(x + dx, y + dy);
                    const double v[3] = {q.r / 255.0, q.g / 255.0, q.b / 255.0};
                    for (int c = 0; c < 3; ++c) {
                        s[c] += v[c];
                        s2[c] += v[c] * v[c];
                    }
                }
            for (int c = 0; c < 3; ++c) {
                const double mean = s[c] / 9.0;
                f[8 + static_cast<std::size_t>(c)] = mean;
                f[11 + static_cast<std::size_t>(c)] = std::sqrt(std::max(0.0, s2[c] / 9.0 - mean * mean));
            }
            const double gx = 0.5 * (luma(at(x + 1, y)) - luma(at(x - 1, y))) / 255.0;
            const double gy = 0.5 * (luma(at(x, y + 1)) - luma(at(x, y - 1))) / 255.0;
            const double mag = std::hypot(gx, gy);
            f[14] = mag;
            f[15] = mag > 0.0 ? gy / mag : 0.0;
            f[16] = mag > 0.0 ? gx / mag : 0.0;
            f[17] = (std::max({px.r, px.g, px.b}) - std::min({px.r, px.g, px.b})) / 255.0;
            f[kBias] = 1.0;
        }
    return out;
}

Standardizer Standardizer::identity() {
    Standardizer s;
    s.mean.fill(0.0);
    s.scale.fill(1.0);
    return s;
}

Standardizer Standardizer::fit(const std::vector<const std::vector<PixelFeature>*>& features) {
    Standardizer s = identity();
    PixelFeature sum{}, sum2{};
    double n = 0.0;
    for (const auto* fs : features)
        for (const PixelFeature& f : *fs) {
            for (std::size_t k = 0; k < kBias; ++k) {
                sum[k] += f[k];
                sum2[k] += f[k] * f[k];
            }
            n += 1.0;
        }
    if (n == 0.0)
        return s;
    for (std::size_t k = 0; k < kBias; ++k) {
        const double mean = sum[k] / n;
        const double var = std::max(0.0, sum2[k] / n - mean * mean);
        s.mean[k] = mean;
        s.scale[k] = var > 1e-12 ? 1.0 / std::sqrt(var) : 1.0;
    }
    return s;
}

void Standardizer::apply(std::vector<PixelFeature>& features) const {
    for (PixelFeature& f : features)
        for (std::size_t k = 0; k < kBias; ++k)
            f[k] = (f[k] - mean[k]) * scale[k];
}

LossAndGradient weighted_loss(const std::array<PixelFeature, kClasses>& weights,
                              const std::vector<const std::vector<PixelFeature>*>& features,
                              const std::vector<const BinaryMask*>& targets, const std::vector<double>& omegas) {
    LossAndGradient out;
    const std::size_t n = features.size();
    if (n == 0 || targets.size() != n || omegas.size() != n)
        throw InvalidArgument("weighted_loss: inconsistent corpus");
    for (std::size_t i = 0; i < n; ++i) {
        const auto& fs = *features[i];
        const BinaryMask& y = *targets[i];
        if (fs.size() != y.size())
            throw InvalidArgument("weighted_loss: target size mismatch");
        const double scale = omegas[i] / (static_cast<double>(n) * static_cast<double>(fs.size()));
        for (std::size_t j = 0; j < fs.size(); ++j) {
            const bool human = y[j] != 0;
            out.loss += scale * cross_entropy(weights, fs[j], human);
            const double r1 = human_prob(weights, fs[j]) - (human ? 1.0 : 0.0);
            for (std::size_t k = 0; k < kPixelFeatureDim; ++k) {
                out.gradient[1][k] += scale * r1 * fs[j][k];
                out.gradient[0][k] -= scale * r1 * fs[j][k];
            }
        }
    }
    return out;
}

PixelModel train(const std::vector<WeightedSample>& corpus, const TrainOptions& options) {
    if (corpus.empty())
        throw InvalidArgument("train: empty corpus");
    if (options.epochs < 1 || options.batch_size < 1 || options.decay_every < 1 || options.max_pixels < 1)
        throw InvalidArgument("train: invalid options");
    double omega_sum = 0.0;
    for (const auto& s : corpus) {
        if (!s.frame || !s.target.same_shape(*s.frame))
            throw InvalidArgument("train: sample mask does not match its frame");
        if (!(s.omega >= 0.0 && s.omega <= 1.0))
            throw InvalidArgument("train: sample weight outside [0,1]");
        omega_sum += s.omega;
    }
    if (omega_sum <= 0.0)
        throw InvalidArgument("train: no effective training signal (all sample weights are zero)");

    // Zero-weight samples take no part at all, not even in the standardization.
    std::vector<std::vector<PixelFeature>> feats(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i)
        if (corpus[i].omega > 0.0)
            feats[i] = pixel_features(*corpus[i].frame);

    PixelModel model;
    if (options.frozen_standardizer) {
        model.standardizer = *options.frozen_standardizer;
    } else {
        std::vector<const std::vector<PixelFeature>*> ptrs;
        for (const auto& f : feats)
            if (!f.empty())
                ptrs.push_back(&f);
        model.standardizer = Standardizer::fit(ptrs);
    }
    for (auto& f : feats)
        model.standardizer.apply(f);

    // Label-partitioned pixel indices for stratified subsampling.
    std::vector<std::array<std::vector<std::size_t>, 2>> by_label(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i)
        for (std::size_t p = 0; p < corpus[i].target.size(); ++p)
            by_label[i][corpus[i].target[p] ? 1 : 0].push_back(p);

    std::mt19937_64 order_rng(mix(options.seed));
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> chosen;

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        const double lr = options.lr0 * std::pow(options.decay_factor, epoch / options.decay_every);
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[static_cast<std::size_t>(order_rng() % i)]);
        double epoch_loss = 0.0, epoch_weight = 0.0;
        // ceil(N / batch) batches of near-equal size, so no step rests on a small remainder.
        const std::size_t batches = (order.size() + options.batch_size - 1) / options.batch_size;
        for (std::size_t b = 0; b < batches; ++b) {
            const std::size_t b0 = b * order.size() / batches, b1 = (b + 1) * order.size() / batches;
            std::array<PixelFeature, kClasses> grad{};
            double batch_weight = 0.0;
            for (std::size_t bi = b0; bi < b1; ++bi) {
                const std::size_t i = order[bi];
                const double omega = corpus[i].omega;
                if (omega == 0.0)
                    continue;
                const auto& fs = feats[i];
                const BinaryMask& y = corpus[i].target;
                chosen.clear();
                if (fs.size() <= options.max_pixels) {
                    chosen.resize(fs.size());
                    std::iota(chosen.begin(), chosen.end(), 0);
                } else {
                    // Keyed by sample content, not corpus position, so a sample draws the
                    // same pixels wherever it sits in the corpus.
                    auto neg = by_label[i][0], pos = by_label[i][1];
                    std::mt19937_64 rng(mix(options.seed ^ mix(static_cast<std::uint64_t>(epoch) << 32 ^
                                                               (pos.size() * 1000003u + neg.size()))));
                    const std::size_t k_pos = static_cast<std::size_t>(std::llround(
                        static_cast<double>(options.max_pixels) * static_cast<double>(pos.size()) /
                        static_cast<double>(fs.size())));
                    const std::size_t k_neg = options.max_pixels - k_pos;
                    sample_prefix(pos, k_pos, rng);
                    sample_prefix(neg, k_neg, rng);
                    chosen.insert(chosen.end(), pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(k_pos));
                    chosen.insert(chosen.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(k_neg));
                    std::sort(chosen.begin(), chosen.end());
                }
                const double scale = omega / static_cast<double>(chosen.size());
                double sample_loss = 0.0;
                for (std::size_t j : chosen) {
                    const bool human = y[j] != 0;
                    sample_loss += cross_entropy(model.weights, fs[j], human);
                    const double r1 = human_prob(model.weights, fs[j]) - (human ? 1.0 : 0.0);
                    for (std::size_t k = 0; k < kPixelFeatureDim; ++k) {
                        grad[1][k] += scale * r1 * fs[j][k];
                        grad[0][k] -= scale * r1 * fs[j][k];
                    }
                }
                epoch_loss += omega * sample_loss / static_cast<double>(chosen.size());
                batch_weight += omega;
            }
            if (batch_weight == 0.0)
                continue;
            epoch_weight += batch_weight;
            const double step = lr / batch_weight;
            for (std::size_t c = 0; c < kClasses; ++c)
                for (std::size_t k = 0; k < kPixelFeatureDim; ++k)
                    model.weights[c][k] -= step * grad[c][k];
        }
        model.loss_log.push_back(epoch_weight > 0.0 ? epoch_loss / epoch_weight : 0.0);
    }
    return model;
}

ConfidenceMap predict_confidence(const PixelModel& model, const RgbImage& frame) {
    auto feats = pixel_features(frame);
    model.standardizer.apply(feats);
    ConfidenceMap out(frame.width(), frame.height());
    for (std::size_t p = 0; p < feats.size(); ++p)
        out[p] = human_prob(model.weights, feats[p]);
    return out;
}

double gradient_check(const PixelModel& model, const WeightedSample& sample) {
    if (!sample.frame || !sample.target.same_shape(*sample.frame))
        throw InvalidArgument("gradient_check: sample mask does not match its frame");
    auto feats = pixel_features(*sample.frame);
    model.standardizer.apply(feats);
    const std::vector<const std::vector<PixelFeature>*> fptr{&feats};
    const std::vector<const BinaryMask*> tptr{&sample.target};
    const std::vector<double> omegas{sample.omega};
    const auto analytic = weighted_loss(model.weights, fptr, tptr, omegas).gradient;
    constexpr double h = 1e-5;
    double worst = 0.0;
    for (std::size_t c = 0; c < kClasses; ++c)
        for (std::size_t k = 0; k < kPixelFeatureDim; ++k) {
            auto plus = model.weights, minus = model.weights;
            plus[c][k] += h;
            minus[c][k] -= h;
            const double numeric = (weighted_loss(plus, fptr, tptr, omegas).loss -
                                    weighted_loss(minus, fptr, tptr, omegas).loss) /
                                   (2.0 * h);
            const double a = analytic[c][k];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-7});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    return worst;
}

namespace {

constexpr char kMagic[4] = {'P', 'X', 'M', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct Reader {
    const std::string& bytes;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (bytes.size() - pos < n)
            throw FormatError("model file truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + static_cast<std::size_t>(i)])) << (8 * i);
        pos += 4;
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + static_cast<std::size_t>(i)])) << (8 * i);
        pos += 8;
        return std::bit_cast<double>(v);
    }
};

} // namespace

std::string serialize_model(const PixelModel& model) {
    std::string out(kMagic, kMagic + 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(kClasses));
    put_u32(out, static_cast<std::uint32_t>(kPixelFeatureDim));
    for (const auto& row : model.weights)
        for (double v : row)
            put_f64(out, v);
    for (double v : model.standardizer.mean)
        put_f64(out, v);
    for (double v : model.standardizer.scale)
        put_f64(out, v);
    put_u32(out, static_cast<std::uint32_t>(model.loss_log.size()));
    for (double v : model.loss_log)
        put_f64(out, v);
    return out;
}

PixelModel deserialize_model(const std::string& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError("not a PXM1 model");
    Reader r{bytes, 4};
    if (r.u32() != kVersion)
        throw FormatError("unsupported model version");
    if (r.u32() != kClasses || r.u32() != kPixelFeatureDim)
        throw FormatError("model dimensions do not match this build");
    PixelModel m;
    for (auto& row : m.weights)
        for (double& v : row)
            v = r.f64();
    for (double& v : m.standardizer.mean)
        v = r.f64();
    for (double& v : m.standardizer.scale)
        v = r.f64();
    const std::uint32_t n = r.u32();
    r.need(static_cast<std::size_t>(n) * 8);
    for (std::uint32_t i = 0; i < n; ++i)
        m.loss_log.push_back(r.f64());
    if (r.pos != bytes.size())
        throw FormatError("trailing bytes after model");
    for (const auto& row : m.weights)
        for (double v : row)
            if (!std::isfinite(v))
                throw FormatError("non-finite model weight");
    return m;
}

void save_model(const std::filesystem::path& path, const PixelModel& model) {
    write_text_file(path, serialize_model(model));
}

PixelModel load_model(const std::filesystem::path& path) { return deserialize_model(read_text_file(path)); }

} // namespace svseg
