#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "svseg/image.hpp"

namespace svseg {

inline constexpr std::size_t kPixelFeatureDim = 19;
inline constexpr std::size_t kClasses = 2; // 0 = background, 1 = human

using PixelFeature = std::array<double, kPixelFeatureDim>;

/// Raw (unstandardized) per-pixel features, row-major. Layout: RGB, Lab,
/// normalized x/y, 3x3 mean and std per channel, gradient magnitude,
/// orientation sin/cos, saturation, bias.
std::vector<PixelFeature> pixel_features(const RgbImage& frame);

/// Per-dimension affine standardization; the bias dimension stays fixed at 1.
struct Standardizer {
    PixelFeature mean{};
    PixelFeature scale{}; // 1 / std, or 1 for constant dimensions

    static Standardizer identity();
    static Standardizer fit(const std::vector<const std::vector<PixelFeature>*>& features);
    void apply(std::vector<PixelFeature>& features) const;
};

struct PixelModel {
    std::array<PixelFeature, kClasses> weights{};
    Standardizer standardizer = Standardizer::identity();
    std::vector<double> loss_log; // weighted loss after every epoch

    friend bool operator==(const PixelModel& a, const PixelModel& b) {
        return a.weights == b.weights && a.standardizer.mean == b.standardizer.mean &&
               a.standardizer.scale == b.standardizer.scale && a.loss_log == b.loss_log;
    }
};

struct WeightedSample {
    std::shared_ptr<const RgbImage> frame;
    BinaryMask target;
    double omega = 1.0;
};

struct TrainOptions {
    int epochs = 60;
    double lr0 = 0.001;
    int decay_every = 20;
    double decay_factor = 0.1;
    std::size_t batch_size = 20;
    std::size_t max_pixels = 4096; // per frame per epoch, stratified by label
    std::uint64_t seed = 1;
    /// Standardization to reuse; fitted on the corpus when absent.
    const Standardizer* frozen_standardizer = nullptr;
};

/// Mini-batch gradient descent on the sample-weighted pixel softmax loss.
/// Each batch step follows the batch's weighted-mean gradient
/// sum_i w_i grad_i / sum_i w_i, so zero-weight samples are inert.
PixelModel train(const std::vector<WeightedSample>& corpus, const TrainOptions& options);

/// Sample-weighted loss (1/N) sum_i w_i mean_j CE over all pixels, and its
/// gradient w.r.t. the weights, for an already-standardized corpus.
struct LossAndGradient {
    double loss = 0.0;
    std::array<PixelFeature, kClasses> gradient{};
};
LossAndGradient weighted_loss(const std::array<PixelFeature, kClasses>& weights,
                              const std::vector<const std::vector<PixelFeature>*>& features,
                              const std::vector<const BinaryMask*>& targets, const std::vector<double>& omegas);

/// Human-class softmax probability per pixel.
ConfidenceMap predict_confidence(const PixelModel& model, const RgbImage& frame);

/// Max relative error between the analytic gradient of the weighted loss for
/// one sample and central differences with step 1e-5.
double gradient_check(const PixelModel& model, const WeightedSample& sample);

/// Little-endian `PXM1` container: magic, version, classes, dim, weights,
/// standardization, loss log.
void save_model(const std::filesystem::path& path, const PixelModel& model);
PixelModel load_model(const std::filesystem::path& path);
std::string serialize_model(const PixelModel& model);
PixelModel deserialize_model(const std::string& bytes);

} // namespace svseg
