#include <doctest.h>

#include <cmath>
#include <random>

#include "svseg/learner.hpp"
#include "test_util.hpp"

using namespace svseg;

namespace {

/// Bright square on a dark noisy ground.
WeightedSample square_sample(std::mt19937_64& rng, int size, double omega = 1.0) {
    std::normal_distribution<double> noise(0.0, 6.0);
    std::uniform_int_distribution<int> pos(0, size / 2);
    const int x0 = pos(rng), y0 = pos(rng), side = size / 3;
    auto img = std::make_shared<RgbImage>(size, size);
    BinaryMask m(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const bool in = x >= x0 && x < x0 + side && y >= y0 && y < y0 + side;
            const double base = in ? 220.0 : 40.0;
            auto c = [&](double v) { return static_cast<std::uint8_t>(std::clamp(v + noise(rng), 0.0, 255.0)); };
            (*img)(x, y) = Rgb{c(base), c(base), c(base)};
            m(x, y) = in;
        }
    return {img, std::move(m), omega};
}

WeightedSample random_sample(std::mt19937_64& rng, int w, int h, double omega) {
    auto img = std::make_shared<RgbImage>(testutil::random_image(rng, w, h));
    return {img, testutil::random_mask(rng, w, h, 0.4), omega};
}

PixelModel random_model(std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 0.5);
    PixelModel m;
    for (auto& row : m.weights)
        for (double& v : row)
            v = g(rng);
    for (std::size_t k = 0; k + 1 < kPixelFeatureDim; ++k) {
        m.standardizer.mean[k] = 100.0 * g(rng);
        m.standardizer.scale[k] = 0.01 + std::abs(g(rng)) * 0.05;
    }
    return m;
}

LossAndGradient single_loss(const PixelModel& model, const WeightedSample& s) {
    auto f = pixel_features(*s.frame);
    model.standardizer.apply(f);
    return weighted_loss(model.weights, {&f}, {&s.target}, {s.omega});
}

} // namespace

TEST_CASE("pixel features") {
    RgbImage img(5, 4, Rgb{10, 200, 30});
    auto f = pixel_features(img);
    REQUIRE(f.size() == 20);
    for (const auto& px : f) {
        CHECK(px[0] == doctest::Approx(10.0 / 255.0));
        CHECK(px[1] == doctest::Approx(200.0 / 255.0));
        CHECK(px[2] == doctest::Approx(30.0 / 255.0));
        CHECK(px[kPixelFeatureDim - 1] == 1.0);
        for (double v : px)
            CHECK(std::isfinite(v));
    }
}

TEST_CASE("zero weights predict one half") {
    std::mt19937_64 rng(1);
    PixelModel m;
    ConfidenceMap c = predict_confidence(m, testutil::random_image(rng, 7, 5));
    for (std::size_t i = 0; i < c.size(); ++i)
        CHECK(c[i] == 0.5);
}

TEST_CASE("gradient check on random pairs") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        PixelModel m = random_model(rng);
        WeightedSample s = random_sample(rng, 9, 7, std::uniform_real_distribution<double>(0.05, 1.0)(rng));
        CHECK(gradient_check(m, s) < 1e-4);
    }
}

TEST_CASE("gradient is linear in the sample weight") {
    std::mt19937_64 rng(3);
    PixelModel m = random_model(rng);
    WeightedSample s = random_sample(rng, 8, 8, 1.0);
    auto full = single_loss(m, s);
    s.omega = 0.5;
    auto half = single_loss(m, s);
    s.omega = 0.0;
    auto zero = single_loss(m, s);
    for (std::size_t c = 0; c < kClasses; ++c)
        for (std::size_t k = 0; k < kPixelFeatureDim; ++k) {
            CHECK(half.gradient[c][k] == 0.5 * full.gradient[c][k]);
            CHECK(zero.gradient[c][k] == 0.0);
        }
    CHECK(half.loss == 0.5 * full.loss);
    CHECK(zero.loss == 0.0);
}

TEST_CASE("zero-weight samples leave training untouched") {
    std::mt19937_64 rng(4);
    std::vector<WeightedSample> corpus;
    for (int i = 0; i < 7; ++i)
        corpus.push_back(square_sample(rng, 24, 0.0));
    corpus[3].omega = 0.8;
    TrainOptions opt;
    opt.epochs = 12;
    opt.lr0 = 0.3;
    opt.decay_every = 5;
    opt.batch_size = 3;
    opt.seed = 9;
    PixelModel all = train(corpus, opt);
    PixelModel alone = train({corpus[3]}, opt);
    for (std::size_t c = 0; c < kClasses; ++c)
        for (std::size_t k = 0; k < kPixelFeatureDim; ++k)
            CHECK(std::abs(all.weights[c][k] - alone.weights[c][k]) <= 1e-12);
    CHECK(all.standardizer.mean == alone.standardizer.mean);

    for (auto& s : corpus)
        s.omega = 0.0;
    CHECK_THROWS_AS(train(corpus, opt), InvalidArgument);
}

TEST_CASE("two half-weight copies equal one full-weight sample under full batch") {
    std::mt19937_64 rng(5);
    WeightedSample s = square_sample(rng, 20, 1.0);
    WeightedSample h = s;
    h.omega = 0.5;
    TrainOptions opt;
    opt.epochs = 15;
    opt.lr0 = 0.5;
    opt.batch_size = 16;
    for (int epochs : {1, 5, 15}) {
        opt.epochs = epochs;
        PixelModel one = train({s}, opt);
        PixelModel two = train({h, h}, opt);
        for (std::size_t c = 0; c < kClasses; ++c)
            for (std::size_t k = 0; k < kPixelFeatureDim; ++k)
                CHECK(two.weights[c][k] == doctest::Approx(one.weights[c][k]).epsilon(1e-12));
    }
}

TEST_CASE("separable corpus is learned") {
    std::mt19937_64 rng(6);
    std::vector<WeightedSample> corpus;
    for (int i = 0; i < 8; ++i)
        corpus.push_back(square_sample(rng, 32));
    TrainOptions opt;
    opt.epochs = 60;
    opt.lr0 = 0.5;
    opt.batch_size = 4;
    PixelModel m = train(corpus, opt);
    CHECK(m.loss_log.size() == 60);
    CHECK(m.loss_log.back() < 0.1);

    WeightedSample probe = square_sample(rng, 32);
    ConfidenceMap c = predict_confidence(m, *probe.frame);
    double in = 0.0, out = 0.0;
    std::size_t nin = 0, nout = 0;
    for (std::size_t p = 0; p < c.size(); ++p) {
        CHECK(c[p] >= 0.0);
        CHECK(c[p] <= 1.0);
        if (probe.target[p]) {
            in += c[p];
            ++nin;
        } else {
            out += c[p];
            ++nout;
        }
    }
    CHECK(in / static_cast<double>(nin) > out / static_cast<double>(nout));

    ConfidenceMap again = predict_confidence(m, *probe.frame);
    CHECK(again == c);
}

TEST_CASE("full-batch loss does not increase at a small rate") {
    std::mt19937_64 rng(7);
    std::vector<WeightedSample> corpus;
    for (int i = 0; i < 4; ++i)
        corpus.push_back(square_sample(rng, 20, 0.25 + 0.25 * i));
    TrainOptions opt;
    opt.epochs = 40;
    opt.lr0 = 0.05;
    opt.decay_every = 1000;
    opt.batch_size = corpus.size();
    PixelModel m = train(corpus, opt);
    for (std::size_t e = 1; e < m.loss_log.size(); ++e)
        CHECK(m.loss_log[e] <= m.loss_log[e - 1] + 1e-12);
}

TEST_CASE("training is reproducible") {
    std::mt19937_64 rng(8);
    std::vector<WeightedSample> corpus;
    for (int i = 0; i < 6; ++i)
        corpus.push_back(square_sample(rng, 80, 0.5));
    TrainOptions opt;
    opt.epochs = 6;
    opt.lr0 = 0.5;
    opt.batch_size = 4;
    opt.seed = 42;
    PixelModel a = train(corpus, opt), b = train(corpus, opt);
    CHECK(a == b);
    opt.seed = 43;
    CHECK(!(train(corpus, opt) == a));
}

TEST_CASE("frozen standardization is kept") {
    std::mt19937_64 rng(9);
    std::vector<WeightedSample> corpus{square_sample(rng, 16)};
    Standardizer s = Standardizer::identity();
    s.mean[0] = 3.0;
    TrainOptions opt;
    opt.epochs = 2;
    opt.frozen_standardizer = &s;
    PixelModel m = train(corpus, opt);
    CHECK(m.standardizer.mean == s.mean);
    CHECK(m.standardizer.scale == s.scale);
}

TEST_CASE("model serialization") {
    std::mt19937_64 rng(10);
    PixelModel m = random_model(rng);
    m.loss_log = {0.7, 0.5, 0.25};
    std::string bytes = serialize_model(m);
    CHECK(bytes.substr(0, 4) == "PXM1");
    CHECK(deserialize_model(bytes) == m);

    testutil::TempDir dir("model");
    save_model(dir / "m.pxm", m);
    CHECK(load_model(dir / "m.pxm") == m);

    CHECK_THROWS_AS(deserialize_model(bytes.substr(0, bytes.size() - 1)), FormatError);
    std::string bad = bytes;
    bad[0] = 'Q';
    CHECK_THROWS_AS(deserialize_model(bad), FormatError);
    CHECK_THROWS_AS(deserialize_model(bytes + "x"), FormatError);
}

TEST_CASE("train rejects bad input") {
    std::mt19937_64 rng(11);
    WeightedSample s = square_sample(rng, 12);
    TrainOptions opt;
    CHECK_THROWS_AS(train({}, opt), InvalidArgument);
    s.omega = 1.5;
    CHECK_THROWS_AS(train({s}, opt), InvalidArgument);
    s.omega = 1.0;
    s.target = BinaryMask(3, 3);
    CHECK_THROWS_AS(train({s}, opt), InvalidArgument);
}
