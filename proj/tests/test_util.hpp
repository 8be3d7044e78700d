#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "svseg/image.hpp"

namespace testutil {

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("svseg_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

inline svseg::RgbImage random_image(std::mt19937_64& rng, int w, int h) {
    svseg::RgbImage img(w, h);
    std::uniform_int_distribution<int> d(0, 255);
    for (std::size_t i = 0; i < img.size(); ++i)
        img[i] = {static_cast<std::uint8_t>(d(rng)), static_cast<std::uint8_t>(d(rng)),
                  static_cast<std::uint8_t>(d(rng))};
    return img;
}

inline svseg::BinaryMask random_mask(std::mt19937_64& rng, int w, int h, double density = 0.5) {
    svseg::BinaryMask m(w, h);
    std::bernoulli_distribution d(density);
    for (std::size_t i = 0; i < m.size(); ++i)
        m[i] = d(rng) ? 1 : 0;
    return m;
}

} // namespace testutil
