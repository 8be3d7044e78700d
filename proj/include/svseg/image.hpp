#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "svseg/error.hpp"

namespace svseg {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Dense row-major 2D raster.
template <typename T>
class Raster {
public:
    Raster() = default;
    Raster(int width, int height, T fill = T{})
        : width_(width), height_(height), data_(checked_size(width, height), fill) {}

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(int x, int y) { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const { return data_[index(x, y)]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }
    bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    bool same_shape(int w, int h) const noexcept { return w == width_ && h == height_; }
    template <typename U>
    bool same_shape(const Raster<U>& o) const noexcept {
        return o.width() == width_ && o.height() == height_;
    }

    std::vector<T>& data() noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    static std::size_t checked_size(int w, int h) {
        if (w < 0 || h < 0)
            throw InvalidArgument("negative raster dimensions");
        return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using RgbImage = Raster<Rgb>;

/// Per-pixel label, 1 = human, 0 = background.
using BinaryMask = Raster<std::uint8_t>;

/// Per-pixel human probability in [0,1].
using ConfidenceMap = Raster<double>;

/// Inclusive pixel box.
struct Box {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    long long area() const noexcept {
        return static_cast<long long>(x1 - x0 + 1) * static_cast<long long>(y1 - y0 + 1);
    }
    friend bool operator==(const Box&, const Box&) = default;
};

double box_iou(const Box& a, const Box& b) noexcept;

/// Minimal box covering all set pixels; throws if the mask is empty.
Box tight_box(const BinaryMask& mask);

std::size_t count_set(const BinaryMask& mask) noexcept;

} // namespace svseg
