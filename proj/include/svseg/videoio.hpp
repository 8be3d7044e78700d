#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "svseg/image.hpp"

namespace svseg {

/// Ordered frames of one video; all frames share dimensions.
class FrameSequence {
public:
    FrameSequence() = default;
    /// Validates: >= 2 frames, identical dims, W,H >= 8.
    explicit FrameSequence(std::vector<RgbImage> frames);

    int width() const noexcept { return frames_.empty() ? 0 : frames_.front().width(); }
    int height() const noexcept { return frames_.empty() ? 0 : frames_.front().height(); }
    int size() const noexcept { return static_cast<int>(frames_.size()); }
    const RgbImage& operator[](int i) const { return frames_.at(static_cast<std::size_t>(i)); }
    const std::vector<RgbImage>& frames() const noexcept { return frames_; }

private:
    std::vector<RgbImage> frames_;
};

struct DetectionBox {
    int frame_index = 0;
    double score = 0.0;
    Box box;
};

struct RegionProposal {
    int frame_index = 0;
    BinaryMask mask;
    Box tight_box;

    RegionProposal() = default;
    /// Throws InvalidArgument on an empty mask.
    RegionProposal(int frame, BinaryMask m);
};

/// Proposals keyed by frame index, file order preserved within a frame.
using ProposalSet = std::map<int, std::vector<RegionProposal>>;

// Netpbm rasters
RgbImage read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RgbImage& image);
/// P5, 255 = human, 0 = background; any other sample value is a format error.
BinaryMask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);
/// 8-bit P5 with arbitrary values.
Raster<std::uint8_t> read_pgm8(const std::filesystem::path& path);
void write_pgm8(const std::filesystem::path& path, const Raster<std::uint8_t>& image);
/// 16-bit big-endian P5 (maxval 65535).
Raster<std::uint16_t> read_pgm16(const std::filesystem::path& path);
void write_pgm16(const std::filesystem::path& path, const Raster<std::uint16_t>& image);

std::string frame_filename(int index);
FrameSequence read_frame_sequence(const std::filesystem::path& dir);
void write_frame_sequence(const std::filesystem::path& dir, const FrameSequence& frames);

std::vector<DetectionBox> parse_detections(const std::string& text);
std::vector<DetectionBox> read_detections(const std::filesystem::path& path);
std::string format_detections(const std::vector<DetectionBox>& boxes);
void write_detections(const std::filesystem::path& path, const std::vector<DetectionBox>& boxes);

/// Row-major (start, length) runs of set pixels; adjacent runs are merged.
struct Run {
    std::size_t start = 0;
    std::size_t length = 0;
    friend bool operator==(const Run&, const Run&) = default;
};
std::vector<Run> rle_encode(const BinaryMask& mask);
/// Runs must be ascending, non-overlapping, non-empty and inside W*H.
BinaryMask rle_decode(int width, int height, const std::vector<Run>& runs);

/// One proposal per line: `frame W H start len start len ...`.
ProposalSet parse_proposals(const std::string& text);
ProposalSet read_proposals(const std::filesystem::path& path);
std::string format_proposals(const ProposalSet& proposals);
void write_proposals(const std::filesystem::path& path, const ProposalSet& proposals);

/// |a and b| / |a or b|; 1.0 when both masks are empty.
double compute_iou(const BinaryMask& a, const BinaryMask& b);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace svseg
