#include "svseg/videoio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <set>
#include <sstream>

namespace svseg {

namespace fs = std::filesystem;

double box_iou(const Box& a, const Box& b) noexcept {
    const int ix0 = std::max(a.x0, b.x0), iy0 = std::max(a.y0, b.y0);
    const int ix1 = std::min(a.x1, b.x1), iy1 = std::min(a.y1, b.y1);
    long long inter = 0;
    if (ix1 >= ix0 && iy1 >= iy0)
        inter = static_cast<long long>(ix1 - ix0 + 1) * (iy1 - iy0 + 1);
    const long long uni = a.area() + b.area() - inter;
    return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

Box tight_box(const BinaryMask& mask) {
    Box b{mask.width(), mask.height(), -1, -1};
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask(x, y)) {
                b.x0 = std::min(b.x0, x);
                b.y0 = std::min(b.y0, y);
                b.x1 = std::max(b.x1, x);
                b.y1 = std::max(b.y1, y);
            }
    if (b.x1 < 0)
        throw InvalidArgument("tight_box of an empty mask");
    return b;
}

std::size_t count_set(const BinaryMask& mask) noexcept {
    return static_cast<std::size_t>(std::count_if(mask.data().begin(), mask.data().end(),
                                                   [](std::uint8_t v) { return v != 0; }));
}

FrameSequence::FrameSequence(std::vector<RgbImage> frames) : frames_(std::move(frames)) {
    if (frames_.size() < 2)
        throw InvalidArgument("a frame sequence needs at least 2 frames");
    const int w = frames_.front().width(), h = frames_.front().height();
    if (w < 8 || h < 8)
        throw InvalidArgument("frames must be at least 8x8");
    for (std::size_t i = 1; i < frames_.size(); ++i)
        if (!frames_[i].same_shape(w, h))
            throw InvalidArgument("frame " + std::to_string(i) + " has mismatched dimensions");
}

RegionProposal::RegionProposal(int frame, BinaryMask m)
    : frame_index(frame), mask(std::move(m)), tight_box(svseg::tight_box(mask)) {}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw FormatError("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out)
        throw FormatError("write failed for " + path.string());
}

namespace {

struct NetpbmHeader {
    std::string magic;
    int width = 0;
    int height = 0;
    int maxval = 0;
    std::size_t data_offset = 0;
};

NetpbmHeader parse_netpbm_header(const std::string& bytes, const std::string& name) {
    NetpbmHeader h;
    std::size_t pos = 0;
    auto fail = [&](const std::string& why) -> FormatError { return FormatError(name + ": " + why); };
    auto skip_ws = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n')
                    ++pos;
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> int {
        skip_ws();
        const std::size_t start = pos;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos])))
            ++pos;
        if (start == pos)
            throw fail("truncated header");
        int v = 0;
        auto [p, ec] = std::from_chars(bytes.data() + start, bytes.data() + pos, v);
        if (ec != std::errc())
            throw fail("bad header integer");
        return v;
    };
    if (bytes.size() < 2)
        throw fail("file too short");
    h.magic = bytes.substr(0, 2);
    pos = 2;
    h.width = read_int();
    h.height = read_int();
    h.maxval = read_int();
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
        throw fail("missing whitespace after maxval");
    h.data_offset = pos + 1;
    if (h.width <= 0 || h.height <= 0)
        throw fail("non-positive dimensions");
    return h;
}

NetpbmHeader expect_header(const std::string& bytes, const fs::path& path, const char* magic,
                           int maxval, std::size_t bytes_per_pixel) {
    const std::string name = path.filename().string();
    NetpbmHeader h = parse_netpbm_header(bytes, name);
    if (h.magic != magic)
        throw FormatError(name + ": expected " + magic + ", found '" + h.magic + "'");
    if (h.maxval != maxval)
        throw FormatError(name + ": unsupported maxval " + std::to_string(h.maxval));
    const std::size_t need = static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height) *
                             bytes_per_pixel;
    if (bytes.size() - h.data_offset != need)
        throw FormatError(name + ": expected " + std::to_string(need) + " data bytes, found " +
                          std::to_string(bytes.size() - h.data_offset));
    return h;
}

std::string header(const char* magic, int w, int hgt, int maxval) {
    return std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(hgt) + "\n" +
           std::to_string(maxval) + "\n";
}

} // namespace

RgbImage read_ppm(const fs::path& path) {
    const std::string bytes = read_text_file(path);
    const NetpbmHeader h = expect_header(bytes, path, "P6", 255, 3);
    RgbImage img(h.width, h.height);
    const auto* p = reinterpret_cast<const std::uint8_t*>(bytes.data() + h.data_offset);
    for (std::size_t i = 0; i < img.size(); ++i)
        img[i] = Rgb{p[3 * i], p[3 * i + 1], p[3 * i + 2]};
    return img;
}

void write_ppm(const fs::path& path, const RgbImage& image) {
    std::string out = header("P6", image.width(), image.height(), 255);
    out.reserve(out.size() + image.size() * 3);
    for (const Rgb& px : image.data()) {
        out.push_back(static_cast<char>(px.r));
        out.push_back(static_cast<char>(px.g));
        out.push_back(static_cast<char>(px.b));
    }
    write_text_file(path, out);
}

Raster<std::uint8_t> read_pgm8(const fs::path& path) {
    const std::string bytes = read_text_file(path);
    const NetpbmHeader h = expect_header(bytes, path, "P5", 255, 1);
    Raster<std::uint8_t> img(h.width, h.height);
    std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset), bytes.end(), img.data().begin());
    return img;
}

void write_pgm8(const fs::path& path, const Raster<std::uint8_t>& image) {
    std::string out = header("P5", image.width(), image.height(), 255);
    out.append(image.data().begin(), image.data().end());
    write_text_file(path, out);
}

BinaryMask read_mask(const fs::path& path) {
    BinaryMask m = read_pgm8(path);
    for (auto& v : m.data()) {
        if (v != 0 && v != 255)
            throw FormatError(path.filename().string() + ": mask sample " + std::to_string(v) +
                              " is neither 0 nor 255");
        v = v ? 1 : 0;
    }
    return m;
}

void write_mask(const fs::path& path, const BinaryMask& mask) {
    Raster<std::uint8_t> out(mask.width(), mask.height());
    for (std::size_t i = 0; i < mask.size(); ++i)
        out[i] = mask[i] ? 255 : 0;
    write_pgm8(path, out);
}

Raster<std::uint16_t> read_pgm16(const fs::path& path) {
    const std::string bytes = read_text_file(path);
    const NetpbmHeader h = expect_header(bytes, path, "P5", 65535, 2);
    Raster<std::uint16_t> img(h.width, h.height);
    const auto* p = reinterpret_cast<const std::uint8_t*>(bytes.data() + h.data_offset);
    for (std::size_t i = 0; i < img.size(); ++i)
        img[i] = static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1]);
    return img;
}

void write_pgm16(const fs::path& path, const Raster<std::uint16_t>& image) {
    std::string out = header("P5", image.width(), image.height(), 65535);
    for (std::uint16_t v : image.data()) {
        out.push_back(static_cast<char>(v >> 8));
        out.push_back(static_cast<char>(v & 0xff));
    }
    write_text_file(path, out);
}

std::string frame_filename(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%05d.ppm", index);
    return buf;
}

FrameSequence read_frame_sequence(const fs::path& dir) {
    if (!fs::is_directory(dir))
        throw FormatError("not a directory: " + dir.string());
    std::set<int> indices;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() != 15 || name.rfind("frame_", 0) != 0 || name.substr(11) != ".ppm")
            continue;
        int idx = 0;
        auto [p, ec] = std::from_chars(name.data() + 6, name.data() + 11, idx);
        if (ec == std::errc() && p == name.data() + 11)
            indices.insert(idx);
    }
    if (indices.empty())
        throw FormatError("no frames in " + dir.string());
    const int last = *indices.rbegin();
    for (int i = 0; i <= last; ++i)
        if (!indices.contains(i))
            throw FormatError("missing frame " + std::to_string(i));
    std::vector<RgbImage> frames;
    frames.reserve(indices.size());
    for (int i = 0; i <= last; ++i) {
        frames.push_back(read_ppm(dir / frame_filename(i)));
        if (!frames.back().same_shape(frames.front()))
            throw FormatError(frame_filename(i) + ": dimensions differ from frame 0");
    }
    try {
        return FrameSequence(std::move(frames));
    } catch (const InvalidArgument& e) {
        throw FormatError(dir.string() + ": " + e.what());
    }
}

void write_frame_sequence(const fs::path& dir, const FrameSequence& frames) {
    fs::create_directories(dir);
    for (int i = 0; i < frames.size(); ++i)
        write_ppm(dir / frame_filename(i), frames[i]);
}

namespace {

std::string strip_comment(const std::string& line) {
    const auto hash = line.find('#');
    return hash == std::string::npos ? line : line.substr(0, hash);
}

} // namespace

std::vector<DetectionBox> parse_detections(const std::string& text) {
    std::vector<DetectionBox> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream fields(strip_comment(line));
        std::string first;
        if (!(fields >> first))
            continue;
        fields.seekg(0);
        DetectionBox d;
        if (!(fields >> d.frame_index >> d.score >> d.box.x0 >> d.box.y0 >> d.box.x1 >> d.box.y1))
            throw ParseError("expected `frame score x0 y0 x1 y1`", lineno);
        std::string extra;
        if (fields >> extra)
            throw ParseError("trailing field '" + extra + "'", lineno);
        if (d.frame_index < 0)
            throw ParseError("negative frame index", lineno);
        if (!std::isfinite(d.score))
            throw ParseError("non-finite score", lineno);
        if (d.box.x0 < 0 || d.box.y0 < 0)
            throw ParseError("negative box coordinate", lineno);
        if (d.box.x1 < d.box.x0 || d.box.y1 < d.box.y0)
            throw ParseError("degenerate box (x1 < x0 or y1 < y0)", lineno);
        out.push_back(d);
    }
    return out;
}

std::vector<DetectionBox> read_detections(const fs::path& path) {
    const std::string text = read_text_file(path);
    try {
        return parse_detections(text);
    } catch (const ParseError& e) {
        throw ParseError(path.filename().string() + ": " + e.what(), e.line());
    }
}

std::string format_detections(const std::vector<DetectionBox>& boxes) {
    std::string out;
    char buf[128];
    for (const auto& d : boxes) {
        std::snprintf(buf, sizeof buf, "%d %.17g %d %d %d %d\n", d.frame_index, d.score, d.box.x0,
                      d.box.y0, d.box.x1, d.box.y1);
        out += buf;
    }
    return out;
}

void write_detections(const fs::path& path, const std::vector<DetectionBox>& boxes) {
    write_text_file(path, format_detections(boxes));
}

std::vector<Run> rle_encode(const BinaryMask& mask) {
    std::vector<Run> runs;
    const std::size_t n = mask.size();
    std::size_t i = 0;
    while (i < n) {
        if (!mask[i]) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < n && mask[i])
            ++i;
        runs.push_back({start, i - start});
    }
    return runs;
}

BinaryMask rle_decode(int width, int height, const std::vector<Run>& runs) {
    BinaryMask m(width, height, 0);
    const std::size_t n = m.size();
    std::size_t min_start = 0;
    for (const Run& r : runs) {
        if (r.length == 0)
            throw FormatError("zero-length run at offset " + std::to_string(r.start));
        if (r.start < min_start)
            throw FormatError("run at offset " + std::to_string(r.start) + " overlaps or precedes the previous run");
        if (r.start > n || r.length > n - r.start)
            throw FormatError("run " + std::to_string(r.start) + "+" + std::to_string(r.length) +
                              " exceeds " + std::to_string(n) + " pixels");
        std::fill_n(m.data().begin() + static_cast<std::ptrdiff_t>(r.start), r.length, std::uint8_t{1});
        min_start = r.start + r.length;
    }
    return m;
}

ProposalSet parse_proposals(const std::string& text) {
    ProposalSet out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream fields(strip_comment(line));
        long long frame = 0, w = 0, h = 0;
        if (!(fields >> frame)) {
            continue;
        }
        if (!(fields >> w >> h))
            throw ParseError("expected header `frame W H`", lineno);
        if (frame < 0 || w <= 0 || h <= 0 || w > 1 << 15 || h > 1 << 15)
            throw ParseError("invalid proposal header", lineno);
        std::vector<Run> runs;
        long long s = 0, l = 0;
        while (fields >> s) {
            if (!(fields >> l))
                throw ParseError("dangling run offset", lineno);
            if (s < 0 || l < 0)
                throw ParseError("negative run", lineno);
            runs.push_back({static_cast<std::size_t>(s), static_cast<std::size_t>(l)});
        }
        if (!fields.eof())
            throw ParseError("non-numeric field", lineno);
        BinaryMask mask;
        try {
            mask = rle_decode(static_cast<int>(w), static_cast<int>(h), runs);
        } catch (const FormatError& e) {
            throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
        }
        if (count_set(mask) == 0)
            throw FormatError("line " + std::to_string(lineno) + ": empty proposal");
        out[static_cast<int>(frame)].emplace_back(static_cast<int>(frame), std::move(mask));
    }
    return out;
}

ProposalSet read_proposals(const fs::path& path) {
    return parse_proposals(read_text_file(path));
}

std::string format_proposals(const ProposalSet& proposals) {
    std::string out;
    for (const auto& [frame, list] : proposals)
        for (const auto& p : list) {
            out += std::to_string(frame) + ' ' + std::to_string(p.mask.width()) + ' ' +
                   std::to_string(p.mask.height());
            for (const Run& r : rle_encode(p.mask))
                out += ' ' + std::to_string(r.start) + ' ' + std::to_string(r.length);
            out += '\n';
        }
    return out;
}

void write_proposals(const fs::path& path, const ProposalSet& proposals) {
    write_text_file(path, format_proposals(proposals));
}

double compute_iou(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_shape(b))
        throw InvalidArgument("compute_iou: dimension mismatch");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool x = a[i] != 0, y = b[i] != 0;
        inter += (x && y);
        uni += (x || y);
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

} // namespace svseg
