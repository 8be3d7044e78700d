#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "svseg/videoio.hpp"
#include "test_util.hpp"

using namespace svseg;

namespace {

std::string file_bytes(const std::filesystem::path& p) {
    return read_text_file(p);
}

BinaryMask row_mask(std::initializer_list<int> v) {
    BinaryMask m(static_cast<int>(v.size()), 1);
    int i = 0;
    for (int x : v)
        m[static_cast<std::size_t>(i++)] = static_cast<std::uint8_t>(x);
    return m;
}

} // namespace

TEST_CASE("frame sequence read-back") {
    testutil::TempDir dir("frames");
    std::mt19937_64 rng(1);
    for (int i = 0; i < 3; ++i)
        write_ppm(dir / frame_filename(i), testutil::random_image(rng, 64, 48));
    FrameSequence seq = read_frame_sequence(dir.path());
    CHECK(seq.size() == 3);
    CHECK(seq.width() == 64);
    CHECK(seq.height() == 48);
}

TEST_CASE("gap in frame numbering is reported") {
    testutil::TempDir dir("gap");
    std::mt19937_64 rng(2);
    for (int i : {0, 1, 3})
        write_ppm(dir / frame_filename(i), testutil::random_image(rng, 16, 16));
    try {
        read_frame_sequence(dir.path());
        FAIL("expected an error");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("missing frame 2") != std::string::npos);
    }
}

TEST_CASE("mismatched frame dimensions name the file") {
    testutil::TempDir dir("dims");
    std::mt19937_64 rng(3);
    write_ppm(dir / frame_filename(0), testutil::random_image(rng, 16, 16));
    write_ppm(dir / frame_filename(1), testutil::random_image(rng, 16, 12));
    try {
        read_frame_sequence(dir.path());
        FAIL("expected an error");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find(frame_filename(1)) != std::string::npos);
    }
}

TEST_CASE("frame round trip is byte identical") {
    testutil::TempDir dir("rt");
    std::mt19937_64 rng(4);
    RgbImage img = testutil::random_image(rng, 23, 17);
    write_ppm(dir / "a.ppm", img);
    RgbImage back = read_ppm(dir / "a.ppm");
    CHECK(back == img);
    write_ppm(dir / "b.ppm", back);
    CHECK(file_bytes(dir / "a.ppm") == file_bytes(dir / "b.ppm"));
}

TEST_CASE("corrupt ppm") {
    testutil::TempDir dir("bad");
    write_text_file(dir / "short.ppm", "P6\n4 4\n255\nabc");
    CHECK_THROWS_AS(read_ppm(dir / "short.ppm"), FormatError);
    write_text_file(dir / "magic.ppm", "P5\n1 1\n255\n\x01");
    CHECK_THROWS_AS(read_ppm(dir / "magic.ppm"), FormatError);
}

TEST_CASE("mask samples other than 0 and 255 are rejected") {
    testutil::TempDir dir("mask");
    Raster<std::uint8_t> r(2, 1);
    r[0] = 255;
    r[1] = 7;
    write_pgm8(dir / "m.pgm", r);
    CHECK_THROWS_AS(read_mask(dir / "m.pgm"), FormatError);
}

TEST_CASE("16-bit pgm round trip") {
    testutil::TempDir dir("p16");
    Raster<std::uint16_t> r(5, 3);
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] = static_cast<std::uint16_t>(i * 4099u);
    write_pgm16(dir / "x.pgm", r);
    CHECK(read_pgm16(dir / "x.pgm") == r);
}

TEST_CASE("detections parse") {
    auto boxes = parse_detections("4 0.7 10 10 30 40\n");
    REQUIRE(boxes.size() == 1);
    CHECK(boxes[0].frame_index == 4);
    CHECK(boxes[0].score == doctest::Approx(0.7));
    CHECK(boxes[0].box == Box{10, 10, 30, 40});

    CHECK_THROWS_AS(parse_detections("4 0.7 30 10 10 40\n"), ParseError);
    CHECK(parse_detections("").empty());

    try {
        parse_detections("# header\n1 0.1 0 0 1 1\n2 bad 0 0 1 1\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("detections keep order and round trip") {
    std::vector<DetectionBox> v{{3, -1.25, {1, 2, 3, 4}}, {0, 2.5, {0, 0, 9, 9}}, {3, 0.0, {5, 5, 5, 5}}};
    auto back = parse_detections(format_detections(v));
    REQUIRE(back.size() == v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        CHECK(back[i].frame_index == v[i].frame_index);
        CHECK(back[i].score == v[i].score);
        CHECK(back[i].box == v[i].box);
    }
}

TEST_CASE("rle decode examples") {
    BinaryMask all = rle_decode(2, 2, {{0, 4}});
    CHECK(count_set(all) == 4);
    CHECK_THROWS_AS(rle_decode(2, 2, {{2, 3}}), FormatError);
    CHECK_THROWS_AS(rle_decode(4, 4, {{0, 3}, {2, 2}}), FormatError);
    CHECK_THROWS_AS(rle_decode(4, 4, {{0, 0}}), FormatError);
}

TEST_CASE("rle round trip of a random mask") {
    std::mt19937_64 rng(5);
    BinaryMask m = testutil::random_mask(rng, 32, 32);
    CHECK(rle_decode(32, 32, rle_encode(m)) == m);
}

TEST_CASE("proposal text") {
    ProposalSet set = parse_proposals("0 2 2 0 4\n");
    REQUIRE(set.count(0) == 1);
    CHECK(count_set(set[0][0].mask) == 4);
    CHECK(set[0][0].tight_box == Box{0, 0, 1, 1});
    CHECK_THROWS_AS(parse_proposals("0 2 2 2 3\n"), FormatError);
    CHECK_THROWS_AS(parse_proposals("0 2 2\n"), FormatError);

    std::mt19937_64 rng(6);
    ProposalSet p;
    for (int f : {0, 2, 7})
        for (int k = 0; k < 3; ++k)
            p[f].emplace_back(f, testutil::random_mask(rng, 9, 6, 0.4));
    ProposalSet q = parse_proposals(format_proposals(p));
    REQUIRE(q.size() == p.size());
    for (auto& [f, list] : p) {
        REQUIRE(q[f].size() == list.size());
        for (std::size_t k = 0; k < list.size(); ++k)
            CHECK(q[f][k].mask == list[k].mask);
    }
}

TEST_CASE("iou examples") {
    BinaryMask a = row_mask({1, 1, 0});
    BinaryMask b = row_mask({0, 1, 1});
    CHECK(compute_iou(a, a) == 1.0);
    CHECK(compute_iou(row_mask({1, 0, 0}), row_mask({0, 0, 1})) == 0.0);
    CHECK(compute_iou(a, b) == doctest::Approx(1.0 / 3.0));
    CHECK(compute_iou(row_mask({0, 0}), row_mask({0, 0})) == 1.0);
    CHECK_THROWS_AS(compute_iou(a, row_mask({1, 1})), InvalidArgument);
}

TEST_CASE("iou properties") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        BinaryMask a = testutil::random_mask(rng, 8, 6, 0.3), b = testutil::random_mask(rng, 8, 6, 0.3);
        double ab = compute_iou(a, b);
        CHECK(ab == compute_iou(b, a));
        CHECK((ab == 1.0) == (a == b));

        std::vector<int> px(8), py(6);
        std::iota(px.begin(), px.end(), 0);
        std::iota(py.begin(), py.end(), 0);
        std::shuffle(px.begin(), px.end(), rng);
        std::shuffle(py.begin(), py.end(), rng);
        BinaryMask pa(8, 6), pb(8, 6);
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 8; ++x) {
                pa(px[x], py[y]) = a(x, y);
                pb(px[x], py[y]) = b(x, y);
            }
        CHECK(compute_iou(pa, pb) == ab);
    }
}

TEST_CASE("tight box and box iou") {
    BinaryMask m(10, 10);
    m(2, 3) = 1;
    m(6, 4) = 1;
    CHECK(tight_box(m) == Box{2, 3, 6, 4});
    CHECK_THROWS_AS(tight_box(BinaryMask(3, 3)), InvalidArgument);
    CHECK(box_iou({0, 0, 1, 1}, {0, 0, 1, 1}) == 1.0);
    CHECK(box_iou({0, 0, 1, 1}, {1, 0, 2, 1}) == doctest::Approx(2.0 / 6.0));
    CHECK(box_iou({0, 0, 1, 1}, {5, 5, 6, 6}) == 0.0);
}

TEST_CASE("frame sequence contract") {
    CHECK_THROWS_AS(FrameSequence({RgbImage(8, 8)}), InvalidArgument);
    CHECK_THROWS_AS(FrameSequence({RgbImage(8, 7), RgbImage(8, 7)}), InvalidArgument);
    CHECK_THROWS_AS(FrameSequence({RgbImage(8, 8), RgbImage(9, 8)}), InvalidArgument);
    CHECK_THROWS_AS(RegionProposal(0, BinaryMask(4, 4)), InvalidArgument);
}
