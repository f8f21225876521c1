#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hdrvqa/color.hpp"
#include "hdrvqa/raw_io.hpp"
#include "hdrvqa/resample.hpp"
#include "hdrvqa/transfer.hpp"
#include "ref/reference.hpp"
#include "support/test_util.hpp"

using namespace hdrvqa;
using test::TempDir;

TEST_CASE("raw io round trip for a synthetic 420 file") {
    TempDir tmp("rawio");
    FrameGeometry g = test::make_geometry(4, 4, PixelLayout::YCbCr, ChromaSiting::Cs420);
    HdrFrame f0 = test::random_frame(g, 1);
    HdrFrame f1 = test::random_frame(g, 2);
    std::string path = tmp.file("clip.raw");
    save_frames(path, {f0, f1});

    CHECK(raw_frame_count(path, g) == 2);
    auto frames = load_frames(path, g, {0, 1});
    REQUIRE(frames.size() == 2);
    // quantization to 10 bits bounds the round-trip error by half a code
    const float half_code = 0.5f / 1023.0f + 1e-6f;
    for (int p = 0; p < 3; ++p)
        for (size_t i = 0; i < f0.planes[p].size(); ++i) {
            CHECK(std::abs(frames[0].planes[p].v[i] - f0.planes[p].v[i]) <= half_code);
            CHECK(std::abs(frames[1].planes[p].v[i] - f1.planes[p].v[i]) <= half_code);
        }
    CHECK(frames[0].geom.transfer == g.transfer);
    CHECK(frames[0].geom.bit_depth == 10);
}

TEST_CASE("raw io: out-of-range index and wrong geometry are errors") {
    TempDir tmp("rawio2");
    FrameGeometry g = test::make_geometry(4, 4, PixelLayout::YCbCr, ChromaSiting::Cs420);
    std::string path = tmp.file("clip.raw");
    save_frames(path, {test::random_frame(g, 1), test::random_frame(g, 2)});

    CHECK_THROWS_WITH_AS(load_frames(path, g, {5}), doctest::Contains("out of range"), Error);
    CHECK_THROWS_AS(load_frames(tmp.file("missing.raw"), g, {0}), Error);

    FrameGeometry wrong = g;
    wrong.width = 6;
    CHECK_THROWS_WITH_AS(raw_frame_count(path, wrong), doctest::Contains("not divisible"),
                         Error);
}

TEST_CASE("raw code value 512 normalizes to 512/1023") {
    TempDir tmp("rawio3");
    FrameGeometry g = test::make_geometry(4, 2, PixelLayout::YCbCr, ChromaSiting::Cs420);
    HdrFrame f = test::constant_frame(g, float(512.0 / 1023.0));
    std::string path = tmp.file("mid.raw");
    save_frames(path, {f});
    HdrFrame r = load_frame(path, g, 0);
    for (const Plane& p : r.planes)
        for (float v : p.v) CHECK(v == doctest::Approx(512.0 / 1023.0).epsilon(1e-9));
}

TEST_CASE("geometry sidecar round trip and schema rejection") {
    TempDir tmp("sidecar");
    FrameGeometry g = test::make_geometry(8, 6, PixelLayout::YCbCr, ChromaSiting::Cs420);
    g.transfer = Transfer::HLG;
    g.fps = 50.0;
    save_geometry(tmp.file("g.json"), g);
    FrameGeometry r = load_geometry(tmp.file("g.json"));
    CHECK(r.width == 8);
    CHECK(r.height == 6);
    CHECK(r.transfer == Transfer::HLG);
    CHECK(r.fps == 50.0);
    CHECK(r.range == Range::Limited);

    std::ofstream bad(tmp.file("bad.json"));
    bad << R"({"schema": 99, "width": 4})";
    bad.close();
    CHECK_THROWS_AS(load_geometry(tmp.file("bad.json")), Error);
}

// ---------------------------------------------------------------- transfer

TEST_CASE("pq endpoints") {
    CHECK(pq_oetf(0.0) == 0.0);
    CHECK(pq_eotf(0.0) == 0.0);
    CHECK(pq_eotf(1.0) == doctest::Approx(10000.0).epsilon(1e-9));
    CHECK(pq_oetf(100.0) == doctest::Approx(0.5081).epsilon(2e-3));
    CHECK(pq_oetf(1000.0) == doctest::Approx(0.7518).epsilon(2e-3));
}

TEST_CASE("pq round trip within 1e-6 over 1000 codes") {
    for (int i = 0; i < 1000; ++i) {
        double c = double(i) / 999.0;
        CHECK(std::abs(pq_oetf(pq_eotf(c)) - c) < 1e-6);
    }
}

TEST_CASE("transfer curves are monotone nondecreasing") {
    double prev_e = -1, prev_o = -1, prev_h = -1, prev_hi = -1;
    for (int i = 0; i < 1000; ++i) {
        double c = double(i) / 999.0;
        double e = pq_eotf(c);
        double o = pq_oetf(c * 10000.0);
        double h = hlg_oetf(c);
        double hi = hlg_inverse_oetf(c);
        CHECK(e >= prev_e);
        CHECK(o >= prev_o);
        CHECK(h >= prev_h);
        CHECK(hi >= prev_hi);
        prev_e = e;
        prev_o = o;
        prev_h = h;
        prev_hi = hi;
    }
}

TEST_CASE("transfer domain errors") {
    CHECK_THROWS_AS(pq_eotf(-0.1), Error);
    CHECK_THROWS_AS(pq_eotf(1.1), Error);
    CHECK_THROWS_AS(pq_oetf(-1.0), Error);
    CHECK_THROWS_AS(pq_oetf(10001.0), Error);
    CHECK_THROWS_AS(hlg_oetf(2.0), Error);
    CHECK_THROWS_AS(hlg_inverse_oetf(-0.5), Error);
}

TEST_CASE("hlg_to_pq maps black to black and full code to ~0.7518") {
    FrameGeometry g = test::make_geometry(4, 4, PixelLayout::RGB, ChromaSiting::Cs444);
    g.transfer = Transfer::HLG;

    HdrFrame black = test::constant_frame(g, 0.f);
    HdrFrame pq_black = hlg_to_pq(black);
    CHECK(pq_black.geom.transfer == Transfer::PQ);
    for (const Plane& p : pq_black.planes)
        for (float v : p.v) CHECK(v == 0.f);

    HdrFrame white = test::constant_frame(g, 1.f);
    HdrFrame pq_white = hlg_to_pq(white, 1000.0);
    for (float v : pq_white.planes[0].v)
        CHECK(v == doctest::Approx(pq_oetf(1000.0)).epsilon(1e-4));

    HdrFrame already_pq = test::constant_frame(test::make_geometry(4, 4, PixelLayout::RGB,
                                                                   ChromaSiting::Cs444),
                                               0.5f);
    CHECK_THROWS_AS(hlg_to_pq(already_pq), Error);
}

TEST_CASE("hlg_to_pq matches its serial reference") {
    FrameGeometry g = test::make_geometry(16, 12, PixelLayout::RGB, ChromaSiting::Cs444);
    g.transfer = Transfer::HLG;
    HdrFrame f = test::random_frame(g, 7);
    HdrFrame a = hlg_to_pq(f);
    HdrFrame b = ref::hlg_to_pq_serial(f);
    for (int p = 0; p < 3; ++p)
        for (size_t i = 0; i < a.planes[p].size(); ++i)
            CHECK(std::abs(a.planes[p].v[i] - b.planes[p].v[i]) <= 1e-6f);
}

// ---------------------------------------------------------------- color

TEST_CASE("achromatic ycbcr maps to gray") {
    FrameGeometry g = test::make_geometry(4, 4, PixelLayout::YCbCr, ChromaSiting::Cs444);
    HdrFrame f = HdrFrame::make(g);
    const float neutral = float(512.0 / 1023.0);
    for (float& v : f.planes[0].v) v = 0.5f;
    for (float& v : f.planes[1].v) v = neutral;
    for (float& v : f.planes[2].v) v = neutral;
    HdrFrame rgb = ycbcr_to_rgb(f);
    CHECK(rgb.geom.layout == PixelLayout::RGB);
    CHECK(rgb.geom.transfer == f.geom.transfer);
    CHECK(rgb.geom.primaries == f.geom.primaries);
    for (size_t i = 0; i < rgb.planes[0].size(); ++i) {
        CHECK(std::abs(rgb.planes[0].v[i] - rgb.planes[1].v[i]) < 1e-6);
        CHECK(std::abs(rgb.planes[1].v[i] - rgb.planes[2].v[i]) < 1e-6);
    }
}

TEST_CASE("full-range white point maps to RGB ones") {
    FrameGeometry g = test::make_geometry(2, 2, PixelLayout::YCbCr, ChromaSiting::Cs444);
    g.range = Range::Full;
    HdrFrame f = HdrFrame::make(g);
    for (float& v : f.planes[0].v) v = 1.f;
    for (float& v : f.planes[1].v) v = float(512.0 / 1023.0);
    for (float& v : f.planes[2].v) v = float(512.0 / 1023.0);
    HdrFrame rgb = ycbcr_to_rgb(f);
    for (const Plane& p : rgb.planes)
        for (float v : p.v) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("ycbcr_to_rgb matches the matrix-inversion oracle on random frames") {
    for (uint64_t seed : {11u, 12u, 13u}) {
        FrameGeometry g = test::make_geometry(2, 2, PixelLayout::YCbCr, ChromaSiting::Cs444);
        HdrFrame f = test::random_frame(g, seed);
        HdrFrame a = ycbcr_to_rgb(f);
        HdrFrame b = ref::ycbcr_to_rgb(f);
        for (int p = 0; p < 3; ++p)
            for (size_t i = 0; i < a.planes[p].size(); ++i)
                CHECK(std::abs(a.planes[p].v[i] - b.planes[p].v[i]) <= 1e-6f);
    }
}

TEST_CASE("ycbcr_to_rgb on 420 input upsamples chroma first") {
    FrameGeometry g = test::make_geometry(8, 8, PixelLayout::YCbCr, ChromaSiting::Cs420);
    HdrFrame f = test::random_frame(g, 21);
    HdrFrame a = ycbcr_to_rgb(f);
    CHECK(a.planes[1].width == 8);
    CHECK(a.planes[1].height == 8);
    HdrFrame b = ref::ycbcr_to_rgb(f);
    for (int p = 0; p < 3; ++p)
        for (size_t i = 0; i < a.planes[p].size(); ++i)
            CHECK(std::abs(a.planes[p].v[i] - b.planes[p].v[i]) <= 1e-6f);
}

TEST_CASE("ycbcr_to_rgb rejects wrong layout and primaries") {
    FrameGeometry rgb = test::make_geometry(4, 4, PixelLayout::RGB, ChromaSiting::Cs444);
    CHECK_THROWS_AS(ycbcr_to_rgb(HdrFrame::make(rgb)), Error);
    FrameGeometry g709 = test::make_geometry(4, 4, PixelLayout::YCbCr, ChromaSiting::Cs444);
    g709.primaries = Primaries::Rec709;
    CHECK_THROWS_AS(ycbcr_to_rgb(HdrFrame::make(g709)), Error);
}

// ---------------------------------------------------------------- resample

TEST_CASE("identity resize is bit-identical") {
    FrameGeometry g = test::make_geometry(6, 4, PixelLayout::YCbCr, ChromaSiting::Cs420);
    HdrFrame f = test::random_frame(g, 5);
    HdrFrame r = rescale(f, 6, 4);
    for (int p = 0; p < 3; ++p) CHECK(r.planes[p].v == f.planes[p].v);
}

TEST_CASE("constant frames stay constant under resampling") {
    FrameGeometry g = test::make_geometry(8, 8, PixelLayout::RGB, ChromaSiting::Cs444);
    HdrFrame f = test::constant_frame(g, 0.37f);
    for (auto [w, h] : {std::pair{16, 16}, std::pair{4, 4}, std::pair{12, 6}}) {
        HdrFrame r = rescale(f, w, h);
        CHECK(r.geom.width == w);
        CHECK(r.geom.height == h);
        CHECK(r.geom.transfer == f.geom.transfer);
        for (const Plane& p : r.planes)
            for (float v : p.v) CHECK(v == doctest::Approx(0.37f).epsilon(1e-6));
    }
}

TEST_CASE("separable resampler matches the direct 2D oracle") {
    Plane src(4, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) src.at(x, y) = float(y * 4 + x) / 15.0f;
    for (ResampleFilter f :
         {ResampleFilter::Lanczos3, ResampleFilter::Bilinear, ResampleFilter::Nearest}) {
        Plane got = resample_plane(src, 2, 2, f);
        Plane want = ref::resample_plane_direct(src, 2, 2, f);
        for (size_t i = 0; i < got.size(); ++i)
            CHECK(std::abs(got.v[i] - want.v[i]) <= 1e-5f);
    }
    // also upscale, random content
    Rng rng(9);
    Plane big(7, 5);
    for (float& v : big.v) v = float(rng.uniform());
    Plane got = resample_plane(big, 13, 9, ResampleFilter::Lanczos3);
    Plane want = ref::resample_plane_direct(big, 13, 9, ResampleFilter::Lanczos3);
    for (size_t i = 0; i < got.size(); ++i)
        CHECK(std::abs(got.v[i] - want.v[i]) <= 1e-5f);
}

TEST_CASE("resample output stays in [0,1]") {
    Rng rng(17);
    Plane src(16, 16);
    for (float& v : src.v) v = rng.uniform() > 0.5 ? 1.f : 0.f;  // worst case for ringing
    Plane up = resample_plane(src, 37, 31, ResampleFilter::Lanczos3);
    for (float v : up.v) {
        CHECK(v >= 0.f);
        CHECK(v <= 1.f);
    }
}
