#pragma once

#include <array>
#include <string>
#include <vector>

#include "hdrvqa/common.hpp"

namespace hdrvqa {

enum class Transfer { PQ, HLG, Gamma709 };
enum class Primaries { Rec2020, Rec709 };
enum class PixelLayout { YCbCr, RGB };
enum class ChromaSiting { Cs444, Cs420 };
enum class Range { Limited, Full };

const char* to_string(Transfer t);
const char* to_string(Primaries p);
const char* to_string(PixelLayout l);
const char* to_string(ChromaSiting c);
const char* to_string(Range r);

Transfer transfer_from_string(std::string_view s);
Primaries primaries_from_string(std::string_view s);
PixelLayout layout_from_string(std::string_view s);
ChromaSiting chroma_from_string(std::string_view s);
Range range_from_string(std::string_view s);

// Sidecar descriptor for headerless raw video files.
struct FrameGeometry {
    int width = 0;
    int height = 0;
    int bit_depth = 10;
    PixelLayout layout = PixelLayout::YCbCr;
    ChromaSiting chroma = ChromaSiting::Cs420;
    Transfer transfer = Transfer::PQ;
    Primaries primaries = Primaries::Rec2020;
    Range range = Range::Limited;
    double fps = 25.0;

    void validate() const;
    int bytes_per_sample() const { return bit_depth > 8 ? 2 : 1; }
    // samples per frame across all three planes
    size_t samples_per_frame() const;
    size_t bytes_per_frame() const { return samples_per_frame() * size_t(bytes_per_sample()); }
};

struct Plane {
    int width = 0;
    int height = 0;
    std::vector<float> v;

    Plane() = default;
    Plane(int w, int h, float fill = 0.f) : width(w), height(h), v(size_t(w) * h, fill) {}

    float& at(int x, int y) { return v[size_t(y) * width + x]; }
    float at(int x, int y) const { return v[size_t(y) * width + x]; }
    size_t size() const { return v.size(); }
};

// One decoded frame. Plane values are code values normalized to [0,1]
// (value / (2^bit_depth - 1)); the transfer tag says how to interpret them.
struct HdrFrame {
    FrameGeometry geom;
    std::array<Plane, 3> planes;  // Y,Cb,Cr or R,G,B

    static HdrFrame make(const FrameGeometry& g, float fill = 0.f);
    void validate() const;
    bool is_ycbcr() const { return geom.layout == PixelLayout::YCbCr; }
};

}  // namespace hdrvqa
