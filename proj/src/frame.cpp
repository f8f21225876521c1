#include "hdrvqa/frame.hpp"

namespace hdrvqa {

const char* to_string(Transfer t) {
    switch (t) {
        case Transfer::PQ: return "pq";
        case Transfer::HLG: return "hlg";
        case Transfer::Gamma709: return "gamma709";
    }
    return "pq";
}
const char* to_string(Primaries p) {
    return p == Primaries::Rec2020 ? "rec2020" : "rec709";
}
const char* to_string(PixelLayout l) {
    return l == PixelLayout::YCbCr ? "ycbcr" : "rgb";
}
const char* to_string(ChromaSiting c) {
    return c == ChromaSiting::Cs444 ? "444" : "420";
}
const char* to_string(Range r) {
    return r == Range::Limited ? "limited" : "full";
}

Transfer transfer_from_string(std::string_view s) {
    if (s == "pq") return Transfer::PQ;
    if (s == "hlg") return Transfer::HLG;
    if (s == "gamma709") return Transfer::Gamma709;
    fail(ErrorClass::ConfigInvalid, "unknown transfer: " + std::string(s));
}
Primaries primaries_from_string(std::string_view s) {
    if (s == "rec2020") return Primaries::Rec2020;
    if (s == "rec709") return Primaries::Rec709;
    fail(ErrorClass::ConfigInvalid, "unknown primaries: " + std::string(s));
}
PixelLayout layout_from_string(std::string_view s) {
    if (s == "ycbcr") return PixelLayout::YCbCr;
    if (s == "rgb") return PixelLayout::RGB;
    fail(ErrorClass::ConfigInvalid, "unknown layout: " + std::string(s));
}
ChromaSiting chroma_from_string(std::string_view s) {
    if (s == "444") return ChromaSiting::Cs444;
    if (s == "420") return ChromaSiting::Cs420;
    fail(ErrorClass::ConfigInvalid, "unknown chroma siting: " + std::string(s));
}
Range range_from_string(std::string_view s) {
    if (s == "limited") return Range::Limited;
    if (s == "full") return Range::Full;
    fail(ErrorClass::ConfigInvalid, "unknown range: " + std::string(s));
}

void FrameGeometry::validate() const {
    require(width > 0 && height > 0, ErrorClass::GeometryMismatch, "non-positive frame dims");
    require(bit_depth == 8 || bit_depth == 10 || bit_depth == 12,
            ErrorClass::GeometryMismatch, "bit_depth must be 8, 10 or 12");
    require(fps > 0.0, ErrorClass::GeometryMismatch, "fps must be positive");
    if (layout == PixelLayout::RGB)
        require(chroma == ChromaSiting::Cs444, ErrorClass::GeometryMismatch,
                "RGB layout requires 444 siting");
    if (chroma == ChromaSiting::Cs420)
        require(width % 2 == 0 && height % 2 == 0, ErrorClass::GeometryMismatch,
                "420 siting requires even dims");
}

size_t FrameGeometry::samples_per_frame() const {
    size_t luma = size_t(width) * height;
    size_t chroma_px = chroma == ChromaSiting::Cs420 ? (size_t(width / 2) * (height / 2)) : luma;
    return luma + 2 * chroma_px;
}

HdrFrame HdrFrame::make(const FrameGeometry& g, float fill) {
    g.validate();
    HdrFrame f;
    f.geom = g;
    int cw = g.chroma == ChromaSiting::Cs420 ? g.width / 2 : g.width;
    int ch = g.chroma == ChromaSiting::Cs420 ? g.height / 2 : g.height;
    f.planes[0] = Plane(g.width, g.height, fill);
    f.planes[1] = Plane(cw, ch, fill);
    f.planes[2] = Plane(cw, ch, fill);
    return f;
}

void HdrFrame::validate() const {
    geom.validate();
    require(planes[0].width == geom.width && planes[0].height == geom.height,
            ErrorClass::GeometryMismatch, "luma plane dims do not match geometry");
    int cw = geom.chroma == ChromaSiting::Cs420 ? geom.width / 2 : geom.width;
    int ch = geom.chroma == ChromaSiting::Cs420 ? geom.height / 2 : geom.height;
    for (int p = 1; p < 3; ++p)
        require(planes[p].width == cw && planes[p].height == ch,
                ErrorClass::GeometryMismatch, "chroma plane dims do not match geometry");
    for (const Plane& p : planes)
        for (float x : p.v)
            require(x >= 0.f && x <= 1.f, ErrorClass::DomainError,
                    "plane value outside [0,1]");
}

}  // namespace hdrvqa
