#include "hdrvqa/color.hpp"

#include <algorithm>
#include <cmath>

namespace hdrvqa {

namespace {

// Rec.2020 NCL luma coefficients
constexpr double kKr = 0.2627;
constexpr double kKb = 0.0593;

struct RangeExpand {
    // normalized code -> full-range signal; luma in [0,1], chroma in [-0.5,0.5]
    double y_scale, y_off, c_scale, c_off;
};

RangeExpand make_expand(const FrameGeometry& g) {
    const double maxv = double((1 << g.bit_depth) - 1);
    if (g.range == Range::Full) {
        return {1.0, 0.0, 1.0, double(1 << (g.bit_depth - 1)) / maxv};
    }
    const double unit = double(1 << (g.bit_depth - 8));
    return {maxv / (219.0 * unit), 16.0 * unit / maxv,
            maxv / (224.0 * unit), double(1 << (g.bit_depth - 1)) / maxv};
}

inline float clip01(double v) { return float(std::min(std::max(v, 0.0), 1.0)); }

}  // namespace

HdrFrame upsample_chroma_444(const HdrFrame& frame) {
    if (frame.geom.chroma == ChromaSiting::Cs444) return frame;
    require(frame.geom.layout == PixelLayout::YCbCr, ErrorClass::LayoutMismatch,
            "chroma upsampling applies to YCbCr frames");

    FrameGeometry g = frame.geom;
    g.chroma = ChromaSiting::Cs444;
    HdrFrame out = HdrFrame::make(g);
    out.planes[0] = frame.planes[0];

    for (int p = 1; p < 3; ++p) {
        const Plane& src = frame.planes[p];
        Plane& dst = out.planes[p];
#pragma omp parallel for schedule(static)
        for (int y = 0; y < dst.height; ++y) {
            // co-sited: chroma sample (cx,cy) coincides with luma (2cx,2cy)
            double fy = y * 0.5;
            int y0 = int(fy);
            int y1 = std::min(y0 + 1, src.height - 1);
            double wy = fy - y0;
            for (int x = 0; x < dst.width; ++x) {
                double fx = x * 0.5;
                int x0 = int(fx);
                int x1 = std::min(x0 + 1, src.width - 1);
                double wx = fx - x0;
                double v = (1 - wy) * ((1 - wx) * src.at(x0, y0) + wx * src.at(x1, y0)) +
                           wy * ((1 - wx) * src.at(x0, y1) + wx * src.at(x1, y1));
                dst.at(x, y) = float(v);
            }
        }
    }
    return out;
}

HdrFrame ycbcr_to_rgb(const HdrFrame& frame) {
    require(frame.geom.layout == PixelLayout::YCbCr, ErrorClass::LayoutMismatch,
            "ycbcr_to_rgb: input is not YCbCr");
    require(frame.geom.primaries == Primaries::Rec2020, ErrorClass::DomainError,
            "ycbcr_to_rgb: only Rec2020 primaries supported");

    HdrFrame full = upsample_chroma_444(frame);
    const RangeExpand ex = make_expand(full.geom);

    FrameGeometry g = full.geom;
    g.layout = PixelLayout::RGB;
    g.range = Range::Full;
    HdrFrame out = HdrFrame::make(g);

    const double kg = 1.0 - kKr - kKb;
    const double cr_r = 2.0 * (1.0 - kKr);
    const double cb_b = 2.0 * (1.0 - kKb);
    const double cb_g = kKb * cb_b / kg;
    const double cr_g = kKr * cr_r / kg;

    const Plane& yp = full.planes[0];
    const Plane& cbp = full.planes[1];
    const Plane& crp = full.planes[2];
    const int64_t n = int64_t(yp.size());

#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
        double y = (double(yp.v[i]) - ex.y_off) * ex.y_scale;
        double cb = (double(cbp.v[i]) - ex.c_off) * ex.c_scale;
        double cr = (double(crp.v[i]) - ex.c_off) * ex.c_scale;
        out.planes[0].v[i] = clip01(y + cr_r * cr);
        out.planes[1].v[i] = clip01(y - cb_g * cb - cr_g * cr);
        out.planes[2].v[i] = clip01(y + cb_b * cb);
    }
    return out;
}

}  // namespace hdrvqa
