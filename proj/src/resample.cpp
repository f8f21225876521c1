#include "hdrvqa/resample.hpp"

#include <algorithm>
#include <cmath>

namespace hdrvqa {

const char* to_string(ResampleFilter f) {
    switch (f) {
        case ResampleFilter::Lanczos3: return "lanczos3";
        case ResampleFilter::Bilinear: return "bilinear";
        case ResampleFilter::Nearest: return "nearest";
    }
    return "lanczos3";
}

ResampleFilter filter_from_string(std::string_view s) {
    if (s == "lanczos3") return ResampleFilter::Lanczos3;
    if (s == "bilinear") return ResampleFilter::Bilinear;
    if (s == "nearest") return ResampleFilter::Nearest;
    fail(ErrorClass::ConfigInvalid, "unknown resample filter: " + std::string(s));
}

namespace {

double sinc(double x) {
    if (x == 0.0) return 1.0;
    double px = 3.141592653589793 * x;
    return std::sin(px) / px;
}

double kernel_value(ResampleFilter f, double x) {
    switch (f) {
        case ResampleFilter::Lanczos3:
            return std::abs(x) < 3.0 ? sinc(x) * sinc(x / 3.0) : 0.0;
        case ResampleFilter::Bilinear:
            return std::max(0.0, 1.0 - std::abs(x));
        case ResampleFilter::Nearest:
            return (x >= -0.5 && x < 0.5) ? 1.0 : 0.0;
    }
    return 0.0;
}

double kernel_support(ResampleFilter f) {
    switch (f) {
        case ResampleFilter::Lanczos3: return 3.0;
        case ResampleFilter::Bilinear: return 1.0;
        case ResampleFilter::Nearest: return 0.5;
    }
    return 3.0;
}

struct Taps {
    int stride = 0;                // taps per output sample
    std::vector<int> first;        // first source index per output sample
    std::vector<double> weight;    // stride weights per output sample
};

// One resampling axis: center-aligned mapping, kernel widened when
// minifying, weights normalized, source indices clamped to the edge.
Taps make_taps(int in_n, int out_n, ResampleFilter f) {
    Taps t;
    double scale = double(in_n) / out_n;
    double filter_scale = std::max(scale, 1.0);
    double support = kernel_support(f) * filter_scale;
    t.stride = std::max(1, int(std::ceil(support * 2.0)));
    t.first.resize(out_n);
    t.weight.assign(size_t(out_n) * t.stride, 0.0);

    for (int o = 0; o < out_n; ++o) {
        double center = (o + 0.5) * scale - 0.5;
        int lo = int(std::floor(center - support + 0.5));
        t.first[o] = lo;
        double sum = 0.0;
        for (int k = 0; k < t.stride; ++k) {
            double w = kernel_value(f, (lo + k - center) / filter_scale);
            t.weight[size_t(o) * t.stride + k] = w;
            sum += w;
        }
        if (sum != 0.0)
            for (int k = 0; k < t.stride; ++k) t.weight[size_t(o) * t.stride + k] /= sum;
    }
    return t;
}

}  // namespace

Plane resample_plane(const Plane& src, int out_w, int out_h, ResampleFilter filter) {
    require(out_w > 0 && out_h > 0, ErrorClass::DomainError, "target dims must be positive");
    if (out_w == src.width && out_h == src.height) return src;

    Taps hx = make_taps(src.width, out_w, filter);
    Taps vy = make_taps(src.height, out_h, filter);

    // horizontal pass (double intermediates keep the vertical pass clean)
    std::vector<double> tmp(size_t(out_w) * src.height);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < src.height; ++y) {
        const float* row = src.v.data() + size_t(y) * src.width;
        for (int x = 0; x < out_w; ++x) {
            const double* w = hx.weight.data() + size_t(x) * hx.stride;
            int lo = hx.first[x];
            double acc = 0.0;
            for (int k = 0; k < hx.stride; ++k) {
                int sx = std::clamp(lo + k, 0, src.width - 1);
                acc += w[k] * row[sx];
            }
            tmp[size_t(y) * out_w + x] = acc;
        }
    }

    Plane dst(out_w, out_h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < out_h; ++y) {
        const double* w = vy.weight.data() + size_t(y) * vy.stride;
        int lo = vy.first[y];
        for (int x = 0; x < out_w; ++x) {
            double acc = 0.0;
            for (int k = 0; k < vy.stride; ++k) {
                int sy = std::clamp(lo + k, 0, src.height - 1);
                acc += w[k] * tmp[size_t(sy) * out_w + x];
            }
            dst.at(x, y) = float(std::min(std::max(acc, 0.0), 1.0));
        }
    }
    return dst;
}

HdrFrame rescale(const HdrFrame& frame, int width, int height, ResampleFilter filter) {
    require(width > 0 && height > 0, ErrorClass::DomainError, "target dims must be positive");
    if (width == frame.geom.width && height == frame.geom.height) return frame;

    FrameGeometry g = frame.geom;
    g.width = width;
    g.height = height;
    g.validate();

    HdrFrame out;
    out.geom = g;
    bool sub = g.chroma == ChromaSiting::Cs420;
    out.planes[0] = resample_plane(frame.planes[0], width, height, filter);
    int cw = sub ? width / 2 : width;
    int ch = sub ? height / 2 : height;
    out.planes[1] = resample_plane(frame.planes[1], cw, ch, filter);
    out.planes[2] = resample_plane(frame.planes[2], cw, ch, filter);
    return out;
}

}  // namespace hdrvqa
