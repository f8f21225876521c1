#include "reference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hdrvqa/color.hpp"

namespace hdrvqa::ref {

namespace {

// 3x3 inverse by cofactors
void invert3(const double m[3][3], double inv[3][3]) {
    double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                 m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                 m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    double id = 1.0 / det;
    inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * id;
    inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * id;
    inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * id;
    inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * id;
    inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * id;
    inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * id;
    inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * id;
    inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * id;
    inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * id;
}

}  // namespace

HdrFrame ycbcr_to_rgb(const HdrFrame& frame) {
    // forward Rec.2020 NCL matrix: Y = Kr R + Kg G + Kb B,
    // Cb = (B - Y) / (2(1-Kb)), Cr = (R - Y) / (2(1-Kr))
    const double kr = 0.2627, kb = 0.0593, kg = 1.0 - kr - kb;
    const double fwd[3][3] = {
        {kr, kg, kb},
        {-kr / (2 * (1 - kb)), -kg / (2 * (1 - kb)), (1 - kb) / (2 * (1 - kb))},
        {(1 - kr) / (2 * (1 - kr)), -kg / (2 * (1 - kr)), -kb / (2 * (1 - kr))},
    };
    double inv[3][3];
    invert3(fwd, inv);

    HdrFrame up = frame;
    if (frame.geom.chroma == ChromaSiting::Cs420) {
        // reuse of the production upsampler is deliberate: the oracle targets
        // the range expansion + matrix, which is what differs
        up = hdrvqa::upsample_chroma_444(frame);
    }

    const int d = up.geom.bit_depth;
    const double maxv = double((1 << d) - 1);
    const double unit = double(1 << (d - 8));
    const bool limited = up.geom.range == Range::Limited;

    FrameGeometry g = up.geom;
    g.layout = PixelLayout::RGB;
    g.range = Range::Full;
    HdrFrame out = HdrFrame::make(g);

    for (size_t i = 0; i < up.planes[0].size(); ++i) {
        double code[3] = {up.planes[0].v[i], up.planes[1].v[i], up.planes[2].v[i]};
        double ycc[3];
        if (limited) {
            ycc[0] = (code[0] * maxv - 16.0 * unit) / (219.0 * unit);
            ycc[1] = (code[1] * maxv - 128.0 * unit) / (224.0 * unit);
            ycc[2] = (code[2] * maxv - 128.0 * unit) / (224.0 * unit);
        } else {
            ycc[0] = code[0];
            ycc[1] = code[1] - double(1 << (d - 1)) / maxv;
            ycc[2] = code[2] - double(1 << (d - 1)) / maxv;
        }
        for (int r = 0; r < 3; ++r) {
            double v = inv[r][0] * ycc[0] + inv[r][1] * ycc[1] + inv[r][2] * ycc[2];
            out.planes[r].v[i] = float(std::min(std::max(v, 0.0), 1.0));
        }
    }
    return out;
}

namespace {

double lanczos_sinc(double x) {
    if (x == 0.0) return 1.0;
    double p = 3.141592653589793 * x;
    return std::sin(p) / p;
}

double kval(ResampleFilter f, double x) {
    switch (f) {
        case ResampleFilter::Lanczos3:
            return std::abs(x) < 3.0 ? lanczos_sinc(x) * lanczos_sinc(x / 3.0) : 0.0;
        case ResampleFilter::Bilinear:
            return std::max(0.0, 1.0 - std::abs(x));
        case ResampleFilter::Nearest:
            return (x >= -0.5 && x < 0.5) ? 1.0 : 0.0;
    }
    return 0.0;
}

double ksup(ResampleFilter f) {
    return f == ResampleFilter::Lanczos3 ? 3.0 : (f == ResampleFilter::Bilinear ? 1.0 : 0.5);
}

}  // namespace

Plane resample_plane_direct(const Plane& src, int out_w, int out_h, ResampleFilter filter) {
    Plane dst(out_w, out_h);
    double sx = double(src.width) / out_w;
    double sy = double(src.height) / out_h;
    double fx = std::max(sx, 1.0), fy = std::max(sy, 1.0);
    double supx = ksup(filter) * fx, supy = ksup(filter) * fy;

    for (int oy = 0; oy < out_h; ++oy) {
        double cy = (oy + 0.5) * sy - 0.5;
        int y0 = int(std::floor(cy - supy + 0.5));
        int ny = std::max(1, int(std::ceil(supy * 2.0)));
        for (int ox = 0; ox < out_w; ++ox) {
            double cx = (ox + 0.5) * sx - 0.5;
            int x0 = int(std::floor(cx - supx + 0.5));
            int nx = std::max(1, int(std::ceil(supx * 2.0)));
            double acc = 0.0, wsum = 0.0;
            for (int iy = 0; iy < ny; ++iy) {
                double wy = kval(filter, (y0 + iy - cy) / fy);
                if (wy == 0.0) continue;
                int syi = std::clamp(y0 + iy, 0, src.height - 1);
                for (int ix = 0; ix < nx; ++ix) {
                    double wx = kval(filter, (x0 + ix - cx) / fx);
                    if (wx == 0.0) continue;
                    int sxi = std::clamp(x0 + ix, 0, src.width - 1);
                    acc += wy * wx * src.at(sxi, syi);
                    wsum += wy * wx;
                }
            }
            dst.at(ox, oy) = float(std::min(std::max(acc / wsum, 0.0), 1.0));
        }
    }
    return dst;
}

HdrFrame hlg_to_pq_serial(const HdrFrame& frame, double peak_nits) {
    const double a = 0.17883277, b = 1.0 - 4.0 * a, c = 0.5 - a * std::log(4.0 * a);
    const double gamma = 1.2 + 0.42 * std::log10(peak_nits / 1000.0);
    const double m1 = 2610.0 / 16384.0, m2 = 2523.0 / 4096.0 * 128.0;
    const double c1 = 3424.0 / 4096.0, c2 = 2413.0 / 4096.0 * 32.0, c3 = 2392.0 / 4096.0 * 32.0;

    auto inv_oetf = [&](double e) {
        return e <= 0.5 ? e * e / 3.0 : (std::exp((e - c) / a) + b) / 12.0;
    };
    auto pq = [&](double nits) {
        if (nits <= 0.0) return 0.0;
        double yp = std::pow(nits / 10000.0, m1);
        return std::pow((c1 + c2 * yp) / (1.0 + c3 * yp), m2);
    };

    HdrFrame out = frame;
    out.geom.transfer = Transfer::PQ;
    for (size_t i = 0; i < frame.planes[0].size(); ++i) {
        double rs = inv_oetf(frame.planes[0].v[i]);
        double gs = inv_oetf(frame.planes[1].v[i]);
        double bs = inv_oetf(frame.planes[2].v[i]);
        double ys = 0.2627 * rs + 0.6780 * gs + 0.0593 * bs;
        double gain = ys > 0.0 ? peak_nits * std::pow(ys, gamma - 1.0) : 0.0;
        out.planes[0].v[i] = float(pq(std::min(gain * rs, 10000.0)));
        out.planes[1].v[i] = float(pq(std::min(gain * gs, 10000.0)));
        out.planes[2].v[i] = float(pq(std::min(gain * bs, 10000.0)));
    }
    return out;
}

double cosine(const std::vector<double>& u, const std::vector<double>& v) {
    double d = 0, a = 0, b = 0;
    for (size_t i = 0; i < u.size(); ++i) {
        d += u[i] * v[i];
        a += u[i] * u[i];
        b += v[i] * v[i];
    }
    return d / (std::sqrt(a) * std::sqrt(b));
}

namespace {

std::vector<double> batch_row(const LabeledBatch& b, int i) {
    return std::vector<double>(b.row(i), b.row(i) + b.k);
}

double denom(const LabeledBatch& b, int i) {
    double s = 0;
    for (int k = 0; k < b.n; ++k) {
        if (k == i) continue;
        s += std::exp(cosine(batch_row(b, i), batch_row(b, k)) / b.tau);
    }
    return s;
}

}  // namespace

double ntxent_pairwise(const LabeledBatch& b, int anchor, int positive) {
    double num = std::exp(cosine(batch_row(b, anchor), batch_row(b, positive)) / b.tau);
    return -std::log(num / denom(b, anchor));
}

double ntxent_syn(const LabeledBatch& b, int anchor) {
    double acc = 0;
    int cnt = 0;
    for (int j = 0; j < b.n; ++j) {
        if (j == anchor || b.labels[j] != b.labels[anchor]) continue;
        double num = std::exp(cosine(batch_row(b, anchor), batch_row(b, j)) / b.tau);
        acc += -std::log(num / denom(b, anchor));
        ++cnt;
    }
    return acc / cnt;
}

double total_loss(const LabeledBatch& b) {
    double acc = 0;
    for (int i = 0; i < b.n; ++i) {
        if (b.ugc_mask[i]) {
            int pos = -1;
            for (int j = 0; j < b.n; ++j)
                if (j != i && b.labels[j] == b.labels[i]) pos = j;
            acc += ref::ntxent_pairwise(b, i, pos);
        } else {
            acc += ref::ntxent_syn(b, i);
        }
    }
    return acc / b.n;
}

std::vector<float> conv2d_naive(const std::vector<float>& x, int n, int c, int h, int w,
                                const std::vector<float>& weight, int oc, int kh, int kw,
                                int stride, int pad) {
    int oh = (h + 2 * pad - kh) / stride + 1;
    int ow = (w + 2 * pad - kw) / stride + 1;
    std::vector<float> y(size_t(n) * oc * oh * ow, 0.f);
    for (int in = 0; in < n; ++in)
        for (int o = 0; o < oc; ++o)
            for (int yy = 0; yy < oh; ++yy)
                for (int xx = 0; xx < ow; ++xx) {
                    double acc = 0;
                    for (int ic = 0; ic < c; ++ic)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx) {
                                int sy = yy * stride + ky - pad;
                                int sx = xx * stride + kx - pad;
                                if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                                acc += double(x[((size_t(in) * c + ic) * h + sy) * w + sx]) *
                                       double(weight[((size_t(o) * c + ic) * kh + ky) * kw + kx]);
                            }
                    y[((size_t(in) * oc + o) * oh + yy) * ow + xx] = float(acc);
                }
    return y;
}

void gemm_naive(int m, int n, int k, const float* a, const float* b, float* c) {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0;
            for (int p = 0; p < k; ++p) acc += double(a[size_t(i) * k + p]) * double(b[size_t(p) * n + j]);
            c[size_t(i) * n + j] += float(acc);
        }
}

double srocc_no_ties(const std::vector<double>& a, const std::vector<double>& b) {
    size_t n = a.size();
    auto ranks = [&](const std::vector<double>& v) {
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int i, int j) { return v[i] < v[j]; });
        std::vector<double> r(n);
        for (size_t i = 0; i < n; ++i) r[idx[i]] = double(i) + 1.0;
        return r;
    };
    std::vector<double> ra = ranks(a), rb = ranks(b);
    double sum_d2 = 0;
    for (size_t i = 0; i < n; ++i) sum_d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
    double nn = double(n);
    return 1.0 - 6.0 * sum_d2 / (nn * (nn * nn - 1.0));
}

}  // namespace hdrvqa::ref
