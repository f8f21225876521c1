#include "support/toy_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "hdrvqa/raw_io.hpp"
#include "hdrvqa/resample.hpp"

namespace hdrvqa::test {

namespace fs = std::filesystem;

HdrFrame toy_content_frame(int size, uint64_t seed) {
    FrameGeometry g;
    g.width = size;
    g.height = size;
    g.bit_depth = 10;
    g.layout = PixelLayout::RGB;
    g.chroma = ChromaSiting::Cs444;
    g.transfer = Transfer::PQ;
    g.primaries = Primaries::Rec2020;
    g.range = Range::Full;
    g.fps = 0.1;  // 1 frame per 10 s clip
    HdrFrame f = HdrFrame::make(g);

    Rng rng(seed);
    // a handful of oriented gratings + a gradient, shared across channels
    // with per-channel gains so chroma carries content too
    const int waves = 6;
    std::vector<double> fx(waves), fy(waves), ph(waves), amp(waves);
    for (int k = 0; k < waves; ++k) {
        fx[k] = (rng.uniform() * 2 - 1) * 0.5;
        fy[k] = (rng.uniform() * 2 - 1) * 0.5;
        ph[k] = rng.uniform() * 6.2831853;
        amp[k] = rng.uniform() / (1.0 + k);
    }
    double gx = rng.uniform() * 2 - 1, gy = rng.uniform() * 2 - 1;
    double gain[3] = {0.8 + 0.4 * rng.uniform(), 0.8 + 0.4 * rng.uniform(),
                      0.8 + 0.4 * rng.uniform()};
    // sprinkle texture so compression-style quantization bites
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double v = 0.5 * (gx * x + gy * y) / size;
            for (int k = 0; k < waves; ++k)
                v += amp[k] * std::sin(fx[k] * x + fy[k] * y + ph[k]);
            double noise = rng.uniform() * 0.14 - 0.07;
            for (int c = 0; c < 3; ++c) {
                double s = 0.5 + 0.30 * std::tanh(v * gain[c]) + noise;
                f.planes[c].at(x, y) = float(std::clamp(s, 0.02, 0.98));
            }
        }
    return f;
}

namespace {

// ladder analog at desk scale: (resolution divisor, quantization levels)
struct ToyRung {
    int divisor;
    int levels;
};

const ToyRung kToyRungs[9] = {
    {1, 48}, {1, 24}, {1, 12},  // full-res, falling "bitrate"
    {2, 32}, {2, 16}, {2, 6},   // half-res
    {3, 20}, {3, 10},           // third-res
    {4, 12},                    // quarter-res
};

}  // namespace

HdrFrame toy_distort(const HdrFrame& frame, int distortion_class) {
    require(distortion_class >= 0 && distortion_class <= 9, ErrorClass::DomainError,
            "toy distortion class out of range");
    if (distortion_class == 0) return frame;
    const ToyRung rung = kToyRungs[distortion_class - 1];
    int w = frame.geom.width, h = frame.geom.height;
    HdrFrame small = rescale(frame, std::max(4, w / rung.divisor),
                             std::max(4, h / rung.divisor));
    for (Plane& p : small.planes)
        for (float& v : p.v) {
            // midtread quantizer, the "compression" proxy
            v = std::round(v * float(rung.levels - 1)) / float(rung.levels - 1);
        }
    return rescale(small, w, h);
}

ToyCorpus make_toy_corpus(const std::string& dir, int n_contents, int frame_size,
                          uint64_t seed) {
    fs::create_directories(dir);
    ToyCorpus corpus;
    corpus.manifest.global_seed = seed;
    for (int r = 0; r < 9; ++r) {
        LadderRung lr;
        lr.name = "toy-r" + std::to_string(r + 1);
        lr.width = frame_size;
        lr.height = frame_size;
        lr.bitrate_mbps = 9.0 - r;
        corpus.manifest.ladder.push_back(lr);
    }
    for (int c = 0; c < n_contents; ++c) {
        HdrFrame content = toy_content_frame(frame_size, seed * 1000 + uint64_t(c));
        for (int cls = 0; cls <= 9; ++cls) {
            HdrFrame frame = toy_distort(content, cls);
            std::string clip_id = "content" + std::to_string(c) + "_cls" + std::to_string(cls);
            std::string path = (fs::path(dir) / (clip_id + ".raw")).string();
            save_frames(path, {frame});
            save_geometry(default_sidecar_path(path), frame.geom);

            ClipRecord rec;
            rec.source_id = "content" + std::to_string(c);
            rec.clip_id = clip_id;
            rec.scene_start = 0;
            rec.clip_start = 0;
            rec.duration = 10.0;
            rec.distortion_class = cls;
            rec.path = path;
            rec.rng_seed = seed;
            rec.sampled_frame = 0;
            corpus.manifest.clips.push_back(rec);
            corpus.class_of[clip_id] = cls;
            corpus.content_of[clip_id] = c;
        }
    }
    return corpus;
}

void LinearProbe::fit(const std::vector<std::vector<float>>& x, const std::vector<int>& y,
                      int n_classes, int epochs, double lr, uint64_t seed) {
    require(!x.empty() && x.size() == y.size(), ErrorClass::DimensionMismatch,
            "probe: bad shapes");
    const size_t n = x.size(), d = x[0].size();
    classes_ = n_classes;
    mean_.assign(d, 0.0);
    scale_.assign(d, 1.0);
    for (const auto& row : x)
        for (size_t j = 0; j < d; ++j) mean_[j] += row[j];
    for (size_t j = 0; j < d; ++j) mean_[j] /= double(n);
    std::vector<double> var(d, 0.0);
    for (const auto& row : x)
        for (size_t j = 0; j < d; ++j) var[j] += (row[j] - mean_[j]) * (row[j] - mean_[j]);
    for (size_t j = 0; j < d; ++j) {
        double s = std::sqrt(var[j] / double(std::max<size_t>(n - 1, 1)));
        scale_[j] = s > 1e-12 ? s : 1.0;
    }

    std::vector<std::vector<double>> xs(n, std::vector<double>(d));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < d; ++j) xs[i][j] = (x[i][j] - mean_[j]) / scale_[j];

    w_.assign(size_t(n_classes) * d, 0.0);
    b_.assign(size_t(n_classes), 0.0);
    std::vector<double> mw(w_.size(), 0.0), mb(b_.size(), 0.0);
    std::vector<double> logits(n_classes), p(n_classes);
    std::vector<double> gw(w_.size()), gb(b_.size());
    (void)seed;

    for (int e = 0; e < epochs; ++e) {
        std::fill(gw.begin(), gw.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
        for (size_t i = 0; i < n; ++i) {
            double mx = -1e300;
            for (int c = 0; c < n_classes; ++c) {
                double s = b_[c];
                const double* wc = w_.data() + size_t(c) * d;
                for (size_t j = 0; j < d; ++j) s += wc[j] * xs[i][j];
                logits[c] = s;
                mx = std::max(mx, s);
            }
            double z = 0;
            for (int c = 0; c < n_classes; ++c) {
                p[c] = std::exp(logits[c] - mx);
                z += p[c];
            }
            for (int c = 0; c < n_classes; ++c) {
                double g = p[c] / z - (c == y[i] ? 1.0 : 0.0);
                gb[c] += g;
                double* gwc = gw.data() + size_t(c) * d;
                for (size_t j = 0; j < d; ++j) gwc[j] += g * xs[i][j];
            }
        }
        const double inv = 1.0 / double(n);
        const double wd = 1e-4;
        for (size_t k = 0; k < w_.size(); ++k) {
            mw[k] = 0.9 * mw[k] + gw[k] * inv + wd * w_[k];
            w_[k] -= lr * mw[k];
        }
        for (size_t k = 0; k < b_.size(); ++k) {
            mb[k] = 0.9 * mb[k] + gb[k] * inv;
            b_[k] -= lr * mb[k];
        }
    }
}

int LinearProbe::predict_one(const std::vector<float>& x) const {
    const size_t d = mean_.size();
    int best = 0;
    double best_s = -1e300;
    for (int c = 0; c < classes_; ++c) {
        double s = b_[c];
        const double* wc = w_.data() + size_t(c) * d;
        for (size_t j = 0; j < d; ++j) s += wc[j] * (x[j] - mean_[j]) / scale_[j];
        if (s > best_s) {
            best_s = s;
            best = c;
        }
    }
    return best;
}

double LinearProbe::accuracy(const std::vector<std::vector<float>>& x,
                             const std::vector<int>& y) const {
    size_t hit = 0;
    for (size_t i = 0; i < x.size(); ++i)
        if (predict_one(x[i]) == y[i]) ++hit;
    return double(hit) / double(x.size());
}

}  // namespace hdrvqa::test
