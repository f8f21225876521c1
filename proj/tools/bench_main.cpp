// Compares the OpenMP production kernels against the serial reference
// implementations used by the test suites.

#include <benchmark/benchmark.h>

#include "hdrvqa/color.hpp"
#include "hdrvqa/loss.hpp"
#include "hdrvqa/nn.hpp"
#include "hdrvqa/resample.hpp"
#include "hdrvqa/transfer.hpp"
#include "ref/reference.hpp"

using namespace hdrvqa;

namespace {

HdrFrame random_rgb_frame(int w, int h, uint64_t seed, Transfer tf) {
    FrameGeometry g;
    g.width = w;
    g.height = h;
    g.layout = PixelLayout::RGB;
    g.chroma = ChromaSiting::Cs444;
    g.transfer = tf;
    g.range = Range::Full;
    HdrFrame f = HdrFrame::make(g);
    Rng rng(seed);
    for (Plane& p : f.planes)
        for (float& v : p.v) v = float(rng.uniform());
    return f;
}

HdrFrame random_ycbcr_frame(int w, int h, uint64_t seed) {
    FrameGeometry g;
    g.width = w;
    g.height = h;
    g.layout = PixelLayout::YCbCr;
    g.chroma = ChromaSiting::Cs420;
    HdrFrame f = HdrFrame::make(g);
    Rng rng(seed);
    for (Plane& p : f.planes)
        for (float& v : p.v) v = float(rng.uniform());
    return f;
}

LabeledBatch random_batch(int n, int k, uint64_t seed) {
    LabeledBatch b;
    b.n = n;
    b.k = k;
    b.tau = 0.1;
    b.z.resize(size_t(n) * k);
    Rng rng(seed);
    for (double& v : b.z) v = rng.normal();
    b.labels.resize(n);
    b.ugc_mask.assign(n, 1);
    for (int i = 0; i < n; ++i) b.labels[i] = i / 2;
    return b;
}

void BM_HlgToPq_Serial(benchmark::State& state) {
    HdrFrame f = random_rgb_frame(1920, 1080, 1, Transfer::HLG);
    for (auto _ : state) benchmark::DoNotOptimize(ref::hlg_to_pq_serial(f));
}
void BM_HlgToPq_Omp(benchmark::State& state) {
    HdrFrame f = random_rgb_frame(1920, 1080, 1, Transfer::HLG);
    for (auto _ : state) benchmark::DoNotOptimize(hlg_to_pq(f));
}

void BM_YcbcrToRgb_Serial(benchmark::State& state) {
    HdrFrame f = random_ycbcr_frame(1920, 1080, 2);
    for (auto _ : state) benchmark::DoNotOptimize(ref::ycbcr_to_rgb(f));
}
void BM_YcbcrToRgb_Omp(benchmark::State& state) {
    HdrFrame f = random_ycbcr_frame(1920, 1080, 2);
    for (auto _ : state) benchmark::DoNotOptimize(ycbcr_to_rgb(f));
}

void BM_Resample_SerialDirect(benchmark::State& state) {
    HdrFrame f = random_rgb_frame(512, 512, 3, Transfer::PQ);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            ref::resample_plane_direct(f.planes[0], 256, 256, ResampleFilter::Lanczos3));
}
void BM_Resample_Omp(benchmark::State& state) {
    HdrFrame f = random_rgb_frame(512, 512, 3, Transfer::PQ);
    for (auto _ : state)
        benchmark::DoNotOptimize(resample_plane(f.planes[0], 256, 256, ResampleFilter::Lanczos3));
}

void BM_TotalLoss_Serial(benchmark::State& state) {
    LabeledBatch b = random_batch(256, 128, 4);
    for (auto _ : state) benchmark::DoNotOptimize(ref::total_loss(b));
}
void BM_TotalLoss_Omp(benchmark::State& state) {
    LabeledBatch b = random_batch(256, 128, 4);
    for (auto _ : state) benchmark::DoNotOptimize(total_loss(b));
}
void BM_TotalLossGrad_Omp(benchmark::State& state) {
    LabeledBatch b = random_batch(256, 128, 4);
    std::vector<double> grad;
    for (auto _ : state) benchmark::DoNotOptimize(total_loss_grad(b, grad));
}

void BM_Conv2d_SerialNaive(benchmark::State& state) {
    Rng rng(5);
    int n = 8, c = 16, h = 32, w = 32, oc = 32;
    std::vector<float> x(size_t(n) * c * h * w), wt(size_t(oc) * c * 9);
    for (float& v : x) v = float(rng.uniform());
    for (float& v : wt) v = float(rng.normal() * 0.05);
    for (auto _ : state)
        benchmark::DoNotOptimize(ref::conv2d_naive(x, n, c, h, w, wt, oc, 3, 3, 1, 1));
}
void BM_Conv2d_Im2colOmp(benchmark::State& state) {
    Rng rng(5);
    int n = 8, c = 16, h = 32, w = 32, oc = 32;
    Tensor x(n, c, h, w);
    for (float& v : x.v) v = float(rng.uniform());
    auto conv = make_conv2d("bench", c, oc, 3, 1, 1, rng);
    for (auto _ : state) benchmark::DoNotOptimize(conv->forward(x, false));
}

}  // namespace

BENCHMARK(BM_HlgToPq_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HlgToPq_Omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_YcbcrToRgb_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_YcbcrToRgb_Omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Resample_SerialDirect)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Resample_Omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TotalLoss_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TotalLoss_Omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TotalLossGrad_Omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv2d_SerialNaive)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv2d_Im2colOmp)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
