#pragma once

// Serial reference implementations kept for testing the parallel kernels.
// Everything here is written independently of src/: direct transcriptions of
// the defining formulas, single-threaded, double precision. The benchmark
// target compares these against the production kernels; the test suites use
// them as oracles.

#include <vector>

#include "hdrvqa/frame.hpp"
#include "hdrvqa/loss.hpp"
#include "hdrvqa/resample.hpp"

namespace hdrvqa::ref {

// Y'CbCr -> R'G'B' via explicit 3x3 matrix inversion of the forward
// (RGB -> YCbCr) matrix, one matrix-vector multiply per pixel.
HdrFrame ycbcr_to_rgb(const HdrFrame& frame);

// Full 2D tensor-product kernel evaluated directly per output pixel.
Plane resample_plane_direct(const Plane& src, int out_w, int out_h, ResampleFilter filter);

// Serial twin of hlg_to_pq.
HdrFrame hlg_to_pq_serial(const HdrFrame& frame, double peak_nits = 1000.0);

// NT-Xent family, explicit loops, no shared code with src/loss.cpp.
double cosine(const std::vector<double>& u, const std::vector<double>& v);
double ntxent_syn(const LabeledBatch& b, int anchor);
double ntxent_pairwise(const LabeledBatch& b, int anchor, int positive);
double total_loss(const LabeledBatch& b);

// Naive convolution: x [n,c,h,w], w [oc,c,kh,kw], returns [n,oc,oh,ow].
std::vector<float> conv2d_naive(const std::vector<float>& x, int n, int c, int h, int w,
                                const std::vector<float>& weight, int oc, int kh, int kw,
                                int stride, int pad);

// C[m,n] += A[m,k] * B[k,n], triple loop.
void gemm_naive(int m, int n, int k, const float* a, const float* b, float* c);

// Spearman for tie-free data via the rank-difference shortcut.
double srocc_no_ties(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace hdrvqa::ref
