#pragma once

#include <vector>

#include "hdrvqa/common.hpp"

namespace hdrvqa {

// Dense NCHW float tensor. Vectors ride along as n x c x 1 x 1.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_, float fill = 0.f)
        : n(n_), c(c_), h(h_), w(w_), v(size_t(n_) * c_ * h_ * w_, fill) {}

    size_t image_size() const { return size_t(c) * h * w; }
    size_t size() const { return v.size(); }
    float* image(int i) { return v.data() + size_t(i) * image_size(); }
    const float* image(int i) const { return v.data() + size_t(i) * image_size(); }
    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
};

// C[m,n] (+)= A[m,k] * B[k,n]; single-threaded, call sites own the parallelism.
void gemm(int m, int n, int k, const float* a, const float* b, float* c,
          bool accumulate = false);

// A^T variant: C[m,n] (+)= A[k,m]^T * B[k,n].
void gemm_at(int m, int n, int k, const float* a, const float* b, float* c,
             bool accumulate = false);

// B^T variant: C[m,n] (+)= A[m,k] * B[n,k]^T.
void gemm_bt(int m, int n, int k, const float* a, const float* b, float* c,
             bool accumulate = false);

}  // namespace hdrvqa
