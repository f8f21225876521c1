#include "hdrvqa/tensor.hpp"

#include <cstring>

namespace hdrvqa {

void gemm(int m, int n, int k, const float* a, const float* b, float* c, bool accumulate) {
    if (!accumulate) std::memset(c, 0, size_t(m) * n * sizeof(float));
    for (int i = 0; i < m; ++i) {
        float* ci = c + size_t(i) * n;
        const float* ai = a + size_t(i) * k;
        for (int p = 0; p < k; ++p) {
            float av = ai[p];
            if (av == 0.f) continue;
            const float* bp = b + size_t(p) * n;
            for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

void gemm_at(int m, int n, int k, const float* a, const float* b, float* c, bool accumulate) {
    if (!accumulate) std::memset(c, 0, size_t(m) * n * sizeof(float));
    for (int p = 0; p < k; ++p) {
        const float* ap = a + size_t(p) * m;
        const float* bp = b + size_t(p) * n;
        for (int i = 0; i < m; ++i) {
            float av = ap[i];
            if (av == 0.f) continue;
            float* ci = c + size_t(i) * n;
            for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

void gemm_bt(int m, int n, int k, const float* a, const float* b, float* c, bool accumulate) {
    if (!accumulate) std::memset(c, 0, size_t(m) * n * sizeof(float));
    for (int i = 0; i < m; ++i) {
        const float* ai = a + size_t(i) * k;
        float* ci = c + size_t(i) * n;
        for (int j = 0; j < n; ++j) {
            const float* bj = b + size_t(j) * k;
            float acc = 0.f;
            for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
            ci[j] += acc;
        }
    }
}

}  // namespace hdrvqa
