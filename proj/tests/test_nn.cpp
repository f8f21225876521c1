#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hdrvqa/nn.hpp"
#include "ref/reference.hpp"
#include "support/test_util.hpp"

using namespace hdrvqa;
using test::TempDir;

namespace {

Tensor random_tensor(int n, int c, int h, int w, uint64_t seed, double scale = 1.0) {
    Tensor t(n, c, h, w);
    Rng rng(seed);
    for (float& v : t.v) v = float(rng.normal() * scale);
    return t;
}

// scalar objective sum(y * r) with a fixed random r, so dL/dy = r
struct Probe {
    std::vector<float> r;
    explicit Probe(const Tensor& y, uint64_t seed) {
        Rng rng(seed);
        r.resize(y.size());
        for (float& v : r) v = float(rng.normal());
    }
    double loss(const Tensor& y) const {
        double s = 0;
        for (size_t i = 0; i < y.size(); ++i) s += double(y.v[i]) * r[i];
        return s;
    }
    Tensor grad(const Tensor& y) const {
        Tensor g = y;
        for (size_t i = 0; i < g.size(); ++i) g.v[i] = r[i];
        return g;
    }
};

// Two-step central difference: coordinates where fd(h) and fd(h/4) disagree
// sit on a relu kink and are skipped; the rest must match the analytic value.
struct FdStats {
    int asserted = 0;
    int skipped = 0;
};

template <typename EvalAt>
void fd_compare(double analytic, EvalAt eval_at, double tol, FdStats& stats) {
    auto fd_with = [&](double h) { return (eval_at(h) - eval_at(-h)) / (2.0 * h); };
    double fd1 = fd_with(1e-2);
    double fd2 = fd_with(2.5e-3);
    double denom = std::max({std::abs(fd2), std::abs(analytic), 1.0});
    if (std::abs(fd1 - fd2) / denom > tol / 2) {
        ++stats.skipped;  // non-smooth coordinate
        return;
    }
    CHECK(std::abs(fd2 - analytic) / denom < tol);
    ++stats.asserted;
}

void check_input_grad(Layer& layer, Tensor x, uint64_t seed, double tol = 2e-2) {
    Tensor y = layer.forward(x, true);
    Probe probe(y, seed);
    Tensor dx = layer.backward(probe.grad(y));
    REQUIRE(dx.size() == x.size());

    Rng pick(seed ^ 0x1234);
    FdStats stats;
    for (int c = 0; c < 24; ++c) {
        size_t idx = size_t(pick.below(x.size()));
        fd_compare(
            dx.v[idx],
            [&](double h) {
                Tensor xp = x;
                xp.v[idx] += float(h);
                return probe.loss(layer.forward(xp, true));
            },
            tol, stats);
    }
    CHECK(stats.asserted >= 12);
}

void check_param_grad(Layer& layer, Tensor x, uint64_t seed, double tol = 2e-2) {
    std::vector<Param*> params;
    layer.collect_params(params);
    REQUIRE(!params.empty());
    Tensor y = layer.forward(x, true);
    Probe probe(y, seed);
    for (Param* p : params) p->zero_grad();
    layer.backward(probe.grad(y));

    Rng pick(seed ^ 0x777);
    FdStats stats;
    for (Param* p : params) {
        for (int c = 0; c < 8; ++c) {
            size_t idx = size_t(pick.below(p->size()));
            fd_compare(
                p->g[idx],
                [&](double h) {
                    float keep = p->w[idx];
                    p->w[idx] = keep + float(h);
                    double v = probe.loss(layer.forward(x, true));
                    p->w[idx] = keep;
                    return v;
                },
                tol, stats);
        }
        CHECK(stats.asserted >= 4);
    }
}

}  // namespace

TEST_CASE("conv2d forward matches the naive oracle") {
    Rng rng(1);
    for (auto [stride, pad] : {std::pair{1, 1}, std::pair{2, 1}, std::pair{1, 0}}) {
        auto conv = make_conv2d("t", 3, 5, 3, stride, pad, rng);
        std::vector<Param*> params;
        conv->collect_params(params);
        Tensor x = random_tensor(2, 3, 9, 7, 11);
        Tensor y = conv->forward(x, true);
        std::vector<float> want = ref::conv2d_naive(x.v, 2, 3, 9, 7, params[0]->w, 5, 3, 3,
                                                    stride, pad);
        REQUIRE(y.size() == want.size());
        for (size_t i = 0; i < want.size(); ++i)
            CHECK(y.v[i] == doctest::Approx(want[i]).epsilon(1e-4));
    }
}

TEST_CASE("gemm variants match the naive triple loop") {
    Rng rng(2);
    int m = 7, n = 9, k = 5;
    std::vector<float> a(size_t(m) * k), b(size_t(k) * n), bt(size_t(n) * k), at(size_t(k) * m);
    for (float& v : a) v = float(rng.normal());
    for (float& v : b) v = float(rng.normal());
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < n; ++j) bt[size_t(j) * k + i] = b[size_t(i) * n + j];
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j) at[size_t(j) * m + i] = a[size_t(i) * k + j];

    std::vector<float> want(size_t(m) * n, 0.f);
    ref::gemm_naive(m, n, k, a.data(), b.data(), want.data());

    std::vector<float> got(size_t(m) * n, 0.f);
    gemm(m, n, k, a.data(), b.data(), got.data());
    for (size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-4));

    std::fill(got.begin(), got.end(), 0.f);
    gemm_bt(m, n, k, a.data(), bt.data(), got.data());
    for (size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-4));

    std::fill(got.begin(), got.end(), 0.f);
    gemm_at(m, n, k, at.data(), b.data(), got.data());
    for (size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-4));
}

TEST_CASE("layer backward passes agree with finite differences") {
    Rng rng(3);
    SUBCASE("conv2d") {
        auto l = make_conv2d("c", 3, 4, 3, 1, 1, rng);
        check_input_grad(*l, random_tensor(2, 3, 6, 6, 21), 31);
        check_param_grad(*l, random_tensor(2, 3, 6, 6, 22), 32);
    }
    SUBCASE("strided conv2d") {
        auto l = make_conv2d("c", 2, 3, 3, 2, 1, rng);
        check_input_grad(*l, random_tensor(2, 2, 8, 8, 23), 33);
        check_param_grad(*l, random_tensor(2, 2, 8, 8, 24), 34);
    }
    SUBCASE("batchnorm") {
        auto l = make_batchnorm("b", 4);
        check_input_grad(*l, random_tensor(3, 4, 5, 5, 25), 35, 5e-2);
        check_param_grad(*l, random_tensor(3, 4, 5, 5, 26), 36, 5e-2);
    }
    SUBCASE("relu") {
        auto l = make_relu();
        check_input_grad(*l, random_tensor(2, 3, 4, 4, 27), 37);
    }
    SUBCASE("adaptive avgpool") {
        auto l = make_adaptive_avgpool();
        check_input_grad(*l, random_tensor(2, 3, 6, 5, 28), 38);
    }
    SUBCASE("maxpool") {
        auto l = make_maxpool(3, 2, 1);
        check_input_grad(*l, random_tensor(2, 2, 7, 7, 29), 39);
    }
    SUBCASE("linear") {
        auto l = make_linear("l", 6, 4, rng);
        check_input_grad(*l, random_tensor(5, 6, 1, 1, 30), 40);
        check_param_grad(*l, random_tensor(5, 6, 1, 1, 31), 41);
    }
    SUBCASE("resblock") {
        auto l = make_resblock("r", 4, rng);
        check_input_grad(*l, random_tensor(2, 4, 6, 6, 32), 42, 5e-2);
        check_param_grad(*l, random_tensor(2, 4, 6, 6, 33), 43, 5e-2);
    }
    SUBCASE("bottleneck with projection") {
        auto l = make_bottleneck("bn", 4, 2, 8, 2, rng);
        check_input_grad(*l, random_tensor(2, 4, 8, 8, 34), 44, 5e-2);
    }
}

TEST_CASE("toy encoder output shape and projector dims") {
    ModelConfig cfg;
    cfg.encoder_kind = EncoderKind::ToyCnn;
    cfg.toy_base_channels = 8;
    cfg.encoder_dim = 64;
    cfg.projector_dim = 32;
    ContrastiveModel model(cfg, 7);
    Tensor x = random_tensor(3, 3, 32, 32, 50, 0.3);
    Tensor h = model.encode(x, false);
    CHECK(h.n == 3);
    CHECK(h.c == 64);
    Tensor z = model.project(h, false);
    CHECK(z.c == 32);

    // eval-mode forward is deterministic
    Tensor h2 = model.encode(x, false);
    CHECK(h.v == h2.v);
}

TEST_CASE("50-layer encoder produces D=2048 features") {
    ModelConfig cfg;
    cfg.encoder_kind = EncoderKind::Residual50;
    cfg.encoder_dim = 2048;
    cfg.projector_dim = 128;
    ContrastiveModel model(cfg, 1);
    Tensor x = random_tensor(1, 3, 64, 64, 51, 0.3);
    Tensor h = model.encode(x, false);
    CHECK(h.n == 1);
    CHECK(h.c == 2048);
}

TEST_CASE("checkpoint round trip is bitwise and rejects mismatches") {
    TempDir tmp("ckpt");
    ModelConfig cfg;
    cfg.toy_base_channels = 8;
    cfg.encoder_dim = 64;
    cfg.projector_dim = 16;
    ContrastiveModel model(cfg, 3);
    CheckpointMeta meta;
    meta.model = cfg;
    meta.manifest_hash = "abc";
    meta.epoch = 4;
    std::string path = tmp.file("m.ckpt");
    save_checkpoint(path, model, meta);

    CheckpointMeta got;
    auto loaded = load_checkpoint(path, &got);
    CHECK(got.manifest_hash == "abc");
    CHECK(got.epoch == 4);
    CHECK(loaded->weights_hash() == model.weights_hash());

    CheckpointMeta peeked = peek_checkpoint(path);
    CHECK(peeked.model.projector_dim == 16);

    CHECK_THROWS_AS(load_checkpoint(tmp.file("missing.ckpt")), Error);

    // corrupt one payload byte: checksum must catch it
    {
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(200);
        char c = 0x5a;
        f.write(&c, 1);
    }
    CHECK_THROWS_AS(load_checkpoint(path), Error);
}

TEST_CASE("sgd with momentum and weight decay steps as defined") {
    Param p;
    p.name = "w";
    p.shape = {2};
    p.w = {1.f, -2.f};
    p.g = {0.5f, 0.25f};
    p.m = {0.f, 0.f};
    Sgd sgd{0.9, 0.01};
    sgd.step({&p}, 0.1);
    // v = g + wd*w ; w -= lr*v
    CHECK(p.w[0] == doctest::Approx(1.f - 0.1f * (0.5f + 0.01f * 1.f)).epsilon(1e-6));
    CHECK(p.w[1] == doctest::Approx(-2.f - 0.1f * (0.25f - 0.01f * 2.f)).epsilon(1e-6));
    float v0 = 0.5f + 0.01f * 1.f;
    sgd.step({&p}, 0.1);
    // second step folds momentum in
    float v0b = 0.9f * v0 + (0.5f + 0.01f * float(p.w[0] + 0.1f * v0));
    CHECK(p.m[0] == doctest::Approx(v0b).epsilon(1e-3));
}
