#include "hdrvqa/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hdrvqa {

namespace {

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void he_init(Param& p, int fan_in, Rng& rng) {
    double stddev = std::sqrt(2.0 / fan_in);
    for (float& w : p.w) w = float(rng.normal() * stddev);
}

// ---------------------------------------------------------------- conv2d

class Conv2d : public Layer {
public:
    Conv2d(const std::string& name, int in_c, int out_c, int ksize, int stride, int pad,
           Rng& rng)
        : in_c_(in_c), out_c_(out_c), k_(ksize), stride_(stride), pad_(pad) {
        weight_.name = name + ".weight";
        weight_.shape = {out_c, in_c, ksize, ksize};
        weight_.w.resize(size_t(out_c) * in_c * ksize * ksize);
        weight_.g.assign(weight_.w.size(), 0.f);
        weight_.m.assign(weight_.w.size(), 0.f);
        he_init(weight_, in_c * ksize * ksize, rng);
    }

    Tensor forward(const Tensor& x, bool) override {
        x_ = x;
        int oh = (x.h + 2 * pad_ - k_) / stride_ + 1;
        int ow = (x.w + 2 * pad_ - k_) / stride_ + 1;
        require(oh > 0 && ow > 0, ErrorClass::DimensionMismatch, "conv input too small");
        require(x.c == in_c_, ErrorClass::DimensionMismatch, "conv channel mismatch");
        Tensor y(x.n, out_c_, oh, ow);
        const int kdim = in_c_ * k_ * k_;
        const int opx = oh * ow;
#pragma omp parallel
        {
            std::vector<float> col(size_t(kdim) * opx);
#pragma omp for schedule(static)
            for (int i = 0; i < x.n; ++i) {
                im2col(x.image(i), x.h, x.w, oh, ow, col.data());
                gemm(out_c_, opx, kdim, weight_.w.data(), col.data(), y.image(i));
            }
        }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        int oh = dy.h, ow = dy.w;
        const int kdim = in_c_ * k_ * k_;
        const int opx = oh * ow;
        Tensor dx(x_.n, x_.c, x_.h, x_.w);

        const int nt = max_threads();
        std::vector<std::vector<float>> dw_local(nt, std::vector<float>(weight_.w.size(), 0.f));
#pragma omp parallel
        {
#ifdef _OPENMP
            const int tid = omp_get_thread_num();
#else
            const int tid = 0;
#endif
            std::vector<float> col(size_t(kdim) * opx);
            std::vector<float> dcol(size_t(kdim) * opx);
#pragma omp for schedule(static)
            for (int i = 0; i < x_.n; ++i) {
                im2col(x_.image(i), x_.h, x_.w, oh, ow, col.data());
                // dW += dY * col^T
                gemm_bt(out_c_, kdim, opx, dy.image(i), col.data(), dw_local[tid].data(), true);
                // dcol = W^T * dY
                gemm_at(kdim, opx, out_c_, weight_.w.data(), dy.image(i), dcol.data());
                col2im(dcol.data(), x_.h, x_.w, oh, ow, dx.image(i));
            }
        }
        for (const auto& local : dw_local)
            for (size_t j = 0; j < weight_.g.size(); ++j) weight_.g[j] += local[j];
        return dx;
    }

    void collect_params(std::vector<Param*>& out) override { out.push_back(&weight_); }

private:
    void im2col(const float* img, int h, int w, int oh, int ow, float* col) const {
        // col layout: [in_c * k * k, oh * ow]
        for (int c = 0; c < in_c_; ++c) {
            const float* src = img + size_t(c) * h * w;
            for (int ky = 0; ky < k_; ++ky)
                for (int kx = 0; kx < k_; ++kx) {
                    float* dst = col + (size_t(c) * k_ * k_ + size_t(ky) * k_ + kx) * oh * ow;
                    for (int oy = 0; oy < oh; ++oy) {
                        int sy = oy * stride_ + ky - pad_;
                        if (sy < 0 || sy >= h) {
                            std::memset(dst + size_t(oy) * ow, 0, size_t(ow) * sizeof(float));
                            continue;
                        }
                        const float* srow = src + size_t(sy) * w;
                        float* drow = dst + size_t(oy) * ow;
                        for (int ox = 0; ox < ow; ++ox) {
                            int sx = ox * stride_ + kx - pad_;
                            drow[ox] = (sx >= 0 && sx < w) ? srow[sx] : 0.f;
                        }
                    }
                }
        }
    }

    void col2im(const float* col, int h, int w, int oh, int ow, float* img) const {
        std::memset(img, 0, size_t(in_c_) * h * w * sizeof(float));
        for (int c = 0; c < in_c_; ++c) {
            float* dst = img + size_t(c) * h * w;
            for (int ky = 0; ky < k_; ++ky)
                for (int kx = 0; kx < k_; ++kx) {
                    const float* src = col + (size_t(c) * k_ * k_ + size_t(ky) * k_ + kx) * oh * ow;
                    for (int oy = 0; oy < oh; ++oy) {
                        int sy = oy * stride_ + ky - pad_;
                        if (sy < 0 || sy >= h) continue;
                        float* drow = dst + size_t(sy) * w;
                        const float* srow = src + size_t(oy) * ow;
                        for (int ox = 0; ox < ow; ++ox) {
                            int sx = ox * stride_ + kx - pad_;
                            if (sx >= 0 && sx < w) drow[sx] += srow[ox];
                        }
                    }
                }
        }
    }

    int in_c_, out_c_, k_, stride_, pad_;
    Param weight_;
    Tensor x_;
};

// ---------------------------------------------------------------- batchnorm

class BatchNorm2d : public Layer {
public:
    BatchNorm2d(const std::string& name, int channels) : c_(channels) {
        auto init = [&](Param& p, const std::string& suffix, float fill) {
            p.name = name + suffix;
            p.shape = {channels};
            p.w.assign(size_t(channels), fill);
            p.g.assign(size_t(channels), 0.f);
            p.m.assign(size_t(channels), 0.f);
            p.decay = false;
        };
        init(gamma_, ".gamma", 1.f);
        init(beta_, ".beta", 0.f);
        init(run_mean_, ".running_mean", 0.f);
        init(run_var_, ".running_var", 1.f);
    }

    Tensor forward(const Tensor& x, bool train) override {
        require(x.c == c_, ErrorClass::DimensionMismatch, "batchnorm channel mismatch");
        Tensor y(x.n, x.c, x.h, x.w);
        const size_t px = size_t(x.h) * x.w;
        const size_t m = size_t(x.n) * px;
        if (train) {
            xhat_ = Tensor(x.n, x.c, x.h, x.w);
            invstd_.assign(c_, 0.f);
            mshape_ = m;
#pragma omp parallel for schedule(static)
            for (int c = 0; c < c_; ++c) {
                double mean = 0;
                for (int i = 0; i < x.n; ++i) {
                    const float* p = x.image(i) + size_t(c) * px;
                    for (size_t j = 0; j < px; ++j) mean += p[j];
                }
                mean /= double(m);
                double var = 0;
                for (int i = 0; i < x.n; ++i) {
                    const float* p = x.image(i) + size_t(c) * px;
                    for (size_t j = 0; j < px; ++j) {
                        double d = p[j] - mean;
                        var += d * d;
                    }
                }
                var /= double(m);
                float inv = float(1.0 / std::sqrt(var + kEps));
                invstd_[c] = inv;
                float g = gamma_.w[c], b = beta_.w[c], mu = float(mean);
                for (int i = 0; i < x.n; ++i) {
                    const float* p = x.image(i) + size_t(c) * px;
                    float* xh = xhat_.image(i) + size_t(c) * px;
                    float* yo = y.image(i) + size_t(c) * px;
                    for (size_t j = 0; j < px; ++j) {
                        xh[j] = (p[j] - mu) * inv;
                        yo[j] = g * xh[j] + b;
                    }
                }
                run_mean_.w[c] = float((1.0 - kMomentum) * run_mean_.w[c] + kMomentum * mean);
                run_var_.w[c] = float((1.0 - kMomentum) * run_var_.w[c] + kMomentum * var);
            }
        } else {
#pragma omp parallel for schedule(static)
            for (int c = 0; c < c_; ++c) {
                float inv = float(1.0 / std::sqrt(double(run_var_.w[c]) + kEps));
                float g = gamma_.w[c], b = beta_.w[c], mu = run_mean_.w[c];
                for (int i = 0; i < x.n; ++i) {
                    const float* p = x.image(i) + size_t(c) * px;
                    float* yo = y.image(i) + size_t(c) * px;
                    for (size_t j = 0; j < px; ++j) yo[j] = g * (p[j] - mu) * inv + b;
                }
            }
        }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        const size_t px = size_t(dy.h) * dy.w;
        const double m = double(mshape_);
        Tensor dx(dy.n, dy.c, dy.h, dy.w);
#pragma omp parallel for schedule(static)
        for (int c = 0; c < c_; ++c) {
            double sum_dy = 0, sum_dy_xhat = 0;
            for (int i = 0; i < dy.n; ++i) {
                const float* d = dy.image(i) + size_t(c) * px;
                const float* xh = xhat_.image(i) + size_t(c) * px;
                for (size_t j = 0; j < px; ++j) {
                    sum_dy += d[j];
                    sum_dy_xhat += double(d[j]) * xh[j];
                }
            }
            gamma_.g[c] += float(sum_dy_xhat);
            beta_.g[c] += float(sum_dy);
            const float scale = gamma_.w[c] * invstd_[c];
            const float k1 = float(sum_dy / m);
            const float k2 = float(sum_dy_xhat / m);
            for (int i = 0; i < dy.n; ++i) {
                const float* d = dy.image(i) + size_t(c) * px;
                const float* xh = xhat_.image(i) + size_t(c) * px;
                float* o = dx.image(i) + size_t(c) * px;
                for (size_t j = 0; j < px; ++j) o[j] = scale * (d[j] - k1 - xh[j] * k2);
            }
        }
        return dx;
    }

    void collect_params(std::vector<Param*>& out) override {
        out.push_back(&gamma_);
        out.push_back(&beta_);
    }
    void collect_buffers(std::vector<Param*>& out) override {
        out.push_back(&run_mean_);
        out.push_back(&run_var_);
    }

private:
    static constexpr double kEps = 1e-5;
    static constexpr double kMomentum = 0.1;
    int c_;
    Param gamma_, beta_, run_mean_, run_var_;
    Tensor xhat_;
    std::vector<float> invstd_;
    size_t mshape_ = 0;
};

// ---------------------------------------------------------------- relu

class Relu : public Layer {
public:
    Tensor forward(const Tensor& x, bool) override {
        y_ = x;
        float* p = y_.v.data();
        const int64_t n = int64_t(y_.size());
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i) p[i] = p[i] > 0.f ? p[i] : 0.f;
        return y_;
    }
    Tensor backward(const Tensor& dy) override {
        Tensor dx = dy;
        const int64_t n = int64_t(dx.size());
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i)
            if (y_.v[i] <= 0.f) dx.v[i] = 0.f;
        return dx;
    }

private:
    Tensor y_;
};

// ---------------------------------------------------------------- maxpool

class MaxPool2d : public Layer {
public:
    MaxPool2d(int ksize, int stride, int pad) : k_(ksize), stride_(stride), pad_(pad) {}

    Tensor forward(const Tensor& x, bool) override {
        in_h_ = x.h;
        in_w_ = x.w;
        int oh = (x.h + 2 * pad_ - k_) / stride_ + 1;
        int ow = (x.w + 2 * pad_ - k_) / stride_ + 1;
        Tensor y(x.n, x.c, oh, ow);
        argmax_.assign(y.size(), 0);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < x.n; ++i) {
            for (int c = 0; c < x.c; ++c) {
                const float* src = x.image(i) + size_t(c) * x.h * x.w;
                size_t base = (size_t(i) * x.c + c) * oh * ow;
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox) {
                        float best = -3.4e38f;
                        int besti = 0;
                        for (int ky = 0; ky < k_; ++ky)
                            for (int kx = 0; kx < k_; ++kx) {
                                int sy = oy * stride_ + ky - pad_;
                                int sx = ox * stride_ + kx - pad_;
                                if (sy < 0 || sy >= x.h || sx < 0 || sx >= x.w) continue;
                                float v = src[size_t(sy) * x.w + sx];
                                if (v > best) {
                                    best = v;
                                    besti = sy * x.w + sx;
                                }
                            }
                        y.v[base + size_t(oy) * ow + ox] = best;
                        argmax_[base + size_t(oy) * ow + ox] = besti;
                    }
            }
        }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        Tensor dx(dy.n, dy.c, in_h_, in_w_);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < dy.n; ++i)
            for (int c = 0; c < dy.c; ++c) {
                size_t base = (size_t(i) * dy.c + c) * dy.h * dy.w;
                float* dst = dx.image(i) + size_t(c) * in_h_ * in_w_;
                for (int j = 0; j < dy.h * dy.w; ++j)
                    dst[argmax_[base + j]] += dy.v[base + j];
            }
        return dx;
    }

private:
    int k_, stride_, pad_;
    int in_h_ = 0, in_w_ = 0;
    std::vector<int> argmax_;
};

// ---------------------------------------------------------------- avgpool

class AdaptiveAvgPool : public Layer {
public:
    Tensor forward(const Tensor& x, bool) override {
        in_h_ = x.h;
        in_w_ = x.w;
        Tensor y(x.n, x.c, 1, 1);
        const float inv = 1.f / float(x.h * x.w);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < x.n; ++i) {
            const float* src = x.image(i);
            float* dst = y.image(i);
            for (int c = 0; c < x.c; ++c) {
                float acc = 0;
                const float* p = src + size_t(c) * x.h * x.w;
                for (int j = 0; j < x.h * x.w; ++j) acc += p[j];
                dst[c] = acc * inv;
            }
        }
        return y;
    }
    Tensor backward(const Tensor& dy) override {
        Tensor dx(dy.n, dy.c, in_h_, in_w_);
        const float inv = 1.f / float(in_h_ * in_w_);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < dy.n; ++i) {
            float* dst = dx.image(i);
            const float* d = dy.image(i);
            for (int c = 0; c < dy.c; ++c) {
                float v = d[c] * inv;
                float* p = dst + size_t(c) * in_h_ * in_w_;
                for (int j = 0; j < in_h_ * in_w_; ++j) p[j] = v;
            }
        }
        return dx;
    }

private:
    int in_h_ = 0, in_w_ = 0;
};

// ---------------------------------------------------------------- linear

class Linear : public Layer {
public:
    Linear(const std::string& name, int in_dim, int out_dim, Rng& rng)
        : in_(in_dim), out_(out_dim) {
        weight_.name = name + ".weight";
        weight_.shape = {out_dim, in_dim};
        weight_.w.resize(size_t(out_dim) * in_dim);
        weight_.g.assign(weight_.w.size(), 0.f);
        weight_.m.assign(weight_.w.size(), 0.f);
        he_init(weight_, in_dim, rng);
        bias_.name = name + ".bias";
        bias_.shape = {out_dim};
        bias_.w.assign(size_t(out_dim), 0.f);
        bias_.g.assign(size_t(out_dim), 0.f);
        bias_.m.assign(size_t(out_dim), 0.f);
        bias_.decay = false;
    }

    Tensor forward(const Tensor& x, bool) override {
        require(int(x.image_size()) == in_, ErrorClass::DimensionMismatch,
                "linear input dim mismatch");
        x_ = x;
        Tensor y(x.n, out_, 1, 1);
        gemm_bt(x.n, out_, in_, x.v.data(), weight_.w.data(), y.v.data());
#pragma omp parallel for schedule(static)
        for (int i = 0; i < x.n; ++i) {
            float* yi = y.image(i);
            for (int o = 0; o < out_; ++o) yi[o] += bias_.w[o];
        }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        // dW += dY^T X ; db += column sums ; dX = dY W
        gemm_at(out_, in_, x_.n, dy.v.data(), x_.v.data(), weight_.g.data(), true);
        for (int i = 0; i < x_.n; ++i) {
            const float* d = dy.image(i);
            for (int o = 0; o < out_; ++o) bias_.g[o] += d[o];
        }
        Tensor dx(x_.n, in_, 1, 1);
        gemm(x_.n, in_, out_, dy.v.data(), weight_.w.data(), dx.v.data());
        return dx;
    }

    void collect_params(std::vector<Param*>& out) override {
        out.push_back(&weight_);
        out.push_back(&bias_);
    }

private:
    int in_, out_;
    Param weight_, bias_;
    Tensor x_;
};

// ---------------------------------------------------------------- resblock

class ResBlock : public Layer {
public:
    ResBlock(const std::string& name, int channels, Rng& rng) {
        conv1_ = make_conv2d(name + ".conv1", channels, channels, 3, 1, 1, rng);
        bn1_ = make_batchnorm(name + ".bn1", channels);
        relu1_ = make_relu();
        conv2_ = make_conv2d(name + ".conv2", channels, channels, 3, 1, 1, rng);
        bn2_ = make_batchnorm(name + ".bn2", channels);
    }

    Tensor forward(const Tensor& x, bool train) override {
        Tensor t = bn1_->forward(conv1_->forward(x, train), train);
        t = relu1_->forward(t, train);
        Tensor u = bn2_->forward(conv2_->forward(t, train), train);
        Tensor y(u.n, u.c, u.h, u.w);
        mask_.assign(u.size(), 0);
        const int64_t n = int64_t(u.size());
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i) {
            float s = u.v[i] + x.v[i];
            bool on = s > 0.f;
            mask_[i] = on;
            y.v[i] = on ? s : 0.f;
        }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        Tensor d = dy;
        const int64_t n = int64_t(d.size());
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i)
            if (!mask_[i]) d.v[i] = 0.f;
        Tensor dmain = conv1_->backward(
            bn1_->backward(relu1_->backward(conv2_->backward(bn2_->backward(d)))));
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i) dmain.v[i] += d.v[i];
        return dmain;
    }

    void collect_params(std::vector<Param*>& out) override {
        conv1_->collect_params(out);
        bn1_->collect_params(out);
        conv2_->collect_params(out);
        bn2_->collect_params(out);
    }
    void collect_buffers(std::vector<Param*>& out) override {
        bn1_->collect_buffers(out);
        bn2_->collect_buffers(out);
    }

private:
    std::unique_ptr<Layer> conv1_, bn1_, relu1_, conv2_, bn2_;
    std::vector<uint8_t> mask_;
};

// ---------------------------------------------------------------- bottleneck

// 1x1 reduce -> 3x3 -> 1x1 expand with projection shortcut where shapes change.
class Bottleneck : public Layer {
public:
    Bottleneck(const std::string& name, int in_c, int mid_c, int out_c, int stride, Rng& rng) {
        conv1_ = make_conv2d(name + ".conv1", in_c, mid_c, 1, 1, 0, rng);
        bn1_ = make_batchnorm(name + ".bn1", mid_c);
        relu1_ = make_relu();
        conv2_ = make_conv2d(name + ".conv2", mid_c, mid_c, 3, stride, 1, rng);
        bn2_ = make_batchnorm(name + ".bn2", mid_c);
        relu2_ = make_relu();
        conv3_ = make_conv2d(name + ".conv3", mid_c, out_c, 1, 1, 0, rng);
        bn3_ = make_batchnorm(name + ".bn3", out_c);
        if (in_c != out_c || stride != 1) {
            proj_ = make_conv2d(name + ".proj", in_c, out_c, 1, stride, 0, rng);
            proj_bn_ = make_batchnorm(name + ".proj_bn", out_c);
        }
    }

    Tensor forward(const Tensor& x, bool train) override {
        Tensor t = relu1_->forward(bn1_->forward(conv1_->forward(x, train), train), train);
        t = relu2_->forward(bn2_->forward(conv2_->forward(t, train), train), train);
        Tensor u = bn3_->forward(conv3_->forward(t, train), train);
        Tensor skip = proj_ ? proj_bn_->forward(proj_->forward(x, train), train) : x;
        Tensor y(u.n, u.c, u.h, u.w);
        mask_.assign(u.size(), 0);
        const int64_t n = int64_t(u.size());
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i) {
            float s = u.v[i] + skip.v[i];
            bool on = s > 0.f;
            mask_[i] = on;
            y.v[i] = on ? s : 0.f;
        }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        Tensor d = dy;
        const int64_t n = int64_t(d.size());
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i)
            if (!mask_[i]) d.v[i] = 0.f;
        Tensor dmain = conv1_->backward(bn1_->backward(relu1_->backward(
            conv2_->backward(bn2_->backward(relu2_->backward(
                conv3_->backward(bn3_->backward(d))))))));
        Tensor dskip = proj_ ? proj_->backward(proj_bn_->backward(d)) : d;
        const int64_t m = int64_t(dmain.size());
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < m; ++i) dmain.v[i] += dskip.v[i];
        return dmain;
    }

    void collect_params(std::vector<Param*>& out) override {
        for (Layer* l : sublayers())
            l->collect_params(out);
    }
    void collect_buffers(std::vector<Param*>& out) override {
        for (Layer* l : sublayers())
            l->collect_buffers(out);
    }

private:
    std::vector<Layer*> sublayers() {
        std::vector<Layer*> ls = {conv1_.get(), bn1_.get(), conv2_.get(), bn2_.get(),
                                  conv3_.get(), bn3_.get()};
        if (proj_) {
            ls.push_back(proj_.get());
            ls.push_back(proj_bn_.get());
        }
        return ls;
    }

    std::unique_ptr<Layer> conv1_, bn1_, relu1_, conv2_, bn2_, relu2_, conv3_, bn3_;
    std::unique_ptr<Layer> proj_, proj_bn_;
    std::vector<uint8_t> mask_;
};

}  // namespace

std::unique_ptr<Layer> make_conv2d(const std::string& name, int in_c, int out_c, int ksize,
                                   int stride, int pad, Rng& rng) {
    return std::make_unique<Conv2d>(name, in_c, out_c, ksize, stride, pad, rng);
}
std::unique_ptr<Layer> make_batchnorm(const std::string& name, int channels) {
    return std::make_unique<BatchNorm2d>(name, channels);
}
std::unique_ptr<Layer> make_relu() { return std::make_unique<Relu>(); }
std::unique_ptr<Layer> make_maxpool(int ksize, int stride, int pad) {
    return std::make_unique<MaxPool2d>(ksize, stride, pad);
}
std::unique_ptr<Layer> make_adaptive_avgpool() { return std::make_unique<AdaptiveAvgPool>(); }
std::unique_ptr<Layer> make_linear(const std::string& name, int in_dim, int out_dim, Rng& rng) {
    return std::make_unique<Linear>(name, in_dim, out_dim, rng);
}
std::unique_ptr<Layer> make_resblock(const std::string& name, int channels, Rng& rng) {
    return std::make_unique<ResBlock>(name, channels, rng);
}
std::unique_ptr<Layer> make_bottleneck(const std::string& name, int in_c, int mid_c, int out_c,
                                       int stride, Rng& rng) {
    return std::make_unique<Bottleneck>(name, in_c, mid_c, out_c, stride, rng);
}

Tensor Sequential::forward(const Tensor& x, bool train) {
    Tensor t = x;
    for (auto& l : layers_) t = l->forward(t, train);
    return t;
}
Tensor Sequential::backward(const Tensor& dy) {
    Tensor t = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) t = (*it)->backward(t);
    return t;
}
void Sequential::collect_params(std::vector<Param*>& out) {
    for (auto& l : layers_) l->collect_params(out);
}
void Sequential::collect_buffers(std::vector<Param*>& out) {
    for (auto& l : layers_) l->collect_buffers(out);
}

namespace {

std::unique_ptr<Sequential> build_toy_encoder(int base, Rng& rng) {
    auto seq = std::make_unique<Sequential>();
    int c0 = base, c1 = base * 2, c2 = base * 4, c3 = base * 8;
    seq->add(make_conv2d("enc.stem", 3, c0, 3, 1, 1, rng));
    seq->add(make_batchnorm("enc.stem_bn", c0));
    seq->add(make_relu());
    int cin = c0;
    int idx = 1;
    for (int c : {c1, c2, c3}) {
        std::string s = "enc.stage" + std::to_string(idx++);
        seq->add(make_conv2d(s + ".down", cin, c, 3, 2, 1, rng));
        seq->add(make_batchnorm(s + ".down_bn", c));
        seq->add(make_relu());
        seq->add(make_resblock(s + ".block", c, rng));
        cin = c;
    }
    seq->add(make_adaptive_avgpool());
    return seq;
}

std::unique_ptr<Sequential> build_resnet50_encoder(Rng& rng) {
    auto seq = std::make_unique<Sequential>();
    seq->add(make_conv2d("enc.stem", 3, 64, 7, 2, 3, rng));
    seq->add(make_batchnorm("enc.stem_bn", 64));
    seq->add(make_relu());
    seq->add(make_maxpool(3, 2, 1));
    struct Stage {
        int mid, out, blocks, stride;
    };
    const Stage stages[] = {{64, 256, 3, 1}, {128, 512, 4, 2}, {256, 1024, 6, 2}, {512, 2048, 3, 2}};
    int cin = 64;
    int si = 1;
    for (const Stage& st : stages) {
        for (int b = 0; b < st.blocks; ++b) {
            std::string name = "enc.layer" + std::to_string(si) + "." + std::to_string(b);
            int stride = b == 0 ? st.stride : 1;
            seq->add(make_bottleneck(name, cin, st.mid, st.out, stride, rng));
            cin = st.out;
        }
        ++si;
    }
    seq->add(make_adaptive_avgpool());
    return seq;
}

}  // namespace

ContrastiveModel::ContrastiveModel(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng = Rng::derive(seed, "model-init");
    if (cfg_.encoder_kind == EncoderKind::ToyCnn)
        encoder_ = build_toy_encoder(cfg_.toy_base_channels, rng);
    else
        encoder_ = build_resnet50_encoder(rng);
    projector_ = std::make_unique<Sequential>();
    int d = cfg_.encoder_dim, k = cfg_.projector_dim;
    projector_->add(make_linear("proj.fc1", d, d, rng));
    projector_->add(make_relu());
    projector_->add(make_linear("proj.fc2", d, k, rng));
}

Tensor ContrastiveModel::encode(const Tensor& images, bool train) {
    Tensor h = encoder_->forward(images, train);
    require(h.c == cfg_.encoder_dim && h.h == 1 && h.w == 1, ErrorClass::Internal,
            "encoder output dim mismatch");
    return h;
}

Tensor ContrastiveModel::project(const Tensor& h, bool train) {
    return projector_->forward(h, train);
}

Tensor ContrastiveModel::backward_projector(const Tensor& dz) {
    return projector_->backward(dz);
}

Tensor ContrastiveModel::backward_encoder(const Tensor& dh) {
    return encoder_->backward(dh);
}

std::vector<Param*> ContrastiveModel::params() {
    std::vector<Param*> out;
    encoder_->collect_params(out);
    projector_->collect_params(out);
    return out;
}

std::vector<Param*> ContrastiveModel::buffers() {
    std::vector<Param*> out;
    encoder_->collect_buffers(out);
    projector_->collect_buffers(out);
    return out;
}

std::vector<Param*> ContrastiveModel::state() {
    std::vector<Param*> out = params();
    std::vector<Param*> buf = buffers();
    out.insert(out.end(), buf.begin(), buf.end());
    return out;
}

uint64_t ContrastiveModel::weights_hash() const {
    uint64_t h = kFnvBasis;
    for (Param* p : const_cast<ContrastiveModel*>(this)->state())
        h = fnv1a64(p->w.data(), p->w.size() * sizeof(float), h);
    return h;
}

void Sgd::step(const std::vector<Param*>& params, double lr) const {
    for (Param* p : params) {
        const float wd = p->decay ? float(weight_decay) : 0.f;
        const float mom = float(momentum);
        const float flr = float(lr);
        float* w = p->w.data();
        float* g = p->g.data();
        float* m = p->m.data();
        const int64_t n = int64_t(p->size());
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n; ++i) {
            float grad = g[i] + wd * w[i];
            m[i] = mom * m[i] + grad;
            w[i] -= flr * m[i];
        }
    }
}

// ---------------------------------------------------------------- checkpoint

namespace {
constexpr char kCkptMagic[8] = {'H', 'V', 'Q', 'A', 'C', 'K', 'P', 'T'};
constexpr uint32_t kCkptVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, ContrastiveModel& model,
                     const CheckpointMeta& meta) {
    nlohmann::ordered_json j;
    j["model"] = nlohmann::json::parse(model.config().to_json());
    j["train"] = meta.train_config_json.empty()
                     ? nlohmann::json(nullptr)
                     : nlohmann::json::parse(meta.train_config_json);
    j["manifest_hash"] = meta.manifest_hash;
    j["epoch"] = meta.epoch;
    auto tensors = nlohmann::ordered_json::array();
    for (Param* p : model.state()) {
        nlohmann::ordered_json t;
        t["name"] = p->name;
        t["shape"] = p->shape;
        t["count"] = p->size();
        tensors.push_back(t);
    }
    j["tensors"] = tensors;
    std::string header = j.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorClass::FileNotFound, "cannot write checkpoint: " + path);
    uint64_t h = kFnvBasis;
    auto put = [&](const void* data, size_t n) {
        out.write(static_cast<const char*>(data), std::streamsize(n));
        h = fnv1a64(data, n, h);
    };
    put(kCkptMagic, sizeof(kCkptMagic));
    put(&kCkptVersion, sizeof(kCkptVersion));
    uint64_t hlen = header.size();
    put(&hlen, sizeof(hlen));
    put(header.data(), header.size());
    for (Param* p : model.state()) put(p->w.data(), p->w.size() * sizeof(float));
    out.write(reinterpret_cast<const char*>(&h), sizeof(h));
    require(out.good(), ErrorClass::Internal, "checkpoint write failed: " + path);
}

namespace {

struct RawCkpt {
    nlohmann::json header;
    std::vector<std::vector<float>> tensors;
};

RawCkpt read_checkpoint(const std::string& path, bool want_tensors) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorClass::CkptNotFound, "no such checkpoint: " + path);
    uint64_t h = kFnvBasis;
    auto get = [&](void* data, size_t n) {
        in.read(static_cast<char*>(data), std::streamsize(n));
        require(in.good(), ErrorClass::DataCorrupt, "truncated checkpoint: " + path);
        h = fnv1a64(data, n, h);
    };
    char magic[8];
    get(magic, sizeof(magic));
    require(std::memcmp(magic, kCkptMagic, 8) == 0, ErrorClass::DataCorrupt,
            "not a checkpoint file: " + path);
    uint32_t version = 0;
    get(&version, sizeof(version));
    require(version == kCkptVersion, ErrorClass::SchemaVersion,
            "unsupported checkpoint version " + std::to_string(version));
    uint64_t hlen = 0;
    get(&hlen, sizeof(hlen));
    std::string header(hlen, '\0');
    get(header.data(), hlen);

    RawCkpt raw;
    try {
        raw.header = nlohmann::json::parse(header);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorClass::DataCorrupt, "bad checkpoint header: " + std::string(e.what()));
    }
    for (const auto& t : raw.header.at("tensors")) {
        size_t count = t.at("count").get<size_t>();
        std::vector<float> buf(count);
        get(buf.data(), count * sizeof(float));
        if (want_tensors) raw.tensors.push_back(std::move(buf));
    }
    uint64_t stored = 0;
    in.read(reinterpret_cast<char*>(&stored), sizeof(stored));
    require(in.good() && stored == h, ErrorClass::DataCorrupt,
            "checkpoint checksum mismatch: " + path);
    return raw;
}

CheckpointMeta meta_from_header(const nlohmann::json& header) {
    CheckpointMeta meta;
    meta.model = ModelConfig::from_json(header.at("model").dump());
    if (!header.at("train").is_null()) meta.train_config_json = header.at("train").dump();
    meta.manifest_hash = header.value("manifest_hash", "");
    meta.epoch = header.value("epoch", 0);
    return meta;
}

}  // namespace

std::unique_ptr<ContrastiveModel> load_checkpoint(const std::string& path, CheckpointMeta* meta) {
    RawCkpt raw = read_checkpoint(path, true);
    CheckpointMeta m = meta_from_header(raw.header);
    auto model = std::make_unique<ContrastiveModel>(m.model, 0);
    std::vector<Param*> state = model->state();
    const auto& tensors = raw.header.at("tensors");
    require(tensors.size() == state.size(), ErrorClass::CkptIncompatible,
            "checkpoint tensor count mismatch");
    for (size_t i = 0; i < state.size(); ++i) {
        require(tensors[i].at("name").get<std::string>() == state[i]->name,
                ErrorClass::CkptIncompatible,
                "checkpoint tensor name mismatch: " + state[i]->name);
        require(raw.tensors[i].size() == state[i]->size(), ErrorClass::CkptIncompatible,
                "checkpoint tensor size mismatch: " + state[i]->name);
        state[i]->w = std::move(raw.tensors[i]);
    }
    if (meta) *meta = std::move(m);
    return model;
}

CheckpointMeta peek_checkpoint(const std::string& path) {
    return meta_from_header(read_checkpoint(path, false).header);
}

uint64_t checkpoint_file_hash(const std::string& path) { return hash_file(path); }

}  // namespace hdrvqa
