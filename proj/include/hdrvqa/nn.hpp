#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hdrvqa/config.hpp"
#include "hdrvqa/tensor.hpp"

namespace hdrvqa {

struct Param {
    std::string name;
    std::vector<int> shape;
    std::vector<float> w;
    std::vector<float> g;
    std::vector<float> m;  // momentum buffer
    bool decay = true;     // weight decay applies (off for norm scale/shift)

    size_t size() const { return w.size(); }
    void zero_grad() { std::fill(g.begin(), g.end(), 0.f); }
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, bool train) = 0;
    virtual Tensor backward(const Tensor& dy) = 0;
    virtual void collect_params(std::vector<Param*>& out) {}
    // persistent non-trained state (batch-norm running stats)
    virtual void collect_buffers(std::vector<Param*>& out) {}
};

std::unique_ptr<Layer> make_conv2d(const std::string& name, int in_c, int out_c, int ksize,
                                   int stride, int pad, Rng& rng);
std::unique_ptr<Layer> make_batchnorm(const std::string& name, int channels);
std::unique_ptr<Layer> make_relu();
std::unique_ptr<Layer> make_maxpool(int ksize, int stride, int pad);
std::unique_ptr<Layer> make_adaptive_avgpool();
std::unique_ptr<Layer> make_linear(const std::string& name, int in_dim, int out_dim, Rng& rng);
std::unique_ptr<Layer> make_resblock(const std::string& name, int channels, Rng& rng);
std::unique_ptr<Layer> make_bottleneck(const std::string& name, int in_c, int mid_c, int out_c,
                                       int stride, Rng& rng);

class Sequential : public Layer {
public:
    void add(std::unique_ptr<Layer> l) { layers_.push_back(std::move(l)); }
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;
    void collect_params(std::vector<Param*>& out) override;
    void collect_buffers(std::vector<Param*>& out) override;

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

// Encoder + projector pair. The encoder maps image batches to pooled D-dim
// features; the projector is a 2-layer perceptron used only during training.
class ContrastiveModel {
public:
    ContrastiveModel(const ModelConfig& cfg, uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    int feature_dim() const { return cfg_.encoder_dim; }

    Tensor encode(const Tensor& images, bool train);    // [n, D, 1, 1]
    Tensor project(const Tensor& h, bool train);        // [n, K, 1, 1]
    Tensor backward_projector(const Tensor& dz);
    Tensor backward_encoder(const Tensor& dh);

    std::vector<Param*> params();
    std::vector<Param*> buffers();
    std::vector<Param*> state();  // params + buffers, checkpoint order

    uint64_t weights_hash() const;

private:
    ModelConfig cfg_;
    std::unique_ptr<Sequential> encoder_;
    std::unique_ptr<Sequential> projector_;
};

struct Sgd {
    double momentum = 0.9;
    double weight_decay = 1e-4;
    void step(const std::vector<Param*>& params, double lr) const;
};

// Versioned checkpoint container: model/train config, source manifest hash,
// and all named tensors (params + buffers).
struct CheckpointMeta {
    ModelConfig model;
    std::string train_config_json;
    std::string manifest_hash;
    int epoch = 0;
};

void save_checkpoint(const std::string& path, ContrastiveModel& model,
                     const CheckpointMeta& meta);
std::unique_ptr<ContrastiveModel> load_checkpoint(const std::string& path,
                                                  CheckpointMeta* meta = nullptr);
CheckpointMeta peek_checkpoint(const std::string& path);
uint64_t checkpoint_file_hash(const std::string& path);

}  // namespace hdrvqa
