#pragma once

#include <string>

#include "hdrvqa/common.hpp"

namespace hdrvqa {

enum class EncoderKind { Residual50, ToyCnn };
enum class WeightsInit { Checkpoint, Random };

const char* to_string(EncoderKind k);
EncoderKind encoder_kind_from_string(std::string_view s);

struct ModelConfig {
    EncoderKind encoder_kind = EncoderKind::ToyCnn;
    int encoder_dim = 128;     // D; 2048 for the 50-layer encoder
    int projector_dim = 128;   // K
    int toy_base_channels = 16;
    WeightsInit weights_init = WeightsInit::Random;
    std::string init_checkpoint;

    void validate() const;
    std::string to_json() const;
    static ModelConfig from_json(const std::string& text);
};

struct TrainConfig {
    int batch_size = 768;
    int crop_size = 256;
    int patch_size = 64;
    int epochs = 25;
    double base_lr = 0.1;
    int warmup_epochs = 2;
    double tau = 0.1;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    uint64_t seed = 0;
    int frames_per_clip = 1;

    void validate() const;
    std::string to_json() const;
    static TrainConfig from_json(const std::string& text);
};

// Strict parse: unknown keys are rejected (CONFIG_INVALID).
ModelConfig model_config_from_file(const std::string& path);
TrainConfig train_config_from_file(const std::string& path);
void load_run_config(const std::string& path, ModelConfig& model, TrainConfig& train);

}  // namespace hdrvqa
