#include "hdrvqa/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace hdrvqa {

const char* to_string(EncoderKind k) {
    return k == EncoderKind::Residual50 ? "residual-50-layer" : "toy-cnn";
}

EncoderKind encoder_kind_from_string(std::string_view s) {
    if (s == "residual-50-layer") return EncoderKind::Residual50;
    if (s == "toy-cnn") return EncoderKind::ToyCnn;
    fail(ErrorClass::ConfigInvalid, "unknown encoder kind: " + std::string(s));
}

void ModelConfig::validate() const {
    require(encoder_dim > 0 && projector_dim > 0, ErrorClass::ConfigInvalid,
            "model dims must be positive");
    if (encoder_kind == EncoderKind::Residual50)
        require(encoder_dim == 2048, ErrorClass::ConfigInvalid,
                "residual-50-layer encoder has D=2048");
    else
        require(encoder_dim == toy_base_channels * 8, ErrorClass::ConfigInvalid,
                "toy-cnn encoder dim must equal 8 x base channels");
    if (weights_init == WeightsInit::Checkpoint)
        require(!init_checkpoint.empty(), ErrorClass::ConfigInvalid,
                "checkpoint init requires init_checkpoint path");
}

void TrainConfig::validate() const {
    require(batch_size > 1, ErrorClass::ConfigInvalid, "batch_size must exceed 1");
    require(crop_size > 0 && patch_size > 0, ErrorClass::ConfigInvalid,
            "crop/patch sizes must be positive");
    require(crop_size % patch_size == 0, ErrorClass::ConfigInvalid,
            "crop_size must be a multiple of patch_size");
    require((crop_size / 2) % patch_size == 0, ErrorClass::ConfigInvalid,
            "half-scale view must tile into patches");
    require(epochs >= 0, ErrorClass::ConfigInvalid, "epochs must be nonnegative");
    require(base_lr > 0, ErrorClass::ConfigInvalid, "base_lr must be positive");
    require(epochs == 0 || warmup_epochs < epochs, ErrorClass::ConfigInvalid,
            "warmup_epochs must be below epochs");
    require(tau > 0, ErrorClass::ConfigInvalid, "tau must be positive");
    require(frames_per_clip >= 1, ErrorClass::ConfigInvalid, "frames_per_clip must be >= 1");
}

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                    const std::string& what) {
    for (auto it = j.begin(); it != j.end(); ++it)
        require(known.count(it.key()) > 0, ErrorClass::ConfigInvalid,
                "unknown key in " + what + " config: " + it.key());
}

ModelConfig model_from(const nlohmann::json& j) {
    reject_unknown(j, {"encoder", "encoder_dim", "projector_dim", "toy_base_channels",
                       "init", "init_checkpoint"},
                   "model");
    ModelConfig c;
    if (j.contains("encoder")) c.encoder_kind = encoder_kind_from_string(j["encoder"].get<std::string>());
    if (c.encoder_kind == EncoderKind::Residual50) c.encoder_dim = 2048;
    if (j.contains("encoder_dim")) c.encoder_dim = j["encoder_dim"].get<int>();
    if (j.contains("projector_dim")) c.projector_dim = j["projector_dim"].get<int>();
    if (j.contains("toy_base_channels")) {
        c.toy_base_channels = j["toy_base_channels"].get<int>();
        if (c.encoder_kind == EncoderKind::ToyCnn && !j.contains("encoder_dim"))
            c.encoder_dim = c.toy_base_channels * 8;
    }
    if (j.contains("init")) {
        std::string s = j["init"].get<std::string>();
        if (s == "random")
            c.weights_init = WeightsInit::Random;
        else if (s == "sdr-pretrained-checkpoint" || s == "checkpoint")
            c.weights_init = WeightsInit::Checkpoint;
        else
            fail(ErrorClass::ConfigInvalid, "unknown init: " + s);
    }
    if (j.contains("init_checkpoint")) c.init_checkpoint = j["init_checkpoint"].get<std::string>();
    c.validate();
    return c;
}

TrainConfig train_from(const nlohmann::json& j) {
    reject_unknown(j, {"batch_size", "crop_size", "patch_size", "epochs", "base_lr",
                       "warmup_epochs", "tau", "momentum", "weight_decay", "seed",
                       "frames_per_clip"},
                   "train");
    TrainConfig c;
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("crop_size")) c.crop_size = j["crop_size"].get<int>();
    if (j.contains("patch_size")) c.patch_size = j["patch_size"].get<int>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("base_lr")) c.base_lr = j["base_lr"].get<double>();
    if (j.contains("warmup_epochs")) c.warmup_epochs = j["warmup_epochs"].get<int>();
    if (j.contains("tau")) c.tau = j["tau"].get<double>();
    if (j.contains("momentum")) c.momentum = j["momentum"].get<double>();
    if (j.contains("weight_decay")) c.weight_decay = j["weight_decay"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    if (j.contains("frames_per_clip")) c.frames_per_clip = j["frames_per_clip"].get<int>();
    c.validate();
    return c;
}

nlohmann::ordered_json model_to(const ModelConfig& c) {
    nlohmann::ordered_json j;
    j["encoder"] = to_string(c.encoder_kind);
    j["encoder_dim"] = c.encoder_dim;
    j["projector_dim"] = c.projector_dim;
    j["toy_base_channels"] = c.toy_base_channels;
    j["init"] = c.weights_init == WeightsInit::Random ? "random" : "sdr-pretrained-checkpoint";
    j["init_checkpoint"] = c.init_checkpoint;
    return j;
}

nlohmann::ordered_json train_to(const TrainConfig& c) {
    nlohmann::ordered_json j;
    j["batch_size"] = c.batch_size;
    j["crop_size"] = c.crop_size;
    j["patch_size"] = c.patch_size;
    j["epochs"] = c.epochs;
    j["base_lr"] = c.base_lr;
    j["warmup_epochs"] = c.warmup_epochs;
    j["tau"] = c.tau;
    j["momentum"] = c.momentum;
    j["weight_decay"] = c.weight_decay;
    j["seed"] = c.seed;
    j["frames_per_clip"] = c.frames_per_clip;
    return j;
}

nlohmann::json parse_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorClass::FileNotFound, "no such config: " + path);
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorClass::ConfigInvalid, "bad config json: " + std::string(e.what()));
    }
}

}  // namespace

std::string ModelConfig::to_json() const { return model_to(*this).dump(); }
ModelConfig ModelConfig::from_json(const std::string& text) {
    return model_from(nlohmann::json::parse(text));
}

std::string TrainConfig::to_json() const { return train_to(*this).dump(); }
TrainConfig TrainConfig::from_json(const std::string& text) {
    return train_from(nlohmann::json::parse(text));
}

ModelConfig model_config_from_file(const std::string& path) {
    return model_from(parse_file(path));
}
TrainConfig train_config_from_file(const std::string& path) {
    return train_from(parse_file(path));
}

void load_run_config(const std::string& path, ModelConfig& model, TrainConfig& train) {
    nlohmann::json j = parse_file(path);
    reject_unknown(j, {"model", "train"}, "run");
    model = j.contains("model") ? model_from(j["model"]) : ModelConfig{};
    train = j.contains("train") ? train_from(j["train"]) : TrainConfig{};
}

}  // namespace hdrvqa
