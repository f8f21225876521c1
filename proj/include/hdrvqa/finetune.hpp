#pragma once

#include <string>
#include <vector>

#include "hdrvqa/config.hpp"
#include "hdrvqa/ladder.hpp"
#include "hdrvqa/nn.hpp"

namespace hdrvqa {

struct EpochLog {
    int epoch = 0;
    double mean_loss = 0;
    double lr = 0;
    double wall_s = 0;
};

struct FinetuneResult {
    std::string final_checkpoint;
    std::vector<std::string> epoch_checkpoints;
    std::vector<EpochLog> log;
};

// Contrastive fine-tuning over one sampled frame per clip: random crop plus
// flipped/half-scale counterpart per frame, every frame its own class, batch
// loss from the pairwise NT-Xent branch, SGD with warmup + cosine decay.
// Emits per-epoch checkpoints, a final checkpoint, and a JSONL training log.
FinetuneResult finetune(const CorpusManifest& manifest, const ModelConfig& model_cfg,
                        const TrainConfig& train_cfg, const std::string& out_dir);

}  // namespace hdrvqa
