#include "hdrvqa/finetune.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "hdrvqa/color.hpp"
#include "hdrvqa/loss.hpp"
#include "hdrvqa/schedule.hpp"
#include "hdrvqa/views.hpp"

namespace hdrvqa {

namespace fs = std::filesystem;

namespace {

struct TrainItem {
    std::string clip_id;
    Tensor frame;  // [1,3,h,w] RGB
};

Tensor load_rgb_tensor(const ClipRecord& clip, int64_t frame_index) {
    FrameGeometry geom = load_geometry(default_sidecar_path(clip.path));
    HdrFrame f = load_frame(clip.path, geom, frame_index);
    if (f.geom.layout == PixelLayout::YCbCr) f = ycbcr_to_rgb(f);
    return frame_to_tensor(f);
}

std::vector<TrainItem> load_training_items(const CorpusManifest& manifest,
                                           const TrainConfig& cfg) {
    std::vector<TrainItem> items(manifest.clips.size() * size_t(cfg.frames_per_clip));
#pragma omp parallel for schedule(dynamic)
    for (int64_t i = 0; i < int64_t(manifest.clips.size()); ++i) {
        const ClipRecord& clip = manifest.clips[i];
        for (int j = 0; j < cfg.frames_per_clip; ++j) {
            int64_t idx;
            if (j == 0 && clip.sampled_frame >= 0) {
                idx = clip.sampled_frame;
            } else {
                ClipRecord alt = clip;
                alt.clip_id = clip.clip_id + "#" + std::to_string(j);
                idx = sample_training_frame_index(alt, cfg.seed);
            }
            TrainItem& item = items[size_t(i) * cfg.frames_per_clip + j];
            item.clip_id = clip.clip_id + (j ? "#" + std::to_string(j) : "");
            item.frame = load_rgb_tensor(clip, idx);
        }
    }
    return items;
}

}  // namespace

FinetuneResult finetune(const CorpusManifest& manifest, const ModelConfig& model_cfg,
                        const TrainConfig& train_cfg, const std::string& out_dir) {
    model_cfg.validate();
    train_cfg.validate();
    require(!manifest.clips.empty(), ErrorClass::ConfigInvalid, "manifest has no clips");
    fs::create_directories(out_dir);

    const std::string manifest_hash = hex64(fnv1a64(manifest.to_json()));

    std::unique_ptr<ContrastiveModel> model;
    if (model_cfg.weights_init == WeightsInit::Checkpoint) {
        CheckpointMeta meta;
        model = load_checkpoint(model_cfg.init_checkpoint, &meta);
        require(meta.model.encoder_kind == model_cfg.encoder_kind &&
                    meta.model.encoder_dim == model_cfg.encoder_dim &&
                    meta.model.projector_dim == model_cfg.projector_dim,
                ErrorClass::CkptIncompatible,
                "init checkpoint does not match the requested model");
    } else {
        model = std::make_unique<ContrastiveModel>(model_cfg, train_cfg.seed);
    }

    FinetuneResult result;
    CheckpointMeta meta;
    meta.model = model->config();
    meta.train_config_json = train_cfg.to_json();
    meta.manifest_hash = manifest_hash;

    if (train_cfg.epochs == 0) {
        meta.epoch = 0;
        result.final_checkpoint = (fs::path(out_dir) / "final.ckpt").string();
        save_checkpoint(result.final_checkpoint, *model, meta);
        return result;
    }

    std::vector<TrainItem> items = load_training_items(manifest, train_cfg);
    for (const TrainItem& it : items)
        require(it.frame.h >= train_cfg.crop_size && it.frame.w >= train_cfg.crop_size,
                ErrorClass::DimensionMismatch,
                "frame smaller than crop size: " + it.clip_id);

    const int n_items = int(items.size());
    const int batch = std::min(train_cfg.batch_size, n_items);
    const int64_t steps_per_epoch = (n_items + batch - 1) / batch;
    const int anchor_patches =
        (train_cfg.crop_size / train_cfg.patch_size) * (train_cfg.crop_size / train_cfg.patch_size);
    const int positive_patches = (train_cfg.crop_size / 2 / train_cfg.patch_size) *
                                 (train_cfg.crop_size / 2 / train_cfg.patch_size);
    const int patches_per_item = anchor_patches + positive_patches;

    Sgd sgd{train_cfg.momentum, train_cfg.weight_decay};
    std::vector<Param*> params = model->params();

    std::ofstream log_out(fs::path(out_dir) / "train_log.jsonl");
    int64_t global_step = 0;

    for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        std::vector<int> order(n_items);
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng = Rng::derive(train_cfg.seed, "epoch-shuffle", uint64_t(epoch));
        shuffle_rng.shuffle(order);

        double loss_sum = 0;
        double last_lr = 0;
        for (int64_t step = 0; step < steps_per_epoch; ++step) {
            int b0 = int(step) * batch;
            int bn = std::min(batch, n_items - b0);
            if (bn < 2) break;  // a contrastive batch needs at least two frames

            // assemble the patch batch: both views of every frame
            Tensor patches(bn * patches_per_item, 3, train_cfg.patch_size, train_cfg.patch_size);
#pragma omp parallel for schedule(dynamic)
            for (int bi = 0; bi < bn; ++bi) {
                const TrainItem& item = items[order[b0 + bi]];
                Rng view_rng = Rng::derive(train_cfg.seed, "views:" + item.clip_id,
                                           uint64_t(epoch));
                HdrFrame tmp;  // build_views takes a frame; wrap the tensor
                FrameGeometry g;
                g.width = item.frame.w;
                g.height = item.frame.h;
                g.bit_depth = 10;
                g.layout = PixelLayout::RGB;
                g.chroma = ChromaSiting::Cs444;
                tmp.geom = g;
                for (int c = 0; c < 3; ++c) {
                    tmp.planes[c] = Plane(g.width, g.height);
                    std::copy(item.frame.v.begin() + size_t(c) * g.width * g.height,
                              item.frame.v.begin() + size_t(c + 1) * g.width * g.height,
                              tmp.planes[c].v.begin());
                }
                ViewPair vp = build_views(tmp, train_cfg.crop_size, view_rng);
                Tensor ap = patchify(vp.anchor, train_cfg.patch_size);
                Tensor pp = patchify(vp.positive, train_cfg.patch_size);
                float* dst = patches.image(bi * patches_per_item);
                std::copy(ap.v.begin(), ap.v.end(), dst);
                std::copy(pp.v.begin(), pp.v.end(), dst + ap.size());
            }

            // forward
            Tensor pooled = model->encode(patches, true);  // [patches, D]
            const int d = model->feature_dim();
            Tensor h(2 * bn, d, 1, 1);
            for (int bi = 0; bi < bn; ++bi) {
                const float* base = pooled.image(bi * patches_per_item);
                float* ha = h.image(2 * bi);
                float* hp = h.image(2 * bi + 1);
                for (int p = 0; p < anchor_patches; ++p)
                    for (int c = 0; c < d; ++c) ha[c] += base[size_t(p) * d + c];
                for (int p = 0; p < positive_patches; ++p)
                    for (int c = 0; c < d; ++c)
                        hp[c] += base[size_t(anchor_patches + p) * d + c];
                for (int c = 0; c < d; ++c) {
                    ha[c] /= float(anchor_patches);
                    hp[c] /= float(positive_patches);
                }
            }
            Tensor z = model->project(h, true);  // [2bn, K]

            LabeledBatch lb;
            lb.n = 2 * bn;
            lb.k = model->config().projector_dim;
            lb.tau = train_cfg.tau;
            lb.z.assign(z.v.begin(), z.v.end());
            lb.labels.resize(lb.n);
            lb.ugc_mask.assign(lb.n, 1);
            for (int bi = 0; bi < bn; ++bi) {
                lb.labels[2 * bi] = order[b0 + bi];
                lb.labels[2 * bi + 1] = order[b0 + bi];
            }

            std::vector<double> grad;
            double loss = total_loss_grad(lb, grad);
            if (!std::isfinite(loss))
                fail(ErrorClass::NonFiniteLoss,
                     "non-finite loss at epoch " + std::to_string(epoch) + " step " +
                         std::to_string(step));
            loss_sum += loss;

            // backward
            for (Param* p : params) p->zero_grad();
            Tensor dz(lb.n, lb.k, 1, 1);
            for (size_t i = 0; i < grad.size(); ++i) dz.v[i] = float(grad[i]);
            Tensor dh = model->backward_projector(dz);
            Tensor dpool(patches.n, d, 1, 1);
            for (int bi = 0; bi < bn; ++bi) {
                const float* da = dh.image(2 * bi);
                const float* dp = dh.image(2 * bi + 1);
                float* base = dpool.image(bi * patches_per_item);
                for (int p = 0; p < anchor_patches; ++p)
                    for (int c = 0; c < d; ++c)
                        base[size_t(p) * d + c] = da[c] / float(anchor_patches);
                for (int p = 0; p < positive_patches; ++p)
                    for (int c = 0; c < d; ++c)
                        base[size_t(anchor_patches + p) * d + c] = dp[c] / float(positive_patches);
            }
            model->backward_encoder(dpool);

            last_lr = lr_at(global_step, train_cfg.base_lr, train_cfg.warmup_epochs,
                            train_cfg.epochs, steps_per_epoch);
            sgd.step(params, last_lr);
            ++global_step;
        }

        double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        EpochLog el{epoch + 1, loss_sum / double(steps_per_epoch), last_lr, wall};
        result.log.push_back(el);
        nlohmann::ordered_json lj;
        lj["epoch"] = el.epoch;
        lj["mean_loss"] = el.mean_loss;
        lj["lr"] = el.lr;
        lj["wall_s"] = el.wall_s;
        log_out << lj.dump() << "\n";
        log_out.flush();

        meta.epoch = epoch + 1;
        char name[32];
        std::snprintf(name, sizeof(name), "epoch_%03d.ckpt", epoch + 1);
        std::string ck = (fs::path(out_dir) / name).string();
        save_checkpoint(ck, *model, meta);
        result.epoch_checkpoints.push_back(ck);
    }

    result.final_checkpoint = (fs::path(out_dir) / "final.ckpt").string();
    save_checkpoint(result.final_checkpoint, *model, meta);
    return result;
}

}  // namespace hdrvqa
