#pragma once

#include <string>
#include <vector>

#include "hdrvqa/frame.hpp"
#include "hdrvqa/nn.hpp"

namespace hdrvqa {

// Temporally mean-pooled per-video descriptor; 2*D entries
// (native-scale pooled features followed by half-scale pooled features).
struct VideoFeature {
    std::string video_id;
    std::vector<float> vec;
    int n_frames_pooled = 0;
    std::string checkpoint_hash;
};

// Frozen-encoder frame feature: concat of pooled encoder outputs at native
// and half scale, projector not applied, no augmentation.
std::vector<float> extract_frame_feature(const HdrFrame& rgb_frame, ContrastiveModel& model);

// Elementwise mean over frame vectors.
std::vector<float> pool_frame_features(const std::vector<std::vector<float>>& frames);

struct ExtractOptions {
    int frame_stride = 1;
    int center_crop = 0;  // 0 = full frames
    int batch_frames = 4;
};

VideoFeature extract_video(const std::string& path, const FrameGeometry& geom,
                           ContrastiveModel& model, const std::string& checkpoint_hash,
                           const ExtractOptions& opts = {});

struct FeatureBank {
    int dim = 0;
    std::string checkpoint_hash;
    std::vector<VideoFeature> records;

    const VideoFeature* find(const std::string& video_id) const;
    void add(VideoFeature f);
};

void save_feature_bank(const std::string& path, const FeatureBank& bank);
FeatureBank load_feature_bank(const std::string& path);
void export_feature_csv(const std::string& path, const FeatureBank& bank);

}  // namespace hdrvqa
