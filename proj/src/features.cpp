#include "hdrvqa/features.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "hdrvqa/color.hpp"
#include "hdrvqa/raw_io.hpp"
#include "hdrvqa/views.hpp"

namespace hdrvqa {

namespace {

// Batched two-scale inference; frames must share dims.
std::vector<std::vector<float>> encode_two_scale(ContrastiveModel& model,
                                                 const std::vector<Tensor>& frames) {
    const int d = model.feature_dim();
    const int n = int(frames.size());
    Tensor native(n, 3, frames[0].h, frames[0].w);
    for (int i = 0; i < n; ++i)
        std::memcpy(native.image(i), frames[i].v.data(), frames[i].size() * sizeof(float));
    Tensor half(n, 3, frames[0].h / 2, frames[0].w / 2);
    for (int i = 0; i < n; ++i) {
        Tensor h = half_scale_image(frames[i]);
        std::memcpy(half.image(i), h.v.data(), h.size() * sizeof(float));
    }
    Tensor hn = model.encode(native, false);
    Tensor hh = model.encode(half, false);
    std::vector<std::vector<float>> out(n, std::vector<float>(2 * d));
    for (int i = 0; i < n; ++i) {
        std::memcpy(out[i].data(), hn.image(i), size_t(d) * sizeof(float));
        std::memcpy(out[i].data() + d, hh.image(i), size_t(d) * sizeof(float));
    }
    return out;
}

}  // namespace

std::vector<float> extract_frame_feature(const HdrFrame& rgb_frame, ContrastiveModel& model) {
    require(rgb_frame.geom.layout == PixelLayout::RGB, ErrorClass::LayoutMismatch,
            "extract_frame_feature: needs RGB input");
    require(rgb_frame.geom.width >= 16 && rgb_frame.geom.height >= 16,
            ErrorClass::DimensionMismatch, "frame below minimum encoder input (16x16)");
    std::vector<Tensor> one;
    one.push_back(frame_to_tensor(rgb_frame));
    return encode_two_scale(model, one)[0];
}

std::vector<float> pool_frame_features(const std::vector<std::vector<float>>& frames) {
    require(!frames.empty(), ErrorClass::DegenerateInput, "pooling over zero frames");
    const size_t dim = frames[0].size();
    for (const auto& f : frames)
        require(f.size() == dim, ErrorClass::DimensionMismatch, "ragged frame feature lengths");
    std::vector<double> acc(dim, 0.0);
    for (const auto& f : frames)
        for (size_t i = 0; i < dim; ++i) acc[i] += f[i];
    std::vector<float> out(dim);
    for (size_t i = 0; i < dim; ++i) out[i] = float(acc[i] / double(frames.size()));
    return out;
}

VideoFeature extract_video(const std::string& path, const FrameGeometry& geom,
                           ContrastiveModel& model, const std::string& checkpoint_hash,
                           const ExtractOptions& opts) {
    require(opts.frame_stride >= 1, ErrorClass::ConfigInvalid, "stride must be >= 1");
    int64_t count = raw_frame_count(path, geom);
    std::vector<int64_t> indices;
    for (int64_t i = 0; i < count; i += opts.frame_stride) indices.push_back(i);
    require(!indices.empty(), ErrorClass::DegenerateInput,
            "stride selects zero frames from " + path);

    std::vector<std::vector<float>> frame_feats;
    std::vector<Tensor> pending;
    auto flush = [&]() {
        if (pending.empty()) return;
        for (auto& f : encode_two_scale(model, pending)) frame_feats.push_back(std::move(f));
        pending.clear();
    };
    for (int64_t idx : indices) {
        HdrFrame f = load_frame(path, geom, idx);
        if (f.geom.layout == PixelLayout::YCbCr) f = ycbcr_to_rgb(f);
        Tensor t = frame_to_tensor(f);
        if (opts.center_crop > 0 && t.h >= opts.center_crop && t.w >= opts.center_crop)
            t = crop_image(t, (t.w - opts.center_crop) / 2, (t.h - opts.center_crop) / 2,
                           opts.center_crop);
        pending.push_back(std::move(t));
        if (int(pending.size()) >= opts.batch_frames) flush();
    }
    flush();

    VideoFeature vf;
    vf.vec = pool_frame_features(frame_feats);
    vf.n_frames_pooled = int(frame_feats.size());
    vf.checkpoint_hash = checkpoint_hash;
    return vf;
}

const VideoFeature* FeatureBank::find(const std::string& video_id) const {
    for (const VideoFeature& r : records)
        if (r.video_id == video_id) return &r;
    return nullptr;
}

void FeatureBank::add(VideoFeature f) {
    require(find(f.video_id) == nullptr, ErrorClass::ConfigInvalid,
            "duplicate video_id in bank: " + f.video_id);
    require(int(f.vec.size()) == dim, ErrorClass::DimensionMismatch,
            "feature length mismatch for " + f.video_id);
    for (float v : f.vec)
        require(std::isfinite(v), ErrorClass::DomainError,
                "non-finite feature entry in " + f.video_id);
    require(f.n_frames_pooled >= 1, ErrorClass::DomainError,
            "n_frames_pooled must be >= 1 for " + f.video_id);
    records.push_back(std::move(f));
}

namespace {
constexpr char kBankMagic[8] = {'H', 'V', 'Q', 'A', 'B', 'A', 'N', 'K'};
constexpr uint32_t kBankVersion = 1;
}  // namespace

void save_feature_bank(const std::string& path, const FeatureBank& bank) {
    // enforce key uniqueness at save time as well
    for (size_t i = 0; i < bank.records.size(); ++i)
        for (size_t j = i + 1; j < bank.records.size(); ++j)
            require(bank.records[i].video_id != bank.records[j].video_id,
                    ErrorClass::ConfigInvalid,
                    "duplicate video_id in bank: " + bank.records[i].video_id);

    nlohmann::ordered_json j;
    j["dim"] = bank.dim;
    j["checkpoint_hash"] = bank.checkpoint_hash;
    auto recs = nlohmann::ordered_json::array();
    for (const VideoFeature& r : bank.records) {
        nlohmann::ordered_json rj;
        rj["video_id"] = r.video_id;
        rj["n_frames_pooled"] = r.n_frames_pooled;
        rj["checkpoint_hash"] = r.checkpoint_hash;
        recs.push_back(rj);
    }
    j["records"] = recs;
    std::string header = j.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorClass::FileNotFound, "cannot write bank: " + path);
    uint64_t h = kFnvBasis;
    auto put = [&](const void* data, size_t n) {
        out.write(static_cast<const char*>(data), std::streamsize(n));
        h = fnv1a64(data, n, h);
    };
    put(kBankMagic, sizeof(kBankMagic));
    put(&kBankVersion, sizeof(kBankVersion));
    uint64_t hlen = header.size();
    put(&hlen, sizeof(hlen));
    put(header.data(), header.size());
    for (const VideoFeature& r : bank.records) put(r.vec.data(), r.vec.size() * sizeof(float));
    out.write(reinterpret_cast<const char*>(&h), sizeof(h));
    require(out.good(), ErrorClass::Internal, "bank write failed: " + path);
}

FeatureBank load_feature_bank(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorClass::FileNotFound, "no such bank: " + path);
    uint64_t h = kFnvBasis;
    auto get = [&](void* data, size_t n) {
        in.read(static_cast<char*>(data), std::streamsize(n));
        require(in.good(), ErrorClass::DataCorrupt, "truncated bank: " + path);
        h = fnv1a64(data, n, h);
    };
    char magic[8];
    get(magic, sizeof(magic));
    require(std::memcmp(magic, kBankMagic, 8) == 0, ErrorClass::DataCorrupt,
            "not a feature bank: " + path);
    uint32_t version = 0;
    get(&version, sizeof(version));
    require(version == kBankVersion, ErrorClass::SchemaVersion,
            "unsupported bank version " + std::to_string(version));
    uint64_t hlen = 0;
    get(&hlen, sizeof(hlen));
    std::string header(hlen, '\0');
    get(header.data(), hlen);

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(header);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorClass::DataCorrupt, "bad bank header: " + std::string(e.what()));
    }
    FeatureBank bank;
    bank.dim = j.at("dim").get<int>();
    bank.checkpoint_hash = j.at("checkpoint_hash").get<std::string>();
    for (const auto& rj : j.at("records")) {
        VideoFeature r;
        r.video_id = rj.at("video_id").get<std::string>();
        r.n_frames_pooled = rj.at("n_frames_pooled").get<int>();
        r.checkpoint_hash = rj.at("checkpoint_hash").get<std::string>();
        r.vec.resize(size_t(bank.dim));
        get(r.vec.data(), r.vec.size() * sizeof(float));
        bank.records.push_back(std::move(r));
    }
    uint64_t stored = 0;
    in.read(reinterpret_cast<char*>(&stored), sizeof(stored));
    require(in.good() && stored == h, ErrorClass::DataCorrupt, "bank checksum mismatch: " + path);
    return bank;
}

void export_feature_csv(const std::string& path, const FeatureBank& bank) {
    std::ofstream out(path);
    require(out.good(), ErrorClass::FileNotFound, "cannot write csv: " + path);
    out << "video_id";
    for (int i = 0; i < bank.dim; ++i) out << ",f" << i;
    out << "\n";
    for (const VideoFeature& r : bank.records) {
        out << r.video_id;
        for (float v : r.vec) out << "," << v;
        out << "\n";
    }
}

}  // namespace hdrvqa
