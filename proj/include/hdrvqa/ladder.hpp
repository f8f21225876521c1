#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hdrvqa/frame.hpp"
#include "hdrvqa/raw_io.hpp"

namespace hdrvqa {

struct LadderRung {
    std::string name;
    int width = 0;
    int height = 0;
    double bitrate_mbps = 0.0;
};

// The nine streaming rungs: three 4K, three 1080p, two 720p, one 540p.
std::vector<LadderRung> default_ladder();
std::vector<LadderRung> ladder_from_file(const std::string& path);

struct SourceDesc {
    std::string source_id;
    std::string path;      // raw video; geometry sidecar at <path>.json
    double duration_s = 0;
    Transfer transfer = Transfer::PQ;
};

struct ClipRecord {
    std::string source_id;
    std::string clip_id;
    double scene_start = 0;  // window the clip was drawn from
    double clip_start = 0;
    double duration = 10.0;
    int distortion_class = 0;  // 0 = pristine, 1..9 = ladder rungs
    std::string path;
    uint64_t rng_seed = 0;
    int64_t sampled_frame = -1;  // training frame, fixed before training
    double achieved_bitrate_mbps = 0.0;
    std::string rung_name;
};

struct CorpusManifest {
    uint64_t global_seed = 0;
    std::vector<SourceDesc> sources;
    std::vector<LadderRung> ladder;
    std::vector<ClipRecord> clips;
    std::vector<std::string> warnings;
    std::string encode_cmd;
    std::string decode_cmd;

    void validate() const;
    std::string to_json() const;
    static CorpusManifest from_json(const std::string& text);
};

CorpusManifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const CorpusManifest& m);

// Templated subprocess contract. Placeholders: {input}, {output}, {width},
// {height}, {bitrate_kbps}, {pix_fmt}; exit code 0 means success.
struct EncoderContract {
    std::string encode_cmd;
    std::string decode_cmd;
    std::string probe_cmd;  // optional; prints key=value lines
    int timeout_s = 0;      // 0 disables; wraps the command with timeout(1)
    double bitrate_tolerance = 0.15;
};

// Fixed consecutive 120 s windows, one uniformly random 10 s interval per
// window (whole seconds). Deterministic per (source, seed).
std::vector<ClipRecord> segment_clips(const SourceDesc& source, uint64_t rng_seed);

// Cut the clip's frames out of the source into its own raw file + sidecar.
void extract_clip(const SourceDesc& source, ClipRecord& clip, const std::string& out_dir);

// Downscale -> encode at the rung bitrate -> decode -> upscale back to the
// pristine resolution. Returns one record per rung, classes 1..9; bitrate
// misses beyond the tolerance append to `warnings` instead of failing.
std::vector<ClipRecord> apply_ladder(const ClipRecord& pristine,
                                     const std::vector<LadderRung>& rungs,
                                     const EncoderContract& contract,
                                     const std::string& out_dir,
                                     std::vector<std::string>& warnings);

// Uniformly random frame index for the clip, deterministic per
// (clip_id, rng_seed).
int64_t sample_training_frame_index(const ClipRecord& clip, uint64_t rng_seed);
HdrFrame sample_training_frame(const ClipRecord& clip, uint64_t rng_seed);

struct ForgeOptions {
    std::vector<LadderRung> ladder;
    EncoderContract contract;
    uint64_t seed = 0;
    std::string out_dir;
    int workers = 1;
    bool resume = false;
};

// Whole pipeline over a source list; clip jobs run in a bounded worker pool,
// the manifest is assembled by a single writer at the end.
CorpusManifest forge_run(const std::vector<SourceDesc>& sources, const ForgeOptions& opts);

std::vector<SourceDesc> load_source_list(const std::string& path);
void save_source_list(const std::string& path, const std::vector<SourceDesc>& sources);

}  // namespace hdrvqa
