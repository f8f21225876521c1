#include "hdrvqa/ladder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "hdrvqa/resample.hpp"

namespace hdrvqa {

namespace fs = std::filesystem;

std::vector<LadderRung> default_ladder() {
    return {
        {"4k-15", 3840, 2160, 15.0},  {"4k-6", 3840, 2160, 6.0},   {"4k-3", 3840, 2160, 3.0},
        {"1080p-9", 1920, 1080, 9.0}, {"1080p-6", 1920, 1080, 6.0}, {"1080p-1", 1920, 1080, 1.0},
        {"720p-4.6", 1280, 720, 4.6}, {"720p-2.6", 1280, 720, 2.6}, {"540p-2.2", 960, 540, 2.2},
    };
}

std::vector<LadderRung> ladder_from_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorClass::FileNotFound, "no such ladder file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorClass::ConfigInvalid, "bad ladder json: " + std::string(e.what()));
    }
    std::vector<LadderRung> rungs;
    for (const auto& r : j.at("rungs")) {
        LadderRung rung;
        rung.name = r.at("name").get<std::string>();
        rung.width = r.at("width").get<int>();
        rung.height = r.at("height").get<int>();
        rung.bitrate_mbps = r.at("bitrate_mbps").get<double>();
        require(rung.bitrate_mbps > 0, ErrorClass::ConfigInvalid, "rung bitrate must be positive");
        rungs.push_back(rung);
    }
    return rungs;
}

// ------------------------------------------------------------- manifest

namespace {
constexpr int kManifestSchema = 1;

nlohmann::ordered_json clip_to_json(const ClipRecord& c) {
    nlohmann::ordered_json j;
    j["source_id"] = c.source_id;
    j["clip_id"] = c.clip_id;
    j["scene_start"] = c.scene_start;
    j["clip_start"] = c.clip_start;
    j["duration"] = c.duration;
    j["distortion_class"] = c.distortion_class;
    j["path"] = c.path;
    j["rng_seed"] = c.rng_seed;
    j["sampled_frame"] = c.sampled_frame;
    j["achieved_bitrate_mbps"] = c.achieved_bitrate_mbps;
    j["rung_name"] = c.rung_name;
    return j;
}

ClipRecord clip_from_json(const nlohmann::json& j) {
    ClipRecord c;
    c.source_id = j.at("source_id").get<std::string>();
    c.clip_id = j.at("clip_id").get<std::string>();
    c.scene_start = j.at("scene_start").get<double>();
    c.clip_start = j.at("clip_start").get<double>();
    c.duration = j.at("duration").get<double>();
    c.distortion_class = j.at("distortion_class").get<int>();
    c.path = j.at("path").get<std::string>();
    c.rng_seed = j.at("rng_seed").get<uint64_t>();
    c.sampled_frame = j.value("sampled_frame", int64_t(-1));
    c.achieved_bitrate_mbps = j.value("achieved_bitrate_mbps", 0.0);
    c.rung_name = j.value("rung_name", "");
    return c;
}
}  // namespace

void CorpusManifest::validate() const {
    size_t pristine = 0;
    std::map<std::string, std::vector<std::pair<double, double>>> intervals;
    for (const ClipRecord& c : clips) {
        require(c.duration == 10.0, ErrorClass::ConfigInvalid,
                "clip duration must be exactly 10 s: " + c.clip_id);
        require(c.distortion_class >= 0 && c.distortion_class <= int(ladder.size()),
                ErrorClass::ConfigInvalid, "distortion class out of range: " + c.clip_id);
        if (c.distortion_class == 0) {
            ++pristine;
            intervals[c.source_id].emplace_back(c.clip_start, c.clip_start + c.duration);
        }
    }
    if (!ladder.empty())
        require(clips.size() == pristine * (1 + ladder.size()), ErrorClass::ConfigInvalid,
                "manifest expansion broken: clips != pristine x (1 + rungs)");
    for (auto& [src, iv] : intervals) {
        std::sort(iv.begin(), iv.end());
        for (size_t i = 1; i < iv.size(); ++i)
            require(iv[i].first >= iv[i - 1].second, ErrorClass::ConfigInvalid,
                    "overlapping clips in source: " + src);
    }
}

std::string CorpusManifest::to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = kManifestSchema;
    j["global_seed"] = global_seed;
    auto srcs = nlohmann::ordered_json::array();
    for (const SourceDesc& s : sources) {
        nlohmann::ordered_json sj;
        sj["source_id"] = s.source_id;
        sj["duration"] = s.duration_s;
        sj["transfer"] = to_string(s.transfer);
        sj["path"] = s.path;
        srcs.push_back(sj);
    }
    j["sources"] = srcs;
    auto rungs = nlohmann::ordered_json::array();
    for (const LadderRung& r : ladder) {
        nlohmann::ordered_json rj;
        rj["name"] = r.name;
        rj["width"] = r.width;
        rj["height"] = r.height;
        rj["bitrate_mbps"] = r.bitrate_mbps;
        rungs.push_back(rj);
    }
    j["ladder"] = rungs;
    auto cl = nlohmann::ordered_json::array();
    for (const ClipRecord& c : clips) cl.push_back(clip_to_json(c));
    j["clips"] = cl;
    j["warnings"] = warnings;
    j["encode_cmd"] = encode_cmd;
    j["decode_cmd"] = decode_cmd;
    return j.dump(2);
}

CorpusManifest CorpusManifest::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorClass::DataCorrupt, "bad manifest json: " + std::string(e.what()));
    }
    require(j.value("schema", 0) == kManifestSchema, ErrorClass::SchemaVersion,
            "unsupported manifest schema");
    CorpusManifest m;
    m.global_seed = j.at("global_seed").get<uint64_t>();
    for (const auto& sj : j.at("sources")) {
        SourceDesc s;
        s.source_id = sj.at("source_id").get<std::string>();
        s.duration_s = sj.at("duration").get<double>();
        s.transfer = transfer_from_string(sj.at("transfer").get<std::string>());
        s.path = sj.at("path").get<std::string>();
        m.sources.push_back(s);
    }
    for (const auto& rj : j.at("ladder")) {
        LadderRung r;
        r.name = rj.at("name").get<std::string>();
        r.width = rj.at("width").get<int>();
        r.height = rj.at("height").get<int>();
        r.bitrate_mbps = rj.at("bitrate_mbps").get<double>();
        m.ladder.push_back(r);
    }
    for (const auto& cj : j.at("clips")) m.clips.push_back(clip_from_json(cj));
    if (j.contains("warnings")) m.warnings = j["warnings"].get<std::vector<std::string>>();
    m.encode_cmd = j.value("encode_cmd", "");
    m.decode_cmd = j.value("decode_cmd", "");
    return m;
}

CorpusManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorClass::FileNotFound, "no such manifest: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return CorpusManifest::from_json(text);
}

void save_manifest(const std::string& path, const CorpusManifest& m) {
    std::ofstream out(path);
    require(out.good(), ErrorClass::FileNotFound, "cannot write manifest: " + path);
    out << m.to_json() << "\n";
}

// ------------------------------------------------------------- segmentation

std::vector<ClipRecord> segment_clips(const SourceDesc& source, uint64_t rng_seed) {
    constexpr double kWindow = 120.0;
    constexpr double kClip = 10.0;
    require(source.duration_s >= 240.0, ErrorClass::DomainError,
            "source shorter than 240 s: " + source.source_id);
    int windows = int(source.duration_s / kWindow);
    std::vector<ClipRecord> clips;
    clips.reserve(windows);
    for (int w = 0; w < windows; ++w) {
        Rng rng = Rng::derive(rng_seed, "segment:" + source.source_id, uint64_t(w));
        double offset = double(rng.below(uint64_t(kWindow - kClip) + 1));
        ClipRecord c;
        c.source_id = source.source_id;
        c.clip_id = source.source_id + "_w" + std::to_string(w);
        c.scene_start = w * kWindow;
        c.clip_start = c.scene_start + offset;
        c.duration = kClip;
        c.distortion_class = 0;
        c.rng_seed = rng_seed;
        clips.push_back(c);
    }
    return clips;
}

void extract_clip(const SourceDesc& source, ClipRecord& clip, const std::string& out_dir) {
    FrameGeometry geom = load_geometry(default_sidecar_path(source.path));
    int64_t first = int64_t(std::llround(clip.clip_start * geom.fps));
    int64_t count = int64_t(std::llround(clip.duration * geom.fps));
    require(count >= 1, ErrorClass::GeometryMismatch,
            "clip spans no frames (fps too low?): " + clip.clip_id);
    fs::create_directories(out_dir);
    std::string out_path = (fs::path(out_dir) / (clip.clip_id + ".raw")).string();
    // frame-at-a-time to keep memory flat on 4K sources
    bool append = false;
    for (int64_t i = 0; i < count; ++i) {
        HdrFrame f = load_frame(source.path, geom, first + i);
        save_frames(out_path, {f}, append);
        append = true;
    }
    save_geometry(default_sidecar_path(out_path), geom);
    clip.path = out_path;
}

// ------------------------------------------------------------- encoder contract

namespace {

std::string substitute(std::string templ, const std::map<std::string, std::string>& vars) {
    for (const auto& [key, val] : vars) {
        std::string tok = "{" + key + "}";
        size_t pos;
        while ((pos = templ.find(tok)) != std::string::npos) templ.replace(pos, tok.size(), val);
    }
    return templ;
}

void run_command(const std::string& cmd, int timeout_s, const std::string& what) {
    std::string full = cmd;
    if (timeout_s > 0) full = "timeout " + std::to_string(timeout_s) + " " + cmd;
    int rc = std::system(full.c_str());
    require(rc == 0, ErrorClass::EncoderFail,
            what + " failed (exit " + std::to_string(rc) + "): " + cmd);
}

std::string pix_fmt_of(const FrameGeometry& g) {
    std::string base = g.layout == PixelLayout::RGB
                           ? "gbrp"
                           : (g.chroma == ChromaSiting::Cs420 ? "yuv420p" : "yuv444p");
    if (g.bit_depth > 8) base += std::to_string(g.bit_depth) + "le";
    return base;
}

double probe_bitrate_mbps(const EncoderContract& contract, const std::string& encoded_path,
                          double duration_s) {
    if (!contract.probe_cmd.empty()) {
        std::string cmd = substitute(contract.probe_cmd, {{"input", encoded_path}});
        FILE* pipe = popen(cmd.c_str(), "r");
        require(pipe != nullptr, ErrorClass::EncoderFail, "probe command failed to start");
        char buf[256];
        double kbps = -1;
        while (fgets(buf, sizeof(buf), pipe)) {
            double v;
            if (sscanf(buf, "bitrate_kbps=%lf", &v) == 1) kbps = v;
        }
        int rc = pclose(pipe);
        require(rc == 0, ErrorClass::EncoderFail, "probe command failed: " + cmd);
        if (kbps >= 0) return kbps / 1000.0;
    }
    // fall back to container size over duration
    double bits = double(fs::file_size(encoded_path)) * 8.0;
    return bits / duration_s / 1e6;
}

}  // namespace

std::vector<ClipRecord> apply_ladder(const ClipRecord& pristine,
                                     const std::vector<LadderRung>& rungs,
                                     const EncoderContract& contract,
                                     const std::string& out_dir,
                                     std::vector<std::string>& warnings) {
    require(pristine.distortion_class == 0, ErrorClass::DomainError,
            "apply_ladder expects a pristine (class 0) clip");
    require(!rungs.empty(), ErrorClass::ConfigInvalid, "empty ladder");
    FrameGeometry src_geom = load_geometry(default_sidecar_path(pristine.path));
    int top_w = 0, top_h = 0;
    for (const LadderRung& r : rungs) {
        top_w = std::max(top_w, r.width);
        top_h = std::max(top_h, r.height);
    }
    require(src_geom.width == top_w && src_geom.height == top_h, ErrorClass::GeometryMismatch,
            "pristine clip resolution must match the top ladder rung");

    int64_t n_frames = raw_frame_count(pristine.path, src_geom);
    fs::create_directories(out_dir);

    std::vector<ClipRecord> out;
    for (size_t r = 0; r < rungs.size(); ++r) {
        const LadderRung& rung = rungs[r];
        std::string stem = pristine.clip_id + "_r" + std::to_string(r + 1);
        fs::path down_path = fs::path(out_dir) / (stem + ".down.raw");
        fs::path enc_path = fs::path(out_dir) / (stem + ".enc");
        fs::path dec_path = fs::path(out_dir) / (stem + ".dec.raw");
        fs::path final_path = fs::path(out_dir) / (stem + ".raw");

        FrameGeometry rung_geom = src_geom;
        rung_geom.width = rung.width;
        rung_geom.height = rung.height;

        for (int64_t i = 0; i < n_frames; ++i) {
            HdrFrame f = load_frame(pristine.path, src_geom, i);
            save_frames(down_path.string(), {rescale(f, rung.width, rung.height)}, i > 0);
        }
        save_geometry(default_sidecar_path(down_path.string()), rung_geom);

        std::map<std::string, std::string> vars = {
            {"input", down_path.string()},
            {"output", enc_path.string()},
            {"width", std::to_string(rung.width)},
            {"height", std::to_string(rung.height)},
            {"bitrate_kbps", std::to_string(int64_t(std::llround(rung.bitrate_mbps * 1000)))},
            {"pix_fmt", pix_fmt_of(rung_geom)},
        };
        run_command(substitute(contract.encode_cmd, vars), contract.timeout_s,
                    "encode " + stem);
        vars["input"] = enc_path.string();
        vars["output"] = dec_path.string();
        run_command(substitute(contract.decode_cmd, vars), contract.timeout_s,
                    "decode " + stem);

        FrameGeometry dec_geom = load_geometry(default_sidecar_path(dec_path.string()));
        require(dec_geom.width == rung.width && dec_geom.height == rung.height,
                ErrorClass::GeometryMismatch, "decoder returned wrong resolution for " + stem);
        int64_t dec_frames = raw_frame_count(dec_path.string(), dec_geom);
        require(dec_frames == n_frames, ErrorClass::DecodeFail,
                "decoder returned wrong frame count for " + stem);

        for (int64_t i = 0; i < n_frames; ++i) {
            HdrFrame f = load_frame(dec_path.string(), dec_geom, i);
            save_frames(final_path.string(), {rescale(f, src_geom.width, src_geom.height)}, i > 0);
        }
        save_geometry(default_sidecar_path(final_path.string()), src_geom);

        double achieved = probe_bitrate_mbps(contract, enc_path.string(), pristine.duration);
        double rel = std::abs(achieved - rung.bitrate_mbps) / rung.bitrate_mbps;
        if (rel > contract.bitrate_tolerance)
            warnings.push_back("bitrate miss on " + stem + ": target " +
                               std::to_string(rung.bitrate_mbps) + " Mbps, achieved " +
                               std::to_string(achieved) + " Mbps");

        fs::remove(down_path);
        fs::remove(default_sidecar_path(down_path.string()));
        fs::remove(dec_path);
        fs::remove(default_sidecar_path(dec_path.string()));

        ClipRecord rec = pristine;
        rec.clip_id = stem;
        rec.distortion_class = int(r + 1);
        rec.path = final_path.string();
        rec.achieved_bitrate_mbps = achieved;
        rec.rung_name = rung.name;
        rec.sampled_frame = -1;
        out.push_back(rec);
    }
    return out;
}

// ------------------------------------------------------------- frame sampling

int64_t sample_training_frame_index(const ClipRecord& clip, uint64_t rng_seed) {
    FrameGeometry geom = load_geometry(default_sidecar_path(clip.path));
    int64_t n = raw_frame_count(clip.path, geom);
    require(n >= 1, ErrorClass::DecodeFail, "clip has no frames: " + clip.clip_id);
    Rng rng = Rng::derive(rng_seed, "frame-sample:" + clip.clip_id);
    return int64_t(rng.below(uint64_t(n)));
}

HdrFrame sample_training_frame(const ClipRecord& clip, uint64_t rng_seed) {
    FrameGeometry geom = load_geometry(default_sidecar_path(clip.path));
    return load_frame(clip.path, geom, sample_training_frame_index(clip, rng_seed));
}

// ------------------------------------------------------------- forge

CorpusManifest forge_run(const std::vector<SourceDesc>& sources, const ForgeOptions& opts) {
    require(!opts.ladder.empty(), ErrorClass::ConfigInvalid, "forge needs a ladder");
    require(opts.workers >= 1, ErrorClass::ConfigInvalid, "workers must be >= 1");

    // plan all pristine clips up front so job order is deterministic
    std::vector<ClipRecord> pristine;
    std::vector<const SourceDesc*> clip_source;
    for (const SourceDesc& s : sources) {
        for (ClipRecord& c : segment_clips(s, opts.seed)) {
            pristine.push_back(c);
            clip_source.push_back(&s);
        }
    }

    struct JobResult {
        std::vector<ClipRecord> records;
        std::vector<std::string> warnings;
    };
    std::vector<JobResult> results(pristine.size());

    std::mutex mu;
    size_t next = 0;
    auto worker = [&]() {
        for (;;) {
            size_t job;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (next >= pristine.size()) return;
                job = next++;
            }
            ClipRecord clip = pristine[job];
            std::string done_marker = (fs::path(opts.out_dir) / (clip.clip_id + ".done")).string();
            JobResult res;
            if (opts.resume && fs::exists(done_marker)) {
                std::ifstream in(done_marker);
                std::string text((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
                nlohmann::json j = nlohmann::json::parse(text);
                for (const auto& cj : j.at("records")) res.records.push_back(clip_from_json(cj));
                res.warnings = j.value("warnings", std::vector<std::string>{});
            } else {
                extract_clip(*clip_source[job], clip, opts.out_dir);
                res.records.push_back(clip);
                std::vector<ClipRecord> rungs =
                    apply_ladder(clip, opts.ladder, opts.contract, opts.out_dir, res.warnings);
                res.records.insert(res.records.end(), rungs.begin(), rungs.end());
                for (ClipRecord& r : res.records)
                    r.sampled_frame = sample_training_frame_index(r, opts.seed);
                nlohmann::ordered_json j;
                auto arr = nlohmann::ordered_json::array();
                for (const ClipRecord& r : res.records) arr.push_back(clip_to_json(r));
                j["records"] = arr;
                j["warnings"] = res.warnings;
                std::ofstream out(done_marker);
                out << j.dump(2) << "\n";
            }
            results[job] = std::move(res);
        }
    };

    std::vector<std::thread> pool;
    for (int t = 0; t < opts.workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();

    CorpusManifest m;
    m.global_seed = opts.seed;
    m.sources = sources;
    m.ladder = opts.ladder;
    m.encode_cmd = opts.contract.encode_cmd;
    m.decode_cmd = opts.contract.decode_cmd;
    for (JobResult& r : results) {
        m.clips.insert(m.clips.end(), r.records.begin(), r.records.end());
        m.warnings.insert(m.warnings.end(), r.warnings.begin(), r.warnings.end());
    }
    m.validate();
    return m;
}

std::vector<SourceDesc> load_source_list(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorClass::FileNotFound, "no such source list: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorClass::ConfigInvalid, "bad source list json: " + std::string(e.what()));
    }
    std::vector<SourceDesc> out;
    for (const auto& sj : j.at("sources")) {
        SourceDesc s;
        s.source_id = sj.at("source_id").get<std::string>();
        s.path = sj.at("path").get<std::string>();
        s.duration_s = sj.at("duration").get<double>();
        s.transfer = transfer_from_string(sj.value("transfer", "pq"));
        out.push_back(s);
    }
    return out;
}

void save_source_list(const std::string& path, const std::vector<SourceDesc>& sources) {
    nlohmann::ordered_json j;
    auto arr = nlohmann::ordered_json::array();
    for (const SourceDesc& s : sources) {
        nlohmann::ordered_json sj;
        sj["source_id"] = s.source_id;
        sj["path"] = s.path;
        sj["duration"] = s.duration_s;
        sj["transfer"] = to_string(s.transfer);
        arr.push_back(sj);
    }
    j["sources"] = arr;
    std::ofstream out(path);
    require(out.good(), ErrorClass::FileNotFound, "cannot write source list: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace hdrvqa
