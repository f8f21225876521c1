#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hdrvqa/color.hpp"
#include "hdrvqa/config.hpp"
#include "hdrvqa/features.hpp"
#include "hdrvqa/finetune.hpp"
#include "hdrvqa/ladder.hpp"
#include "hdrvqa/protocol.hpp"

namespace fs = std::filesystem;
using namespace hdrvqa;

namespace {

constexpr const char* kToolVersion = "1.0.0";

std::string self_dir() {
    std::error_code ec;
    fs::path p = fs::canonical("/proc/self/exe", ec);
    if (ec) return ".";
    return p.parent_path().string();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorClass::FileNotFound, "no such file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorClass::FileNotFound, "cannot write: " + path);
    out << text;
}

// Config snapshot + content hash stamped next to each stage's outputs.
// Returns true when --resume may skip the stage (stamp unchanged).
bool stamp_stage(const std::string& out_dir, const std::string& stage,
                 const nlohmann::ordered_json& snapshot, bool resume,
                 const std::vector<std::string>& outputs_expected) {
    fs::create_directories(out_dir);
    std::string body = snapshot.dump(2);
    std::string hash = hex64(fnv1a64(body));
    fs::path snap_path = fs::path(out_dir) / (stage + "_config.json");
    fs::path stamp_path = fs::path(out_dir) / (stage + ".stamp");
    if (resume && fs::exists(stamp_path)) {
        std::string old = read_file(stamp_path.string());
        bool outputs_ok = true;
        for (const std::string& o : outputs_expected)
            if (!fs::exists(o)) outputs_ok = false;
        if (old == hash && outputs_ok) {
            std::cerr << stage << ": inputs unchanged, resume skips the stage\n";
            return true;
        }
    }
    write_file(snap_path.string(), body + "\n");
    write_file(stamp_path.string(), hash);
    return false;
}

int cmd_forge(const std::string& sources_path, const std::string& ladder_arg, uint64_t seed,
              const std::string& out_dir, int workers, EncoderContract contract, bool resume) {
    if (contract.encode_cmd.empty()) {
        std::string codec = (fs::path(self_dir()) / "rawcodec").string();
        contract.encode_cmd = codec +
                              " encode --input {input} --output {output}"
                              " --bitrate-kbps {bitrate_kbps} --width {width} --height {height}";
        contract.decode_cmd = codec + " decode --input {input} --output {output}";
        contract.probe_cmd = codec + " probe --input {input}";
    }
    ForgeOptions opts;
    opts.ladder = ladder_arg == "default" ? default_ladder() : ladder_from_file(ladder_arg);
    opts.contract = contract;
    opts.seed = seed;
    opts.out_dir = out_dir;
    opts.workers = workers;
    opts.resume = resume;

    std::vector<SourceDesc> sources = load_source_list(sources_path);
    nlohmann::ordered_json snap;
    snap["sources"] = sources_path;
    snap["sources_hash"] = hex64(hash_file(sources_path));
    snap["ladder"] = ladder_arg;
    snap["seed"] = seed;
    snap["workers"] = workers;
    snap["encode_cmd"] = contract.encode_cmd;
    snap["decode_cmd"] = contract.decode_cmd;
    std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();
    if (stamp_stage(out_dir, "forge", snap, resume, {manifest_path})) return 0;

    CorpusManifest m = forge_run(sources, opts);
    save_manifest(manifest_path, m);
    std::cerr << "forge: " << m.clips.size() << " clips, " << m.warnings.size()
              << " warnings -> " << manifest_path << "\n";
    return 0;
}

int cmd_finetune(const std::string& manifest_path, const std::string& init,
                 const std::string& config_path, const std::string& out_dir, bool resume) {
    ModelConfig mc;
    TrainConfig tc;
    if (!config_path.empty()) load_run_config(config_path, mc, tc);
    if (init == "random") {
        mc.weights_init = WeightsInit::Random;
    } else {
        require(fs::exists(init), ErrorClass::CkptNotFound, "no such checkpoint: " + init);
        mc.weights_init = WeightsInit::Checkpoint;
        mc.init_checkpoint = init;
        CheckpointMeta meta = peek_checkpoint(init);
        mc.encoder_kind = meta.model.encoder_kind;
        mc.encoder_dim = meta.model.encoder_dim;
        mc.projector_dim = meta.model.projector_dim;
        mc.toy_base_channels = meta.model.toy_base_channels;
    }
    CorpusManifest manifest = load_manifest(manifest_path);

    nlohmann::ordered_json snap;
    snap["manifest"] = manifest_path;
    snap["manifest_hash"] = hex64(hash_file(manifest_path));
    snap["init"] = init;
    snap["model"] = nlohmann::json::parse(mc.to_json());
    snap["train"] = nlohmann::json::parse(tc.to_json());
    std::string final_ckpt = (fs::path(out_dir) / "final.ckpt").string();
    if (stamp_stage(out_dir, "finetune", snap, resume, {final_ckpt})) return 0;

    FinetuneResult res = finetune(manifest, mc, tc, out_dir);
    std::cerr << "finetune: " << res.log.size() << " epochs -> " << res.final_checkpoint << "\n";
    return 0;
}

struct VideoEntry {
    std::string video_id;
    std::string path;
};

std::vector<VideoEntry> video_list_from_file(const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(read_file(path));
    std::vector<VideoEntry> out;
    if (j.contains("clips")) {
        CorpusManifest m = load_manifest(path);
        for (const ClipRecord& c : m.clips) out.push_back({c.clip_id, c.path});
    } else if (j.contains("videos")) {
        for (const auto& vj : j["videos"])
            out.push_back({vj.at("video_id").get<std::string>(), vj.at("path").get<std::string>()});
    } else {
        fail(ErrorClass::ConfigInvalid, "video list needs a 'videos' or 'clips' key: " + path);
    }
    return out;
}

int cmd_extract(const std::string& videos_path, const std::string& ckpt_path, int stride,
                const std::string& out_path, int crop, const std::string& csv, bool resume) {
    require(fs::exists(ckpt_path), ErrorClass::CkptNotFound, "no such checkpoint: " + ckpt_path);
    std::vector<VideoEntry> videos = video_list_from_file(videos_path);

    nlohmann::ordered_json snap;
    snap["videos"] = videos_path;
    snap["videos_hash"] = hex64(hash_file(videos_path));
    snap["ckpt"] = ckpt_path;
    snap["ckpt_hash"] = hex64(hash_file(ckpt_path));
    snap["stride"] = stride;
    snap["crop"] = crop;
    std::string out_dir = fs::path(out_path).parent_path().string();
    if (out_dir.empty()) out_dir = ".";
    if (stamp_stage(out_dir, "extract", snap, resume, {out_path})) return 0;

    std::unique_ptr<ContrastiveModel> model = load_checkpoint(ckpt_path);
    std::string ckpt_hash = hex64(hash_file(ckpt_path));

    FeatureBank bank;
    bank.dim = 2 * model->feature_dim();
    bank.checkpoint_hash = ckpt_hash;
    ExtractOptions opts;
    opts.frame_stride = stride;
    opts.center_crop = crop;
    for (const VideoEntry& v : videos) {
        FrameGeometry geom = load_geometry(default_sidecar_path(v.path));
        VideoFeature f = extract_video(v.path, geom, *model, ckpt_hash, opts);
        f.video_id = v.video_id;
        bank.add(std::move(f));
        std::cerr << "extract: " << v.video_id << " (" << bank.records.size() << "/"
                  << videos.size() << ")\n";
    }
    save_feature_bank(out_path, bank);
    if (!csv.empty()) export_feature_csv(csv, bank);
    return 0;
}

std::vector<QualityLabel> load_labels_filtered(const std::string& path,
                                               const std::string& condition) {
    std::vector<QualityLabel> labels = load_labels(path);
    if (condition.empty() || condition == "all") return labels;
    std::vector<QualityLabel> out;
    for (const QualityLabel& l : labels)
        if (l.condition == condition) out.push_back(l);
    require(!out.empty(), ErrorClass::DegenerateInput,
            "no labels with condition '" + condition + "' in " + path);
    return out;
}

int cmd_evaluate(const std::string& bank_path, const std::string& labels_path,
                 const std::string& mode_str, int trials, uint64_t seed,
                 const std::string& out_path, const std::string& condition,
                 const std::string& head_path) {
    FeatureBank bank = load_feature_bank(bank_path);
    std::vector<QualityLabel> labels = load_labels_filtered(labels_path, condition);
    ProtocolMode mode = mode_str == "fr" ? ProtocolMode::FR : ProtocolMode::NR;
    RegressorSpec spec;

    nlohmann::ordered_json snap;
    snap["bank"] = bank_path;
    snap["bank_hash"] = hex64(hash_file(bank_path));
    snap["labels"] = labels_path;
    snap["labels_hash"] = hex64(hash_file(labels_path));
    snap["mode"] = mode_str;
    snap["trials"] = trials;
    snap["seed"] = seed;
    snap["condition"] = condition;

    ProtocolReport report = run_protocol(bank, labels, spec, trials, mode, seed);
    report.config_hash = hex64(fnv1a64(snap.dump()));
    save_report(out_path, report);
    std::string out_dir = fs::path(out_path).parent_path().string();
    if (out_dir.empty()) out_dir = ".";
    stamp_stage(out_dir, "evaluate", snap, false, {});
    std::cerr << "evaluate: median SROCC " << report.agg.median_srocc << " LCC "
              << report.agg.median_lcc << " RMSE " << report.agg.median_rmse << " over "
              << report.per_trial.size() << " trials -> " << out_path << "\n";
    if (!head_path.empty()) {
        require(mode == ProtocolMode::NR, ErrorClass::ConfigInvalid,
                "--save-head applies to NR mode");
        PredictHead head = fit_head(bank, labels, spec, seed);
        save_head(head_path, head);
        std::cerr << "evaluate: saved prediction head -> " << head_path << "\n";
    }
    return 0;
}

int cmd_predict(const std::string& video, const std::string& geometry_path,
                const std::string& ckpt_path, const std::string& head_path, int stride) {
    require(fs::exists(ckpt_path), ErrorClass::CkptNotFound, "no such checkpoint: " + ckpt_path);
    FrameGeometry geom = geometry_path.empty()
                             ? load_geometry(default_sidecar_path(video))
                             : load_geometry(geometry_path);
    std::unique_ptr<ContrastiveModel> model = load_checkpoint(ckpt_path);
    PredictHead head = load_head(head_path);
    std::string ckpt_hash = hex64(hash_file(ckpt_path));
    ExtractOptions opts;
    opts.frame_stride = stride;
    VideoFeature f = extract_video(video, geom, *model, ckpt_hash, opts);
    double score = apply_head(head, f.vec);
    std::cout << score << "\n";
    return 0;
}

// one full pipeline pass for a single ablation cell
TrialMetrics ablate_cell_metrics(const nlohmann::json& base, const ModelConfig& mc,
                                 const TrainConfig& tc, const std::string& cell_dir,
                                 MetricsAggregate* agg_out) {
    CorpusManifest manifest = load_manifest(base.at("manifest").get<std::string>());
    FinetuneResult ft = finetune(manifest, mc, tc, cell_dir);

    std::unique_ptr<ContrastiveModel> model = load_checkpoint(ft.final_checkpoint);
    std::string ckpt_hash = hex64(hash_file(ft.final_checkpoint));
    FeatureBank bank;
    bank.dim = 2 * model->feature_dim();
    bank.checkpoint_hash = ckpt_hash;
    ExtractOptions opts;
    opts.frame_stride = base.value("stride", 1);
    for (const ClipRecord& c : manifest.clips) {
        FrameGeometry geom = load_geometry(default_sidecar_path(c.path));
        VideoFeature f = extract_video(c.path, geom, *model, ckpt_hash, opts);
        f.video_id = c.clip_id;
        bank.add(std::move(f));
    }
    std::vector<QualityLabel> labels = load_labels_filtered(
        base.at("labels").get<std::string>(), base.value("condition", ""));
    RegressorSpec spec;
    ProtocolReport rep = run_protocol(bank, labels, spec, base.value("trials", 100),
                                      base.value("mode", std::string("nr")) == "fr"
                                          ? ProtocolMode::FR
                                          : ProtocolMode::NR,
                                      base.value("seed", uint64_t(0)));
    if (agg_out) *agg_out = rep.agg;
    TrialMetrics t;
    t.srocc = rep.agg.median_srocc;
    t.lcc = rep.agg.median_lcc;
    t.rmse = rep.agg.median_rmse;
    return t;
}

int cmd_ablate(const std::string& axis, const std::vector<std::string>& values,
               const std::string& config_path, const std::string& out_dir) {
    require(!values.empty(), ErrorClass::Usage, "ablate needs at least one value");
    require(axis == "epochs" || axis == "init", ErrorClass::Usage,
            "axis must be 'epochs' or 'init'");
    nlohmann::json base = nlohmann::json::parse(read_file(config_path));
    for (const char* need : {"manifest", "labels"})
        require(base.contains(need), ErrorClass::ConfigInvalid,
                std::string("ablate config needs key: ") + need);

    ModelConfig mc;
    TrainConfig tc;
    if (base.contains("model")) mc = ModelConfig::from_json(base["model"].dump());
    if (base.contains("train")) tc = TrainConfig::from_json(base["train"].dump());

    fs::create_directories(out_dir);
    nlohmann::ordered_json table = nlohmann::ordered_json::array();
    std::cout << "axis=" << axis << "\n";
    std::cout << "value\tmedian_srocc\tmedian_lcc\tmedian_rmse\n";
    for (const std::string& v : values) {
        ModelConfig cell_mc = mc;
        TrainConfig cell_tc = tc;
        if (axis == "epochs") {
            cell_tc.epochs = std::stoi(v);
        } else {
            if (v == "random") {
                cell_mc.weights_init = WeightsInit::Random;
            } else if (v == "sdr-pretrained") {
                require(base.contains("init_checkpoint"), ErrorClass::ConfigInvalid,
                        "init axis needs init_checkpoint in the base config");
                cell_mc.weights_init = WeightsInit::Checkpoint;
                cell_mc.init_checkpoint = base["init_checkpoint"].get<std::string>();
            } else {
                fail(ErrorClass::Usage, "init axis values are 'random' or 'sdr-pretrained'");
            }
        }
        std::string cell_dir = (fs::path(out_dir) / (axis + "_" + v)).string();
        MetricsAggregate agg;
        ablate_cell_metrics(base, cell_mc, cell_tc, cell_dir, &agg);
        nlohmann::ordered_json row;
        row["value"] = v;
        row["median_srocc"] = agg.median_srocc;
        row["median_lcc"] = agg.median_lcc;
        row["median_rmse"] = agg.median_rmse;
        row["std_srocc"] = agg.std_srocc;
        row["std_lcc"] = agg.std_lcc;
        row["std_rmse"] = agg.std_rmse;
        table.push_back(row);
        std::cout << v << "\t" << agg.median_srocc << "\t" << agg.median_lcc << "\t"
                  << agg.median_rmse << "\n";
    }
    nlohmann::ordered_json out;
    out["axis"] = axis;
    out["rows"] = table;
    write_file((fs::path(out_dir) / "ablation.json").string(), out.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HDR video quality toolkit: corpus forging, contrastive fine-tuning,"
                 " feature extraction, and SVR-based quality evaluation"};
    app.set_version_flag("--version",
                         std::string("hdrvqa ") + kToolVersion +
                             " (manifest schema 1, checkpoint format 1, bank format 1,"
                             " head schema 1, sidecar schema 1)");
    app.require_subcommand(1);

    // forge
    std::string sources, ladder = "default", out_dir, encode_cmd, decode_cmd, probe_cmd;
    uint64_t seed = 0;
    int workers = 1;
    bool resume = false;
    int timeout_s = 0;
    CLI::App* forge = app.add_subcommand("forge", "build the distortion-ladder corpus");
    forge->add_option("--sources", sources)->required();
    forge->add_option("--ladder", ladder, "'default' or a ladder json file");
    forge->add_option("--seed", seed);
    forge->add_option("--out", out_dir)->required();
    forge->add_option("--workers", workers);
    forge->add_option("--encode-cmd", encode_cmd);
    forge->add_option("--decode-cmd", decode_cmd);
    forge->add_option("--probe-cmd", probe_cmd);
    forge->add_option("--encoder-timeout", timeout_s);
    forge->add_flag("--resume", resume);

    // finetune
    std::string manifest_path, init = "random", config_path;
    CLI::App* ft = app.add_subcommand("finetune", "contrastive fine-tuning on sampled frames");
    ft->add_option("--manifest", manifest_path)->required();
    ft->add_option("--init", init, "'random' or a checkpoint path");
    ft->add_option("--config", config_path);
    ft->add_option("--out", out_dir)->required();
    ft->add_flag("--resume", resume);

    // extract
    std::string videos_path, ckpt_path, bank_path, csv_path;
    int stride = 1, crop = 0;
    CLI::App* ex = app.add_subcommand("extract", "pooled video features with a frozen encoder");
    ex->add_option("--videos", videos_path)->required();
    ex->add_option("--ckpt", ckpt_path)->required();
    ex->add_option("--stride", stride);
    ex->add_option("--crop", crop);
    ex->add_option("--out", bank_path)->required();
    ex->add_option("--csv", csv_path);
    ex->add_flag("--resume", resume);

    // evaluate
    std::string labels_path, mode = "nr", report_path, condition, head_path;
    int trials = 100;
    CLI::App* ev = app.add_subcommand("evaluate", "content-disjoint SVR protocol");
    ev->add_option("--bank", bank_path)->required();
    ev->add_option("--labels", labels_path)->required();
    ev->add_option("--mode", mode)->check(CLI::IsMember({"nr", "fr"}));
    ev->add_option("--trials", trials);
    ev->add_option("--seed", seed);
    ev->add_option("--out", report_path)->required();
    ev->add_option("--condition", condition);
    ev->add_option("--save-head", head_path);

    // predict
    std::string video_path, geometry_path;
    CLI::App* pr = app.add_subcommand("predict", "score a single video");
    pr->add_option("--video", video_path)->required();
    pr->add_option("--geometry", geometry_path);
    pr->add_option("--ckpt", ckpt_path)->required();
    pr->add_option("--head", head_path)->required();
    pr->add_option("--stride", stride);

    // ablate
    std::string axis;
    std::vector<std::string> values;
    CLI::App* ab = app.add_subcommand("ablate", "epoch / init sweeps over the pipeline");
    ab->add_option("--axis", axis)->required();
    ab->add_option("--values", values)->required()->delimiter(',');
    ab->add_option("--config", config_path)->required();
    ab->add_option("--out", out_dir)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::cerr << "error: USAGE: " << e.what() << "\n";
        return 2;
    }

    try {
        if (forge->parsed()) {
            EncoderContract contract;
            contract.encode_cmd = encode_cmd;
            contract.decode_cmd = decode_cmd;
            contract.probe_cmd = probe_cmd;
            contract.timeout_s = timeout_s;
            return cmd_forge(sources, ladder, seed, out_dir, workers, contract, resume);
        }
        if (ft->parsed()) return cmd_finetune(manifest_path, init, config_path, out_dir, resume);
        if (ex->parsed())
            return cmd_extract(videos_path, ckpt_path, stride, bank_path, crop, csv_path, resume);
        if (ev->parsed())
            return cmd_evaluate(bank_path, labels_path, mode, trials, seed, report_path,
                                condition, head_path);
        if (pr->parsed())
            return cmd_predict(video_path, geometry_path, ckpt_path, head_path, stride);
        if (ab->parsed()) return cmd_ablate(axis, values, config_path, out_dir);
    } catch (const Error& e) {
        std::cerr << "error: " << error_class_name(e.cls()) << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: INTERNAL: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
