#include "hdrvqa/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace hdrvqa {

// ------------------------------------------------------------- labels io

std::vector<QualityLabel> load_labels(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorClass::FileNotFound, "no such labels file: " + path);
    std::string line;
    require(bool(std::getline(in, line)), ErrorClass::DataCorrupt, "empty labels file");
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) out.push_back(tok);
        return out;
    };
    std::vector<std::string> header = split(line);
    std::map<std::string, size_t> col;
    for (size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* need : {"video_id", "content_id", "score"})
        require(col.count(need) > 0, ErrorClass::DataCorrupt,
                std::string("labels file missing column: ") + need);

    std::vector<QualityLabel> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f = split(line);
        require(f.size() >= 3, ErrorClass::DataCorrupt, "short labels row: " + line);
        QualityLabel l;
        l.video_id = f[col["video_id"]];
        l.content_id = f[col["content_id"]];
        try {
            l.score = std::stod(f[col["score"]]);
        } catch (const std::exception&) {
            fail(ErrorClass::DataCorrupt, "bad score in labels row: " + line);
        }
        require(std::isfinite(l.score), ErrorClass::DataCorrupt, "non-finite score: " + line);
        if (col.count("condition") && col["condition"] < f.size())
            l.condition = f[col["condition"]];
        if (col.count("reference_id") && col["reference_id"] < f.size())
            l.reference_id = f[col["reference_id"]];
        out.push_back(std::move(l));
    }
    return out;
}

void save_labels(const std::string& path, const std::vector<QualityLabel>& labels) {
    std::ofstream out(path);
    require(out.good(), ErrorClass::FileNotFound, "cannot write labels: " + path);
    out << "video_id,content_id,score,condition,reference_id\n";
    for (const QualityLabel& l : labels)
        out << l.video_id << "," << l.content_id << "," << l.score << "," << l.condition << ","
            << l.reference_id << "\n";
}

// ------------------------------------------------------------- splits

std::vector<EvalSplit> make_splits(const std::vector<QualityLabel>& labels, double ratio,
                                   int trials, uint64_t seed) {
    require(ratio > 0 && ratio < 1, ErrorClass::DomainError, "ratio must be in (0,1)");
    require(trials >= 1, ErrorClass::DomainError, "trials must be >= 1");
    std::map<std::string, std::vector<std::string>> by_content;
    for (const QualityLabel& l : labels) by_content[l.content_id].push_back(l.video_id);
    require(by_content.size() >= 2, ErrorClass::DegenerateInput,
            "need at least 2 contents for a content-disjoint split");

    std::vector<std::string> contents;
    for (const auto& [c, _] : by_content) contents.push_back(c);
    std::sort(contents.begin(), contents.end());

    int n_train = int(std::llround(ratio * double(contents.size())));
    n_train = std::clamp(n_train, 1, int(contents.size()) - 1);

    std::vector<EvalSplit> splits;
    splits.reserve(size_t(trials));
    for (int t = 0; t < trials; ++t) {
        Rng rng = Rng::derive(seed, "split", uint64_t(t));
        std::vector<std::string> order = contents;
        rng.shuffle(order);
        EvalSplit s;
        s.trial_id = t;
        for (size_t i = 0; i < order.size(); ++i) {
            auto& dst = int(i) < n_train ? s.train_ids : s.test_ids;
            for (const std::string& v : by_content[order[i]]) dst.push_back(v);
        }
        std::sort(s.train_ids.begin(), s.train_ids.end());
        std::sort(s.test_ids.begin(), s.test_ids.end());
        splits.push_back(std::move(s));
    }
    return splits;
}

std::string splits_to_json(const std::vector<EvalSplit>& splits) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const EvalSplit& s : splits) {
        nlohmann::ordered_json sj;
        sj["trial_id"] = s.trial_id;
        sj["train_ids"] = s.train_ids;
        sj["test_ids"] = s.test_ids;
        j.push_back(sj);
    }
    return j.dump();
}

// ------------------------------------------------------------- cv_fit

void RegressorSpec::validate() const {
    require(!c_grid.empty() && !epsilon_grid.empty(), ErrorClass::ConfigInvalid,
            "regressor grids must be nonempty");
    for (double c : c_grid)
        require(c > 0, ErrorClass::ConfigInvalid, "C grid entries must be positive");
    for (double e : epsilon_grid)
        require(e >= 0, ErrorClass::ConfigInvalid, "epsilon grid entries must be nonnegative");
    require(folds >= 2, ErrorClass::ConfigInvalid, "folds must be >= 2");
}

FittedRegressor cv_fit(const std::vector<std::vector<double>>& features,
                       const std::vector<double>& labels,
                       const std::vector<std::string>& contents,
                       const RegressorSpec& spec, uint64_t seed) {
    spec.validate();
    require(features.size() == labels.size() && features.size() == contents.size(),
            ErrorClass::DimensionMismatch, "cv_fit: shape mismatch");
    require(int(features.size()) >= spec.folds, ErrorClass::DegenerateInput,
            "cv_fit: fewer rows than folds");

    double ymean = 0;
    for (double y : labels) ymean += y;
    ymean /= double(labels.size());
    double yvar = 0;
    for (double y : labels) yvar += (y - ymean) * (y - ymean);
    double ystd = labels.size() > 1 ? std::sqrt(yvar / double(labels.size() - 1)) : 0.0;

    FittedRegressor out;
    if (ystd == 0.0) out.warning = "degenerate labels: all training scores equal";
    double eps_unit = ystd > 0 ? ystd : 1.0;

    // content-disjoint folds, round-robin over shuffled contents
    std::vector<std::string> uniq = contents;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    Rng rng = Rng::derive(seed, "cv-folds");
    rng.shuffle(uniq);
    std::map<std::string, int> fold_of;
    for (size_t i = 0; i < uniq.size(); ++i) fold_of[uniq[i]] = int(i % size_t(spec.folds));

    double best_rmse = 1e300;
    double best_c = spec.c_grid[0];
    double best_eps = spec.epsilon_grid[0];
    for (double c : spec.c_grid)
        for (double eu : spec.epsilon_grid) {
            double eps = eu * eps_unit;
            double sse = 0;
            size_t cnt = 0;
            for (int fold = 0; fold < spec.folds; ++fold) {
                std::vector<std::vector<double>> xtr, xva;
                std::vector<double> ytr, yva;
                for (size_t i = 0; i < features.size(); ++i) {
                    if (fold_of[contents[i]] == fold) {
                        xva.push_back(features[i]);
                        yva.push_back(labels[i]);
                    } else {
                        xtr.push_back(features[i]);
                        ytr.push_back(labels[i]);
                    }
                }
                if (xtr.empty() || xva.empty()) continue;
                Standardizer st;
                st.fit(xtr);
                std::vector<std::vector<double>> xtrs, xvas;
                for (const auto& r : xtr) xtrs.push_back(st.apply(r));
                for (const auto& r : xva) xvas.push_back(st.apply(r));
                LinearSvr svr;
                svr.fit(xtrs, ytr, c, eps);
                for (size_t i = 0; i < xvas.size(); ++i) {
                    double d = svr.predict_one(xvas[i]) - yva[i];
                    sse += d * d;
                    ++cnt;
                }
            }
            double fold_rmse = cnt ? std::sqrt(sse / double(cnt)) : 1e300;
            // strict less-than keeps the smaller C (and then smaller eps)
            // because the grid is scanned in increasing order
            if (fold_rmse < best_rmse - 1e-12) {
                best_rmse = fold_rmse;
                best_c = c;
                best_eps = eps;
            }
        }

    out.chosen_c = best_c;
    out.chosen_epsilon = best_eps;
    out.standardizer.fit(features);
    std::vector<std::vector<double>> xs;
    for (const auto& r : features) xs.push_back(out.standardizer.apply(r));
    out.svr.fit(xs, labels, best_c, best_eps);
    return out;
}

std::vector<double> predict(const FittedRegressor& reg,
                            const std::vector<std::vector<double>>& features) {
    std::vector<double> out;
    out.reserve(features.size());
    for (const auto& r : features) {
        double v = reg.svr.predict_one(reg.standardizer.apply(r));
        require(std::isfinite(v), ErrorClass::Internal, "non-finite prediction");
        out.push_back(v);
    }
    return out;
}

std::vector<float> fr_feature(const VideoFeature& ref, const VideoFeature& dist) {
    require(ref.vec.size() == dist.vec.size(), ErrorClass::DimensionMismatch,
            "fr_feature: length mismatch");
    require(ref.checkpoint_hash == dist.checkpoint_hash, ErrorClass::CkptIncompatible,
            "fr_feature: features come from different checkpoints");
    std::vector<float> out(ref.vec.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::abs(ref.vec[i] - dist.vec[i]);
    return out;
}

// ------------------------------------------------------------- protocol

namespace {

std::vector<double> to_double(const std::vector<float>& v) {
    return std::vector<double>(v.begin(), v.end());
}

}  // namespace

ProtocolReport run_protocol(const FeatureBank& bank, const std::vector<QualityLabel>& labels,
                            const RegressorSpec& spec, int trials, ProtocolMode mode,
                            uint64_t seed, std::vector<TrialAudit>* audit_out) {
    spec.validate();
    require(!labels.empty(), ErrorClass::DegenerateInput, "no labels");

    // resolve features once, recording the FR difference transform
    std::map<std::string, std::vector<double>> feat;
    std::map<std::string, const QualityLabel*> label_of;
    for (const QualityLabel& l : labels) {
        const VideoFeature* f = bank.find(l.video_id);
        require(f != nullptr, ErrorClass::FileNotFound,
                "bank has no features for video: " + l.video_id);
        if (mode == ProtocolMode::FR) {
            require(!l.reference_id.empty(), ErrorClass::ConfigInvalid,
                    "FR mode needs reference_id for video: " + l.video_id);
            const VideoFeature* r = bank.find(l.reference_id);
            require(r != nullptr, ErrorClass::FileNotFound,
                    "bank has no features for reference: " + l.reference_id);
            feat[l.video_id] = to_double(fr_feature(*r, *f));
        } else {
            feat[l.video_id] = to_double(f->vec);
        }
        label_of[l.video_id] = &l;
    }

    std::vector<EvalSplit> splits = make_splits(labels, 0.8, trials, seed);

    ProtocolReport report;
    report.mode = mode;
    report.trials_requested = trials;
    report.seed = seed;

    std::vector<std::optional<TrialMetrics>> results(static_cast<size_t>(trials));
    std::vector<std::string> trial_warnings(static_cast<size_t>(trials));
    std::vector<TrialAudit> audits(static_cast<size_t>(trials));

#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < trials; ++t) {
        const EvalSplit& split = splits[size_t(t)];
        TrialAudit& audit = audits[size_t(t)];
        audit.trial_id = t;
        audit.test_ids.insert(split.test_ids.begin(), split.test_ids.end());
        try {
            std::vector<std::vector<double>> xtr;
            std::vector<double> ytr;
            std::vector<std::string> ctr;
            for (const std::string& id : split.train_ids) {
                audit.touched_before_predict.insert(id);
                xtr.push_back(feat.at(id));
                ytr.push_back(label_of.at(id)->score);
                ctr.push_back(label_of.at(id)->content_id);
            }
            FittedRegressor reg = cv_fit(xtr, ytr, ctr, spec, Rng::derive(seed, "trial", uint64_t(t)).next_u64());
            if (!reg.warning.empty()) trial_warnings[size_t(t)] = reg.warning;

            // leakage audit: nothing from the test side may have been touched
            for (const std::string& id : split.test_ids)
                require(audit.touched_before_predict.count(id) == 0, ErrorClass::Internal,
                        "protocol audit: test video touched before prediction: " + id);

            std::vector<std::vector<double>> xte;
            std::vector<double> yte;
            for (const std::string& id : split.test_ids) {
                xte.push_back(feat.at(id));
                yte.push_back(label_of.at(id)->score);
            }
            std::vector<double> pred = predict(reg, xte);

            TrialMetrics tm;
            tm.trial_id = t;
            tm.srocc = srocc(pred, yte);
            tm.logistic = logistic_fit(pred, yte);
            std::vector<double> fitted(pred.size());
            for (size_t i = 0; i < pred.size(); ++i)
                fitted[i] = logistic_eval(tm.logistic, pred[i]);
            tm.lcc = lcc(fitted, yte);
            tm.rmse = rmse(fitted, yte);
            results[size_t(t)] = tm;
        } catch (const Error& e) {
            trial_warnings[size_t(t)] =
                "trial " + std::to_string(t) + " excluded: " + std::string(e.what());
        }
    }

    for (int t = 0; t < trials; ++t) {
        if (results[size_t(t)]) report.per_trial.push_back(*results[size_t(t)]);
        if (!trial_warnings[size_t(t)].empty()) report.warnings.push_back(trial_warnings[size_t(t)]);
    }
    require(!report.per_trial.empty(), ErrorClass::DegenerateInput,
            "every protocol trial failed");
    report.agg = aggregate(report.per_trial);
    if (audit_out) *audit_out = std::move(audits);
    return report;
}

// ------------------------------------------------------------- report io

std::string ProtocolReport::to_json() const {
    nlohmann::ordered_json j;
    j["mode"] = mode == ProtocolMode::NR ? "nr" : "fr";
    j["trials_requested"] = trials_requested;
    j["seed"] = seed;
    j["config_hash"] = config_hash;
    auto arr = nlohmann::ordered_json::array();
    for (const TrialMetrics& t : per_trial) {
        nlohmann::ordered_json tj;
        tj["trial_id"] = t.trial_id;
        tj["srocc"] = t.srocc;
        tj["lcc"] = t.lcc;
        tj["rmse"] = t.rmse;
        tj["logistic"] = {{"b1", t.logistic.b1}, {"b2", t.logistic.b2}, {"b3", t.logistic.b3},
                          {"b4", t.logistic.b4}, {"b5", t.logistic.b5},
                          {"converged", t.logistic.converged}};
        arr.push_back(tj);
    }
    j["per_trial"] = arr;
    j["median_srocc"] = agg.median_srocc;
    j["median_lcc"] = agg.median_lcc;
    j["median_rmse"] = agg.median_rmse;
    j["std_srocc"] = agg.std_srocc;
    j["std_lcc"] = agg.std_lcc;
    j["std_rmse"] = agg.std_rmse;
    j["warnings"] = warnings;
    return j.dump(2);
}

ProtocolReport ProtocolReport::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorClass::DataCorrupt, "bad report json: " + std::string(e.what()));
    }
    ProtocolReport r;
    r.mode = j.at("mode").get<std::string>() == "fr" ? ProtocolMode::FR : ProtocolMode::NR;
    r.trials_requested = j.at("trials_requested").get<int>();
    r.seed = j.at("seed").get<uint64_t>();
    r.config_hash = j.value("config_hash", "");
    for (const auto& tj : j.at("per_trial")) {
        TrialMetrics t;
        t.trial_id = tj.at("trial_id").get<int>();
        t.srocc = tj.at("srocc").get<double>();
        t.lcc = tj.at("lcc").get<double>();
        t.rmse = tj.at("rmse").get<double>();
        t.logistic.b1 = tj.at("logistic").at("b1").get<double>();
        t.logistic.b2 = tj.at("logistic").at("b2").get<double>();
        t.logistic.b3 = tj.at("logistic").at("b3").get<double>();
        t.logistic.b4 = tj.at("logistic").at("b4").get<double>();
        t.logistic.b5 = tj.at("logistic").at("b5").get<double>();
        t.logistic.converged = tj.at("logistic").at("converged").get<bool>();
        r.per_trial.push_back(t);
    }
    r.agg.median_srocc = j.at("median_srocc").get<double>();
    r.agg.median_lcc = j.at("median_lcc").get<double>();
    r.agg.median_rmse = j.at("median_rmse").get<double>();
    r.agg.std_srocc = j.at("std_srocc").get<double>();
    r.agg.std_lcc = j.at("std_lcc").get<double>();
    r.agg.std_rmse = j.at("std_rmse").get<double>();
    if (j.contains("warnings")) r.warnings = j["warnings"].get<std::vector<std::string>>();
    return r;
}

void save_report(const std::string& path, const ProtocolReport& report) {
    std::ofstream out(path);
    require(out.good(), ErrorClass::FileNotFound, "cannot write report: " + path);
    out << report.to_json() << "\n";
}

ProtocolReport load_report(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorClass::FileNotFound, "no such report: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return ProtocolReport::from_json(text);
}

// ------------------------------------------------------------- predict head

PredictHead fit_head(const FeatureBank& bank, const std::vector<QualityLabel>& labels,
                     const RegressorSpec& spec, uint64_t seed) {
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    std::vector<std::string> contents;
    for (const QualityLabel& l : labels) {
        const VideoFeature* f = bank.find(l.video_id);
        require(f != nullptr, ErrorClass::FileNotFound, "bank missing video: " + l.video_id);
        x.push_back(to_double(f->vec));
        y.push_back(l.score);
        contents.push_back(l.content_id);
    }
    FittedRegressor reg = cv_fit(x, y, contents, spec, seed);
    PredictHead head;
    head.standardizer = reg.standardizer;
    head.w = reg.svr.weights();
    head.bias = reg.svr.bias();
    head.chosen_c = reg.chosen_c;
    head.chosen_epsilon = reg.chosen_epsilon;
    head.dim = bank.dim;
    head.checkpoint_hash = bank.checkpoint_hash;
    return head;
}

double apply_head(const PredictHead& head, const std::vector<float>& feature) {
    require(int(feature.size()) == head.dim, ErrorClass::DimensionMismatch,
            "feature length does not match head");
    std::vector<double> row = head.standardizer.apply(to_double(feature));
    double s = head.bias;
    for (size_t i = 0; i < row.size(); ++i) s += head.w[i] * row[i];
    return s;
}

void save_head(const std::string& path, const PredictHead& head) {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["dim"] = head.dim;
    j["checkpoint_hash"] = head.checkpoint_hash;
    j["chosen_c"] = head.chosen_c;
    j["chosen_epsilon"] = head.chosen_epsilon;
    j["bias"] = head.bias;
    j["w"] = head.w;
    j["mean"] = head.standardizer.mean;
    j["scale"] = head.standardizer.scale;
    std::ofstream out(path);
    require(out.good(), ErrorClass::FileNotFound, "cannot write head: " + path);
    out << j.dump(2) << "\n";
}

PredictHead load_head(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorClass::FileNotFound, "no such head: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorClass::DataCorrupt, "bad head json: " + std::string(e.what()));
    }
    require(j.value("schema", 0) == 1, ErrorClass::SchemaVersion, "unsupported head schema");
    PredictHead head;
    head.dim = j.at("dim").get<int>();
    head.checkpoint_hash = j.at("checkpoint_hash").get<std::string>();
    head.chosen_c = j.at("chosen_c").get<double>();
    head.chosen_epsilon = j.at("chosen_epsilon").get<double>();
    head.bias = j.at("bias").get<double>();
    head.w = j.at("w").get<std::vector<double>>();
    head.standardizer.mean = j.at("mean").get<std::vector<double>>();
    head.standardizer.scale = j.at("scale").get<std::vector<double>>();
    return head;
}

}  // namespace hdrvqa
