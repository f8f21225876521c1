#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "hdrvqa/protocol.hpp"
#include "support/test_util.hpp"

using namespace hdrvqa;
using test::TempDir;

namespace {

// bank of synthetic features with an optional linear score rule
struct SyntheticData {
    FeatureBank bank;
    std::vector<QualityLabel> labels;
};

SyntheticData make_linear_data(int n_contents, int versions, int dim, double noise_frac,
                               uint64_t seed) {
    SyntheticData d;
    d.bank.dim = dim;
    d.bank.checkpoint_hash = "testckpt";
    Rng rng(seed);
    std::vector<double> w(dim);
    for (double& v : w) v = rng.normal();

    std::vector<double> scores;
    std::vector<std::vector<float>> feats;
    for (int c = 0; c < n_contents; ++c)
        for (int v = 0; v < versions; ++v) {
            std::vector<float> f(dim);
            double s = 0;
            for (int j = 0; j < dim; ++j) {
                f[j] = float(rng.normal());
                s += w[j] * f[j];
            }
            feats.push_back(f);
            scores.push_back(s);
        }
    double lo = *std::min_element(scores.begin(), scores.end());
    double hi = *std::max_element(scores.begin(), scores.end());
    size_t i = 0;
    for (int c = 0; c < n_contents; ++c)
        for (int v = 0; v < versions; ++v, ++i) {
            std::string vid = "c" + std::to_string(c) + "_v" + std::to_string(v);
            VideoFeature vf;
            vf.video_id = vid;
            vf.vec = feats[i];
            vf.n_frames_pooled = 1;
            vf.checkpoint_hash = "testckpt";
            d.bank.add(std::move(vf));
            QualityLabel l;
            l.video_id = vid;
            l.content_id = "c" + std::to_string(c);
            l.score = scores[i] + rng.normal() * noise_frac * (hi - lo);
            l.condition = "dark";
            l.reference_id = "c" + std::to_string(c) + "_v0";
            d.labels.push_back(l);
        }
    return d;
}

}  // namespace

TEST_CASE("standardizer z-scores per dimension on train only") {
    std::vector<std::vector<double>> rows = {{1, 10}, {3, 10}, {5, 10}};
    Standardizer st;
    st.fit(rows);
    CHECK(st.mean[0] == doctest::Approx(3.0));
    CHECK(st.scale[0] == doctest::Approx(2.0));  // sample std
    CHECK(st.scale[1] == 1.0);                   // constant dim keeps scale 1
    auto z = st.apply({5, 10});
    CHECK(z[0] == doctest::Approx(1.0));
    CHECK(z[1] == doctest::Approx(0.0));
}

TEST_CASE("linear svr recovers a noiseless linear rule") {
    Rng rng(3);
    int n = 40, dim = 6;
    std::vector<double> w(dim);
    for (double& v : w) v = rng.normal();
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (int i = 0; i < n; ++i) {
        std::vector<double> row(dim);
        double s = 1.5;  // bias
        for (int j = 0; j < dim; ++j) {
            row[j] = rng.normal();
            s += w[j] * row[j];
        }
        x.push_back(row);
        y.push_back(s);
    }
    LinearSvr svr;
    svr.fit(x, y, 100.0, 0.0, 4000, 1e-10);
    double lo = *std::min_element(y.begin(), y.end());
    double hi = *std::max_element(y.begin(), y.end());
    for (int i = 0; i < n; ++i)
        CHECK(std::abs(svr.predict_one(x[i]) - y[i]) < 1e-3 * (hi - lo));

    // duplicate rows produce duplicate predictions; empty input empty output
    CHECK(svr.predict_one(x[0]) == svr.predict_one(x[0]));
    CHECK(svr.predict({}).empty());
}

TEST_CASE("cv_fit on a noiseless linear problem reaches tiny test error") {
    Rng rng(11);
    int dim = 4;
    std::vector<double> w(dim);
    for (double& v : w) v = rng.normal();
    std::vector<std::vector<double>> xtr, xte;
    std::vector<double> ytr, yte;
    std::vector<std::string> contents;
    for (int i = 0; i < 60; ++i) {
        std::vector<double> row(dim);
        double s = 0;
        for (int j = 0; j < dim; ++j) {
            row[j] = rng.normal();
            s += w[j] * row[j];
        }
        if (i < 40) {
            xtr.push_back(row);
            ytr.push_back(s);
            contents.push_back("content" + std::to_string(i % 10));
        } else {
            xte.push_back(row);
            yte.push_back(s);
        }
    }
    RegressorSpec spec;
    FittedRegressor reg = cv_fit(xtr, ytr, contents, spec, 5);
    std::vector<double> pred = predict(reg, xte);
    double lo = *std::min_element(ytr.begin(), ytr.end());
    double hi = *std::max_element(ytr.begin(), ytr.end());
    CHECK(rmse(pred, yte) < 1e-3 * (hi - lo));
}

TEST_CASE("cv_fit singleton grid selects that point; constant labels warn") {
    std::vector<std::vector<double>> x = {{0}, {1}, {2}, {3}, {4}, {5}};
    std::vector<double> y = {0, 1, 2, 3, 4, 5};
    std::vector<std::string> c = {"a", "b", "c", "d", "e", "f"};
    RegressorSpec spec;
    spec.c_grid = {2.5};
    spec.epsilon_grid = {0.5};
    FittedRegressor reg = cv_fit(x, y, c, spec, 1);
    CHECK(reg.chosen_c == 2.5);

    std::vector<double> flat = {3, 3, 3, 3, 3, 3};
    FittedRegressor degen = cv_fit(x, flat, c, spec, 1);
    CHECK(!degen.warning.empty());
    std::vector<double> p = predict(degen, x);
    for (double v : p) CHECK(v == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("make_splits: 31 contents at 80:20 give 25/6 and never overlap") {
    SyntheticData d = make_linear_data(31, 10, 4, 0.0, 1);
    std::vector<EvalSplit> splits = make_splits(d.labels, 0.8, 100, 7);
    REQUIRE(splits.size() == 100);
    std::map<std::string, std::string> content_of;
    for (const QualityLabel& l : d.labels) content_of[l.video_id] = l.content_id;
    for (const EvalSplit& s : splits) {
        std::set<std::string> train_contents, test_contents;
        for (const auto& v : s.train_ids) train_contents.insert(content_of[v]);
        for (const auto& v : s.test_ids) test_contents.insert(content_of[v]);
        CHECK(train_contents.size() == 25);
        CHECK(test_contents.size() == 6);
        for (const std::string& c : test_contents) CHECK(train_contents.count(c) == 0);
        // partition of all videos
        CHECK(s.train_ids.size() + s.test_ids.size() == d.labels.size());
        std::set<std::string> all(s.train_ids.begin(), s.train_ids.end());
        all.insert(s.test_ids.begin(), s.test_ids.end());
        CHECK(all.size() == d.labels.size());
    }
    // determinism
    std::vector<EvalSplit> again = make_splits(d.labels, 0.8, 100, 7);
    CHECK(splits_to_json(splits) == splits_to_json(again));
    std::vector<EvalSplit> other = make_splits(d.labels, 0.8, 100, 8);
    CHECK(splits_to_json(splits) != splits_to_json(other));
}

TEST_CASE("make_splits requires at least two contents") {
    SyntheticData d = make_linear_data(1, 5, 3, 0.0, 2);
    CHECK_THROWS_AS(make_splits(d.labels, 0.8, 10, 1), Error);
}

TEST_CASE("fr_feature definition and symmetry") {
    VideoFeature a, b;
    a.vec = {1, 3};
    b.vec = {2, 1};
    a.checkpoint_hash = b.checkpoint_hash = "h";
    std::vector<float> d = fr_feature(a, b);
    CHECK(d[0] == 1.f);
    CHECK(d[1] == 2.f);
    CHECK(fr_feature(a, b) == fr_feature(b, a));
    CHECK(fr_feature(a, a) == std::vector<float>{0.f, 0.f});

    VideoFeature c;
    c.vec = {1, 2, 3};
    c.checkpoint_hash = "h";
    CHECK_THROWS_AS(fr_feature(a, c), Error);
    VideoFeature e = b;
    e.checkpoint_hash = "other";
    CHECK_THROWS_AS(fr_feature(a, e), Error);
}

TEST_CASE("run_protocol on a noiseless linear bank reaches median SROCC 1.0") {
    SyntheticData d = make_linear_data(12, 8, 6, 0.0, 21);
    RegressorSpec spec;
    std::vector<TrialAudit> audits;
    ProtocolReport r = run_protocol(d.bank, d.labels, spec, 20, ProtocolMode::NR, 3, &audits);
    CHECK(r.agg.median_srocc == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.per_trial.size() == 20);
    // audit hook: no test id touched before prediction, every trial
    for (const TrialAudit& a : audits)
        for (const std::string& id : a.test_ids)
            CHECK(a.touched_before_predict.count(id) == 0);
}

TEST_CASE("run_protocol is deterministic and trials=1 median equals the trial") {
    SyntheticData d = make_linear_data(8, 6, 4, 0.05, 22);
    RegressorSpec spec;
    ProtocolReport a = run_protocol(d.bank, d.labels, spec, 1, ProtocolMode::NR, 5);
    CHECK(a.per_trial.size() == 1);
    CHECK(a.agg.median_srocc == a.per_trial[0].srocc);

    ProtocolReport b = run_protocol(d.bank, d.labels, spec, 7, ProtocolMode::NR, 5);
    ProtocolReport c = run_protocol(d.bank, d.labels, spec, 7, ProtocolMode::NR, 5);
    CHECK(b.to_json() == c.to_json());
}

TEST_CASE("FR mode with dist == ref yields constant predictions") {
    SyntheticData d = make_linear_data(6, 5, 4, 0.0, 23);
    // every video is its own reference: all FR features are exactly zero
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    std::vector<std::string> contents;
    for (const QualityLabel& l : d.labels) {
        const VideoFeature* f = d.bank.find(l.video_id);
        std::vector<float> diff = fr_feature(*f, *f);
        for (float v : diff) CHECK(v == 0.f);
        x.emplace_back(diff.begin(), diff.end());
        y.push_back(l.score);
        contents.push_back(l.content_id);
    }
    RegressorSpec spec;
    spec.c_grid = {1.0};
    spec.epsilon_grid = {0.1};
    FittedRegressor reg = cv_fit(x, y, contents, spec, 2);
    std::vector<double> pred = predict(reg, x);
    for (double v : pred) CHECK(v == doctest::Approx(pred[0]).epsilon(1e-12));

    // through the whole protocol, constant predictions make the rank metric
    // undefined in every trial, which is an error, not a silent number
    for (QualityLabel& l : d.labels) l.reference_id = l.video_id;
    CHECK_THROWS_AS(run_protocol(d.bank, d.labels, spec, 4, ProtocolMode::FR, 9), Error);
}

TEST_CASE("run_protocol FR mode improves over garbage when differences carry signal") {
    // dist features = ref + distortion signature scaled by (100 - score)
    SyntheticData d = make_linear_data(10, 1, 5, 0.0, 24);
    FeatureBank bank;
    bank.dim = 5;
    bank.checkpoint_hash = "testckpt";
    std::vector<QualityLabel> labels;
    Rng rng(25);
    for (int c = 0; c < 10; ++c) {
        std::string ref_id = "c" + std::to_string(c) + "_v0";
        VideoFeature ref = *d.bank.find(ref_id);
        bank.add(ref);
        for (int v = 1; v < 6; ++v) {
            double severity = rng.uniform();
            VideoFeature dist = ref;
            dist.video_id = "c" + std::to_string(c) + "_v" + std::to_string(v);
            for (int j = 0; j < 5; ++j) dist.vec[j] += float(severity * (j + 1) * 0.5);
            bank.add(dist);
            QualityLabel l;
            l.video_id = dist.video_id;
            l.content_id = "c" + std::to_string(c);
            l.score = 100.0 - 80.0 * severity;  // DMOS falls with severity
            l.condition = "dark";
            l.reference_id = ref_id;
            labels.push_back(l);
        }
    }
    RegressorSpec spec;
    ProtocolReport r = run_protocol(bank, labels, spec, 10, ProtocolMode::FR, 11);
    CHECK(r.agg.median_srocc > 0.9);
}

TEST_CASE("null distribution: permuted labels give small median |SROCC|") {
    SyntheticData d = make_linear_data(31, 5, 6, 0.0, 26);
    // shuffle scores against videos
    Rng rng(27);
    std::vector<double> scores;
    for (const QualityLabel& l : d.labels) scores.push_back(l.score);
    rng.shuffle(scores);
    for (size_t i = 0; i < d.labels.size(); ++i) d.labels[i].score = scores[i];
    RegressorSpec spec;
    spec.c_grid = {1.0};  // single point keeps the null run quick
    spec.epsilon_grid = {1.0};
    ProtocolReport r = run_protocol(d.bank, d.labels, spec, 60, ProtocolMode::NR, 13);
    std::vector<double> abs_s;
    for (const TrialMetrics& t : r.per_trial) abs_s.push_back(std::abs(t.srocc));
    CHECK(median(abs_s) < 0.35);
}

TEST_CASE("labels and report files round trip") {
    TempDir tmp("proto");
    SyntheticData d = make_linear_data(8, 6, 3, 0.02, 30);
    save_labels(tmp.file("labels.csv"), d.labels);
    std::vector<QualityLabel> back = load_labels(tmp.file("labels.csv"));
    REQUIRE(back.size() == d.labels.size());
    CHECK(back[3].video_id == d.labels[3].video_id);
    CHECK(back[3].content_id == d.labels[3].content_id);
    CHECK(back[3].score == doctest::Approx(d.labels[3].score).epsilon(1e-5));
    CHECK(back[3].condition == "dark");

    RegressorSpec spec;
    ProtocolReport r = run_protocol(d.bank, d.labels, spec, 3, ProtocolMode::NR, 2);
    r.config_hash = "cafe";
    save_report(tmp.file("report.json"), r);
    ProtocolReport rr = load_report(tmp.file("report.json"));
    CHECK(rr.to_json() == r.to_json());
}

TEST_CASE("prediction head round trips and scores linearly") {
    TempDir tmp("head");
    SyntheticData d = make_linear_data(8, 5, 4, 0.0, 31);
    RegressorSpec spec;
    PredictHead head = fit_head(d.bank, d.labels, spec, 3);
    save_head(tmp.file("head.json"), head);
    PredictHead back = load_head(tmp.file("head.json"));
    const VideoFeature* f = d.bank.find(d.labels[0].video_id);
    CHECK(apply_head(back, f->vec) == doctest::Approx(apply_head(head, f->vec)).epsilon(1e-12));
    // noiseless linear rule: the head should be close on training data
    CHECK(std::abs(apply_head(head, f->vec) - d.labels[0].score) <
          0.05 * (head.standardizer.mean.size() + 100));
}
