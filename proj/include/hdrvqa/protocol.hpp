#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hdrvqa/features.hpp"
#include "hdrvqa/metrics.hpp"
#include "hdrvqa/svr.hpp"

namespace hdrvqa {

struct QualityLabel {
    std::string video_id;
    std::string content_id;
    double score = 0;           // MOS (NR) or DMOS (FR)
    std::string condition;      // dark / bright
    std::string reference_id;   // pristine video of the content (FR mode)
};

std::vector<QualityLabel> load_labels(const std::string& path);
void save_labels(const std::string& path, const std::vector<QualityLabel>& labels);

struct EvalSplit {
    int trial_id = 0;
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
};

std::string splits_to_json(const std::vector<EvalSplit>& splits);

// Content-level shuffle into ~ratio : 1-ratio; every video follows its
// content. Deterministic per seed.
std::vector<EvalSplit> make_splits(const std::vector<QualityLabel>& labels,
                                   double ratio = 0.8, int trials = 100, uint64_t seed = 0);

struct RegressorSpec {
    std::vector<double> c_grid = {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
    // units of train-label std; 0 disables the insensitivity tube so CV can
    // pick an exact-interpolation regime on clean data
    std::vector<double> epsilon_grid = {0.0, 0.1, 1.0};
    int folds = 5;

    void validate() const;
};

struct FittedRegressor {
    Standardizer standardizer;
    LinearSvr svr;
    double chosen_c = 0;
    double chosen_epsilon = 0;  // absolute, after scaling by label std
    std::string warning;        // set for degenerate fits
};

// Grid search by content-disjoint k-fold CV on the given rows only, then a
// refit on all of them. Ties prefer smaller C, then smaller epsilon.
FittedRegressor cv_fit(const std::vector<std::vector<double>>& features,
                       const std::vector<double>& labels,
                       const std::vector<std::string>& contents,
                       const RegressorSpec& spec, uint64_t seed);

std::vector<double> predict(const FittedRegressor& reg,
                            const std::vector<std::vector<double>>& features);

// |ref - dist|, elementwise; demands matching length and checkpoint.
std::vector<float> fr_feature(const VideoFeature& ref, const VideoFeature& dist);

enum class ProtocolMode { NR, FR };

struct TrialAudit {
    int trial_id = 0;
    std::set<std::string> touched_before_predict;
    std::set<std::string> test_ids;
};

struct ProtocolReport {
    ProtocolMode mode = ProtocolMode::NR;
    int trials_requested = 0;
    uint64_t seed = 0;
    std::vector<TrialMetrics> per_trial;
    MetricsAggregate agg;
    std::vector<std::string> warnings;
    std::string config_hash;

    std::string to_json() const;
    static ProtocolReport from_json(const std::string& text);
};

ProtocolReport run_protocol(const FeatureBank& bank, const std::vector<QualityLabel>& labels,
                            const RegressorSpec& spec, int trials, ProtocolMode mode,
                            uint64_t seed, std::vector<TrialAudit>* audit_out = nullptr);

void save_report(const std::string& path, const ProtocolReport& report);
ProtocolReport load_report(const std::string& path);

// Final head for single-video scoring: cv_fit on every labeled video.
struct PredictHead {
    Standardizer standardizer;
    std::vector<double> w;
    double bias = 0;
    double chosen_c = 0;
    double chosen_epsilon = 0;
    int dim = 0;
    std::string checkpoint_hash;
};

PredictHead fit_head(const FeatureBank& bank, const std::vector<QualityLabel>& labels,
                     const RegressorSpec& spec, uint64_t seed);
double apply_head(const PredictHead& head, const std::vector<float>& feature);
void save_head(const std::string& path, const PredictHead& head);
PredictHead load_head(const std::string& path);

}  // namespace hdrvqa
