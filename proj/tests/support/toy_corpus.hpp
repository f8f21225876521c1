#pragma once

// Synthetic desk-scale corpus: procedural content frames pushed through a
// ladder-style distortion family (downscale + quantize + upscale), one
// 1-frame clip per (content, class). Used by the training tests and the
// acceptance suite.

#include <map>
#include <string>
#include <vector>

#include "hdrvqa/features.hpp"
#include "hdrvqa/ladder.hpp"

namespace hdrvqa::test {

struct ToyCorpus {
    CorpusManifest manifest;
    std::map<std::string, int> class_of;    // clip_id -> distortion class
    std::map<std::string, int> content_of;  // clip_id -> content index
};

HdrFrame toy_content_frame(int size, uint64_t seed);
HdrFrame toy_distort(const HdrFrame& frame, int distortion_class);

ToyCorpus make_toy_corpus(const std::string& dir, int n_contents, int frame_size,
                          uint64_t seed);

// Multinomial logistic probe on frozen features, full-batch gradient descent
// with momentum on standardized inputs.
class LinearProbe {
public:
    void fit(const std::vector<std::vector<float>>& x, const std::vector<int>& y,
             int n_classes, int epochs = 300, double lr = 0.5, uint64_t seed = 0);
    int predict_one(const std::vector<float>& x) const;
    double accuracy(const std::vector<std::vector<float>>& x, const std::vector<int>& y) const;

private:
    int classes_ = 0;
    std::vector<double> mean_, scale_;
    std::vector<double> w_;  // classes x dim
    std::vector<double> b_;
};

}  // namespace hdrvqa::test
