#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hdrvqa/common.hpp"

namespace hdrvqa {

// A batch of projector outputs with class labels.
// Anchors flagged in ugc_mask follow the unique-class regime: their label is
// shared with exactly one partner in the batch (the transformed view).
struct LabeledBatch {
    int n = 0;  // batch size
    int k = 0;  // embedding dim
    std::vector<double> z;  // n x k, row-major
    std::vector<int64_t> labels;
    double tau = 0.1;
    std::vector<uint8_t> ugc_mask;

    const double* row(int i) const { return z.data() + size_t(i) * k; }
    void validate() const;
};

// phi(u,v) = u.v / (|u||v|)
double cosine_similarity(std::span<const double> u, std::span<const double> v);

// Loss for an anchor whose class has other members in the batch: mean over
// same-class partners of the temperature-scaled softmax cross entropy.
double ntxent_syn(const LabeledBatch& batch, int anchor);

// Loss for an anchor with a single designated positive.
double ntxent_pairwise(const LabeledBatch& batch, int anchor, int positive);

// Batch mean, routing each anchor by ugc_mask: unique-class anchors use the
// pairwise form, the rest use the class form.
double total_loss(const LabeledBatch& batch);

// Same, also writing d(loss)/dz into grad (n x k, row-major).
double total_loss_grad(const LabeledBatch& batch, std::vector<double>& grad);

// Index of the unique same-label partner of a ugc anchor.
int ugc_positive_of(const LabeledBatch& batch, int anchor);

}  // namespace hdrvqa
