#pragma once

#include <vector>

#include "hdrvqa/common.hpp"

namespace hdrvqa {

// Per-dimension z-score, fit on training rows only.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    void fit(const std::vector<std::vector<double>>& rows);
    std::vector<double> apply(const std::vector<double>& row) const;
};

// Linear epsilon-insensitive SVR solved in the dual by coordinate descent
// (L1 loss, box constraint |beta_i| <= C). Deterministic: fixed sweep order.
class LinearSvr {
public:
    void fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
             double C, double epsilon, int max_sweeps = 1000, double tol = 1e-8);
    double predict_one(const std::vector<double>& x) const;
    std::vector<double> predict(const std::vector<std::vector<double>>& x) const;
    bool fitted() const { return !w_.empty(); }

    const std::vector<double>& weights() const { return w_; }
    double bias() const { return bias_; }
    void set(std::vector<double> w, double bias);

private:
    std::vector<double> w_;
    double bias_ = 0.0;
};

}  // namespace hdrvqa
