#include "hdrvqa/svr.hpp"

#include <algorithm>
#include <cmath>

namespace hdrvqa {

void Standardizer::fit(const std::vector<std::vector<double>>& rows) {
    require(!rows.empty(), ErrorClass::DegenerateInput, "standardizer: no rows");
    const size_t d = rows[0].size();
    mean.assign(d, 0.0);
    scale.assign(d, 1.0);
    for (const auto& r : rows) {
        require(r.size() == d, ErrorClass::DimensionMismatch, "standardizer: ragged rows");
        for (size_t j = 0; j < d; ++j) mean[j] += r[j];
    }
    for (size_t j = 0; j < d; ++j) mean[j] /= double(rows.size());
    if (rows.size() > 1) {
        std::vector<double> var(d, 0.0);
        for (const auto& r : rows)
            for (size_t j = 0; j < d; ++j) var[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
        for (size_t j = 0; j < d; ++j) {
            double s = std::sqrt(var[j] / double(rows.size() - 1));
            scale[j] = s > 0 ? s : 1.0;
        }
    }
}

std::vector<double> Standardizer::apply(const std::vector<double>& row) const {
    require(row.size() == mean.size(), ErrorClass::DimensionMismatch,
            "standardizer: dim mismatch");
    std::vector<double> out(row.size());
    for (size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean[j]) / scale[j];
    return out;
}

void LinearSvr::fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                    double C, double epsilon, int max_sweeps, double tol) {
    require(!x.empty() && x.size() == y.size(), ErrorClass::DimensionMismatch,
            "svr: bad training shapes");
    require(C > 0 && epsilon >= 0, ErrorClass::DomainError, "svr: C>0, epsilon>=0 required");
    const size_t n = x.size();
    const size_t d = x[0].size();

    // augmented bias feature; labels centered so the regularized bias stays small
    double ymean = 0;
    for (double v : y) ymean += v;
    ymean /= double(n);

    std::vector<double> beta(n, 0.0);
    std::vector<double> w(d + 1, 0.0);
    std::vector<double> qii(n);
    for (size_t i = 0; i < n; ++i) {
        double q = 1.0;  // bias feature
        for (double v : x[i]) q += v * v;
        qii[i] = q;
    }

    auto dot_w = [&](const std::vector<double>& xi) {
        double s = w[d];
        for (size_t j = 0; j < d; ++j) s += w[j] * xi[j];
        return s;
    };

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_delta = 0;
        for (size_t i = 0; i < n; ++i) {
            const std::vector<double>& xi = x[i];
            double yi = y[i] - ymean;
            // b = x_i . w_without_i - y_i
            double b = dot_w(xi) - qii[i] * beta[i] - yi;
            double a = qii[i];
            double cand_pos = (-b - epsilon) / a;
            double cand_neg = (-b + epsilon) / a;
            double nb;
            if (cand_pos > 0)
                nb = cand_pos;
            else if (cand_neg < 0)
                nb = cand_neg;
            else
                nb = 0.0;
            nb = std::clamp(nb, -C, C);
            double delta = nb - beta[i];
            if (delta != 0.0) {
                beta[i] = nb;
                for (size_t j = 0; j < d; ++j) w[j] += delta * xi[j];
                w[d] += delta;  // bias feature is the constant 1
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }
        if (max_delta < tol) break;
    }

    w_.assign(w.begin(), w.begin() + d);
    bias_ = w[d] + ymean;
}

double LinearSvr::predict_one(const std::vector<double>& x) const {
    require(fitted(), ErrorClass::Internal, "svr: predict before fit");
    require(x.size() == w_.size(), ErrorClass::DimensionMismatch, "svr: feature dim mismatch");
    double s = bias_;
    for (size_t j = 0; j < x.size(); ++j) s += w_[j] * x[j];
    return s;
}

std::vector<double> LinearSvr::predict(const std::vector<std::vector<double>>& x) const {
    std::vector<double> out;
    out.reserve(x.size());
    for (const auto& row : x) out.push_back(predict_one(row));
    return out;
}

void LinearSvr::set(std::vector<double> w, double bias) {
    w_ = std::move(w);
    bias_ = bias;
}

}  // namespace hdrvqa
