#include "hdrvqa/loss.hpp"

#include <algorithm>
#include <cmath>

namespace hdrvqa {

void LabeledBatch::validate() const {
    require(n >= 2, ErrorClass::DegenerateInput, "batch needs at least 2 elements");
    require(k > 0, ErrorClass::DimensionMismatch, "embedding dim must be positive");
    require(tau > 0.0, ErrorClass::DomainError, "temperature must be positive");
    require(z.size() == size_t(n) * k, ErrorClass::DimensionMismatch, "z size mismatch");
    require(labels.size() == size_t(n), ErrorClass::DimensionMismatch, "labels size mismatch");
    require(ugc_mask.size() == size_t(n), ErrorClass::DimensionMismatch, "ugc_mask size mismatch");
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    require(u.size() == v.size(), ErrorClass::DimensionMismatch,
            "cosine_similarity: length mismatch");
    require(!u.empty(), ErrorClass::DimensionMismatch, "cosine_similarity: empty vectors");
    double dot = 0, nu = 0, nv = 0;
    for (size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    require(nu > 0.0 && nv > 0.0, ErrorClass::DegenerateInput,
            "cosine_similarity: zero vector");
    return dot / std::sqrt(nu * nv);
}

namespace {

// Rows of z normalized to unit length, plus the original norms.
struct Normalized {
    std::vector<double> unit;   // n x k
    std::vector<double> norm;   // n
};

Normalized normalize_rows(const LabeledBatch& b) {
    Normalized r;
    r.unit.resize(b.z.size());
    r.norm.resize(b.n);
    for (int i = 0; i < b.n; ++i) {
        const double* zi = b.row(i);
        double s = 0;
        for (int d = 0; d < b.k; ++d) s += zi[d] * zi[d];
        require(s > 0.0, ErrorClass::DegenerateInput, "zero embedding row in batch");
        double nrm = std::sqrt(s);
        r.norm[i] = nrm;
        double inv = 1.0 / nrm;
        for (int d = 0; d < b.k; ++d) r.unit[size_t(i) * b.k + d] = zi[d] * inv;
    }
    return r;
}

// Full cosine similarity matrix of the batch.
std::vector<double> similarity_matrix(const LabeledBatch& b, const Normalized& nz) {
    std::vector<double> phi(size_t(b.n) * b.n, 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < b.n; ++i) {
        const double* ui = nz.unit.data() + size_t(i) * b.k;
        for (int j = 0; j <= i; ++j) {
            const double* uj = nz.unit.data() + size_t(j) * b.k;
            double s = 0;
            for (int d = 0; d < b.k; ++d) s += ui[d] * uj[d];
            phi[size_t(i) * b.n + j] = s;
            phi[size_t(j) * b.n + i] = s;
        }
    }
    return phi;
}

// log( sum_{k != i} exp(phi_ik / tau) ), numerically stable
double log_denominator(const std::vector<double>& phi, int n, int i, double tau) {
    const double* row = phi.data() + size_t(i) * n;
    double mx = -1e300;
    for (int j = 0; j < n; ++j)
        if (j != i) mx = std::max(mx, row[j] / tau);
    double s = 0;
    for (int j = 0; j < n; ++j)
        if (j != i) s += std::exp(row[j] / tau - mx);
    return mx + std::log(s);
}

double anchor_loss(const LabeledBatch& b, const std::vector<double>& phi, int i) {
    double logden = log_denominator(phi, b.n, i, b.tau);
    if (b.ugc_mask[i]) {
        int j = ugc_positive_of(b, i);
        return -(phi[size_t(i) * b.n + j] / b.tau - logden);
    }
    double acc = 0;
    int cnt = 0;
    for (int j = 0; j < b.n; ++j) {
        if (j == i || b.labels[j] != b.labels[i]) continue;
        acc += -(phi[size_t(i) * b.n + j] / b.tau - logden);
        ++cnt;
    }
    require(cnt > 0, ErrorClass::SingletonClass,
            "anchor " + std::to_string(i) + " has no same-class partner");
    return acc / cnt;
}

}  // namespace

int ugc_positive_of(const LabeledBatch& b, int anchor) {
    int found = -1;
    for (int j = 0; j < b.n; ++j) {
        if (j == anchor || b.labels[j] != b.labels[anchor]) continue;
        require(found < 0, ErrorClass::DegenerateInput,
                "ugc anchor " + std::to_string(anchor) + " has multiple partners");
        found = j;
    }
    require(found >= 0, ErrorClass::SingletonClass,
            "ugc anchor " + std::to_string(anchor) + " has no partner");
    return found;
}

double ntxent_syn(const LabeledBatch& b, int anchor) {
    b.validate();
    require(anchor >= 0 && anchor < b.n, ErrorClass::IndexOutOfRange, "anchor out of range");
    Normalized nz = normalize_rows(b);
    std::vector<double> phi = similarity_matrix(b, nz);
    double logden = log_denominator(phi, b.n, anchor, b.tau);
    double acc = 0;
    int cnt = 0;
    for (int j = 0; j < b.n; ++j) {
        if (j == anchor || b.labels[j] != b.labels[anchor]) continue;
        acc += -(phi[size_t(anchor) * b.n + j] / b.tau - logden);
        ++cnt;
    }
    require(cnt > 0, ErrorClass::SingletonClass,
            "ntxent_syn: anchor class has no other member (route to the pairwise loss)");
    return acc / cnt;
}

double ntxent_pairwise(const LabeledBatch& b, int anchor, int positive) {
    b.validate();
    require(anchor >= 0 && anchor < b.n && positive >= 0 && positive < b.n,
            ErrorClass::IndexOutOfRange, "anchor/positive out of range");
    require(anchor != positive, ErrorClass::DomainError,
            "ntxent_pairwise: anchor equals positive");
    Normalized nz = normalize_rows(b);
    std::vector<double> phi = similarity_matrix(b, nz);
    double logden = log_denominator(phi, b.n, anchor, b.tau);
    return -(phi[size_t(anchor) * b.n + positive] / b.tau - logden);
}

namespace {

// Positive routing per anchor, resolved before any parallel region so
// precondition failures surface as exceptions rather than aborts.
// positive[i] = partner index for ugc anchors, -1 for syn anchors with a
// nonempty class.
std::vector<int> route_anchors(const LabeledBatch& b) {
    std::vector<int> positive(b.n, -1);
    for (int i = 0; i < b.n; ++i) {
        if (b.ugc_mask[i]) {
            positive[i] = ugc_positive_of(b, i);
        } else {
            int cnt = 0;
            for (int j = 0; j < b.n; ++j)
                if (j != i && b.labels[j] == b.labels[i]) ++cnt;
            require(cnt > 0, ErrorClass::SingletonClass,
                    "anchor " + std::to_string(i) + " has no same-class partner");
        }
    }
    return positive;
}

}  // namespace

double total_loss(const LabeledBatch& b) {
    b.validate();
    route_anchors(b);
    Normalized nz = normalize_rows(b);
    std::vector<double> phi = similarity_matrix(b, nz);
    double total = 0;
#pragma omp parallel for reduction(+ : total) schedule(static)
    for (int i = 0; i < b.n; ++i) total += anchor_loss(b, phi, i);
    return total / b.n;
}

double total_loss_grad(const LabeledBatch& b, std::vector<double>& grad) {
    b.validate();
    const std::vector<int> positive = route_anchors(b);
    Normalized nz = normalize_rows(b);
    std::vector<double> phi = similarity_matrix(b, nz);
    const int n = b.n, k = b.k;

    // dL/d phi_ij accumulated over anchors; G is asymmetric, H = G + G^T
    // folds both roles of each pair into one pass over rows.
    std::vector<double> G(size_t(n) * n, 0.0);
    double total = 0;

#pragma omp parallel for reduction(+ : total) schedule(static)
    for (int i = 0; i < n; ++i) {
        const double* prow = phi.data() + size_t(i) * n;
        double* grow = G.data() + size_t(i) * n;
        double logden = log_denominator(phi, n, i, b.tau);

        // positive weights: 1/|C(i)| over the class for syn anchors,
        // all mass on the designated partner for ugc anchors
        double inv_ntau = 1.0 / (double(n) * b.tau);
        if (b.ugc_mask[i]) {
            int j = positive[i];
            total += -(prow[j] / b.tau - logden);
            for (int m = 0; m < n; ++m) {
                if (m == i) continue;
                double p = std::exp(prow[m] / b.tau - logden);
                grow[m] = (p - (m == j ? 1.0 : 0.0)) * inv_ntau;
            }
        } else {
            int csz = 0;
            for (int m = 0; m < n; ++m)
                if (m != i && b.labels[m] == b.labels[i]) ++csz;
            require(csz > 0, ErrorClass::SingletonClass,
                    "anchor " + std::to_string(i) + " has no same-class partner");
            double acc = 0;
            for (int m = 0; m < n; ++m) {
                if (m == i) continue;
                double p = std::exp(prow[m] / b.tau - logden);
                bool same = b.labels[m] == b.labels[i];
                if (same) acc += -(prow[m] / b.tau - logden);
                grow[m] = (p - (same ? 1.0 / csz : 0.0)) * inv_ntau;
            }
            total += acc / csz;
        }
    }

    grad.assign(size_t(n) * k, 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        // d phi_im / d z_i = (u_m - phi_im * u_i) / |z_i|
        const double* ui = nz.unit.data() + size_t(i) * k;
        double* gi = grad.data() + size_t(i) * k;
        double self_coeff = 0;
        for (int m = 0; m < n; ++m) {
            if (m == i) continue;
            double h = G[size_t(i) * n + m] + G[size_t(m) * n + i];
            if (h == 0.0) continue;
            const double* um = nz.unit.data() + size_t(m) * k;
            double ph = phi[size_t(i) * n + m];
            for (int d = 0; d < k; ++d) gi[d] += h * um[d];
            self_coeff += h * ph;
        }
        double inv = 1.0 / nz.norm[i];
        for (int d = 0; d < k; ++d) gi[d] = (gi[d] - self_coeff * ui[d]) * inv;
    }
    return total / n;
}

}  // namespace hdrvqa
