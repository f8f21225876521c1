#include "hdrvqa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hdrvqa {

double logistic_eval(const LogisticParams& p, double x, LogisticForm form) {
    double t = -(x - p.b3) / p.b4;
    // clamp the exponent so far-out predictions stay finite
    double e = std::exp(std::clamp(t, -700.0, 700.0));
    if (form == LogisticForm::Standard) return (p.b1 - p.b2) / (1.0 + e) + p.b5;
    return (p.b1 - p.b2) / (1.0 + e + p.b5);
}

namespace {

// residual jacobian row for one sample, d l(x) / d beta
void jacobian_row(const LogisticParams& p, double x, LogisticForm form, double* row) {
    double t = -(x - p.b3) / p.b4;
    double e = std::exp(std::clamp(t, -700.0, 700.0));
    if (form == LogisticForm::Standard) {
        double sig = 1.0 / (1.0 + e);
        double dsig = sig * (1.0 - sig);  // d sigma / d (x-b3)/b4
        row[0] = sig;
        row[1] = -sig;
        row[2] = (p.b1 - p.b2) * dsig * (-1.0 / p.b4);
        row[3] = (p.b1 - p.b2) * dsig * (-(x - p.b3) / (p.b4 * p.b4));
        row[4] = 1.0;
    } else {
        double den = 1.0 + e + p.b5;
        double num = p.b1 - p.b2;
        row[0] = 1.0 / den;
        row[1] = -1.0 / den;
        // d e / d b3 = e / b4 ; d e / d b4 = e (x-b3)/b4^2
        row[2] = -num * e / (p.b4 * den * den);
        row[3] = -num * e * (x - p.b3) / (p.b4 * p.b4 * den * den);
        row[4] = -num / (den * den);
    }
}

// solve the 5x5 system (A + lambda diag(A)) d = g in place; returns false on
// a singular pivot
bool solve5(double a[5][5], double g[5], double lambda, double out[5]) {
    double m[5][6];
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) m[i][j] = a[i][j];
        m[i][i] += lambda * std::max(a[i][i], 1e-12);
        m[i][5] = g[i];
    }
    for (int col = 0; col < 5; ++col) {
        int piv = col;
        for (int r = col + 1; r < 5; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        if (std::abs(m[piv][col]) < 1e-300) return false;
        std::swap_ranges(m[col], m[col] + 6, m[piv]);
        for (int r = 0; r < 5; ++r) {
            if (r == col) continue;
            double f = m[r][col] / m[col][col];
            for (int c = col; c < 6; ++c) m[r][c] -= f * m[col][c];
        }
    }
    for (int i = 0; i < 5; ++i) out[i] = m[i][5] / m[i][i];
    return true;
}

double sse_of(const LogisticParams& p, std::span<const double> pred,
              std::span<const double> mos, LogisticForm form) {
    double s = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        double r = logistic_eval(p, pred[i], form) - mos[i];
        s += r * r;
    }
    return s;
}

}  // namespace

LogisticParams logistic_fit(std::span<const double> pred, std::span<const double> mos,
                            LogisticForm form) {
    require(pred.size() == mos.size(), ErrorClass::DimensionMismatch,
            "logistic_fit: length mismatch");
    require(pred.size() >= 5, ErrorClass::DegenerateInput, "logistic_fit: needs >= 5 points");
    const size_t n = pred.size();

    double pmin = pred[0], pmax = pred[0], psum = 0;
    for (double v : pred) {
        pmin = std::min(pmin, v);
        pmax = std::max(pmax, v);
        psum += v;
    }
    require(pmax > pmin, ErrorClass::DegenerateInput, "logistic_fit: constant predictions");
    double pmean = psum / double(n);
    double pvar = 0;
    for (double v : pred) pvar += (v - pmean) * (v - pmean);
    double pstd = std::sqrt(pvar / double(n));

    LogisticParams p;
    p.b1 = *std::max_element(mos.begin(), mos.end());
    p.b2 = *std::min_element(mos.begin(), mos.end());
    p.b3 = pmean;
    p.b4 = pstd > 0 ? pstd / 4.0 : 1.0;
    p.b5 = 0.0;

    constexpr int kMaxIter = 10000;
    constexpr double kGtol = 1e-10;
    double lambda = 1e-3;
    double sse = sse_of(p, pred, mos, form);

    int iter = 0;
    for (; iter < kMaxIter; ++iter) {
        // accumulate J^T J and J^T r
        double jtj[5][5] = {};
        double jtr[5] = {};
        for (size_t i = 0; i < n; ++i) {
            double row[5];
            jacobian_row(p, pred[i], form, row);
            double r = logistic_eval(p, pred[i], form) - mos[i];
            for (int a = 0; a < 5; ++a) {
                jtr[a] += row[a] * r;
                for (int b = a; b < 5; ++b) jtj[a][b] += row[a] * row[b];
            }
        }
        for (int a = 0; a < 5; ++a)
            for (int b = 0; b < a; ++b) jtj[a][b] = jtj[b][a];

        double gnorm = 0;
        for (double g : jtr) gnorm = std::max(gnorm, std::abs(g));
        if (gnorm < kGtol) {
            p.converged = true;
            break;
        }

        double step[5];
        if (!solve5(jtj, jtr, lambda, step)) {
            lambda *= 10;
            if (lambda > 1e12) break;
            continue;
        }
        LogisticParams q = p;
        q.b1 -= step[0];
        q.b2 -= step[1];
        q.b3 -= step[2];
        q.b4 -= step[3];
        q.b5 -= step[4];
        if (q.b4 == 0.0) q.b4 = p.b4 * 0.5;  // keep the slope parameter off zero
        double new_sse = sse_of(q, pred, mos, form);
        if (std::isfinite(new_sse) && new_sse <= sse) {
            p = q;
            sse = new_sse;
            lambda = std::max(lambda * 0.5, 1e-12);
            if (sse < 1e-30) {
                p.converged = true;
                break;
            }
        } else {
            lambda *= 10;
            if (lambda > 1e12) break;
        }
    }
    p.iterations = iter;
    return p;
}

std::vector<double> average_ranks(std::span<const double> v) {
    const size_t n = v.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        double r = (double(i) + double(j)) / 2.0 + 1.0;  // 1-based average rank
        for (size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), ErrorClass::DimensionMismatch, "pearson: length mismatch");
    require(a.size() >= 3, ErrorClass::DegenerateInput, "pearson: needs >= 3 points");
    const size_t n = a.size();
    double ma = 0, mb = 0;
    for (size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= double(n);
    mb /= double(n);
    double cov = 0, va = 0, vb = 0;
    for (size_t i = 0; i < n; ++i) {
        double da = a[i] - ma, db = b[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    require(va > 0 && vb > 0, ErrorClass::DegenerateInput, "pearson: constant input");
    return cov / std::sqrt(va * vb);
}

double srocc(std::span<const double> pred, std::span<const double> gt) {
    require(pred.size() == gt.size(), ErrorClass::DimensionMismatch, "srocc: length mismatch");
    require(pred.size() >= 3, ErrorClass::DegenerateInput, "srocc: needs >= 3 points");
    std::vector<double> rp = average_ranks(pred);
    std::vector<double> rg = average_ranks(gt);
    return pearson(rp, rg);
}

double lcc(std::span<const double> fitted, std::span<const double> mos) {
    return pearson(fitted, mos);
}

double rmse(std::span<const double> fitted, std::span<const double> mos) {
    require(fitted.size() == mos.size(), ErrorClass::DimensionMismatch, "rmse: length mismatch");
    require(!fitted.empty(), ErrorClass::DegenerateInput, "rmse: empty input");
    double s = 0;
    for (size_t i = 0; i < fitted.size(); ++i) {
        double d = fitted[i] - mos[i];
        s += d * d;
    }
    return std::sqrt(s / double(fitted.size()));
}

double median(std::vector<double> v) {
    require(!v.empty(), ErrorClass::DegenerateInput, "median of empty list");
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double sample_std(std::span<const double> v) {
    require(!v.empty(), ErrorClass::DegenerateInput, "std of empty list");
    if (v.size() == 1) return 0.0;
    double m = 0;
    for (double x : v) m += x;
    m /= double(v.size());
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / double(v.size() - 1));
}

MetricsAggregate aggregate(const std::vector<TrialMetrics>& per_trial) {
    require(!per_trial.empty(), ErrorClass::DegenerateInput, "aggregate over zero trials");
    std::vector<double> s, l, r;
    for (const TrialMetrics& t : per_trial) {
        s.push_back(t.srocc);
        l.push_back(t.lcc);
        r.push_back(t.rmse);
    }
    MetricsAggregate a;
    a.median_srocc = median(s);
    a.median_lcc = median(l);
    a.median_rmse = median(r);
    a.std_srocc = sample_std(s);
    a.std_lcc = sample_std(l);
    a.std_rmse = sample_std(r);
    return a;
}

}  // namespace hdrvqa
