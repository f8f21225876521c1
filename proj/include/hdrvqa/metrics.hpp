#pragma once

#include <span>
#include <vector>

#include "hdrvqa/common.hpp"

namespace hdrvqa {

// Five-parameter monotone logistic used to map raw predictions onto the
// score scale before LCC/RMSE.
struct LogisticParams {
    double b1 = 0, b2 = 0, b3 = 0, b4 = 1, b5 = 0;
    bool converged = false;
    int iterations = 0;
};

// Standard form puts b5 as an additive offset outside the ratio. The
// alternative form keeps it inside the denominator for arithmetic
// comparison against sources that typeset it that way.
enum class LogisticForm { Standard, InDenominator };

double logistic_eval(const LogisticParams& p, double x,
                     LogisticForm form = LogisticForm::Standard);

// Damped (Levenberg-style) least squares from a fixed data-driven start;
// non-convergence is reported via the flag, not an error.
LogisticParams logistic_fit(std::span<const double> pred, std::span<const double> mos,
                            LogisticForm form = LogisticForm::Standard);

// average ranks; tied values share the mean of their rank run
std::vector<double> average_ranks(std::span<const double> v);

double pearson(std::span<const double> a, std::span<const double> b);

// Spearman: Pearson correlation of average ranks.
double srocc(std::span<const double> pred, std::span<const double> gt);

double lcc(std::span<const double> fitted, std::span<const double> mos);

double rmse(std::span<const double> fitted, std::span<const double> mos);

double median(std::vector<double> v);
double sample_std(std::span<const double> v);

struct TrialMetrics {
    int trial_id = 0;
    double srocc = 0, lcc = 0, rmse = 0;
    LogisticParams logistic;
};

struct MetricsAggregate {
    double median_srocc = 0, median_lcc = 0, median_rmse = 0;
    double std_srocc = 0, std_lcc = 0, std_rmse = 0;
};

MetricsAggregate aggregate(const std::vector<TrialMetrics>& per_trial);

}  // namespace hdrvqa
