#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hdrvqa/metrics.hpp"
#include "ref/reference.hpp"

using namespace hdrvqa;

TEST_CASE("srocc canonical values") {
    std::vector<double> inc = {1, 2, 3, 4, 5};
    std::vector<double> gt = {10, 20, 30, 40, 50};
    CHECK(srocc(inc, gt) == 1.0);

    std::vector<double> dec = {5, 4, 3, 2, 1};
    CHECK(srocc(dec, gt) == -1.0);

    std::vector<double> p = {1, 2, 3, 4, 5};
    std::vector<double> q = {1, 3, 2, 4, 5};
    CHECK(srocc(p, q) == 0.9);  // 1 - 6*2/(5*24), exact in doubles
}

TEST_CASE("srocc agrees with the rank-difference shortcut on tie-free data") {
    Rng rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        size_t n = 5 + rng.below(20);
        std::vector<double> a(n), b(n);
        for (size_t i = 0; i < n; ++i) {
            a[i] = rng.normal();
            b[i] = rng.normal();
        }
        CHECK(srocc(a, b) == doctest::Approx(ref::srocc_no_ties(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("srocc invariance under strictly monotone transforms") {
    Rng rng(6);
    std::vector<double> a(20), b(20);
    for (size_t i = 0; i < 20; ++i) {
        a[i] = rng.normal();
        b[i] = rng.normal();
    }
    double base = srocc(a, b);
    auto transform = [&](double (*g)(double)) {
        std::vector<double> t(a.size());
        for (size_t i = 0; i < a.size(); ++i) t[i] = g(a[i]);
        return srocc(t, b);
    };
    CHECK(std::abs(transform([](double x) { return std::exp(x); }) - base) <= 1e-12);
    CHECK(std::abs(transform([](double x) { return x * x * x; }) - base) <= 1e-12);
    CHECK(std::abs(transform([](double x) { return 3.0 * x + 7.0; }) - base) <= 1e-12);
}

TEST_CASE("srocc error paths") {
    std::vector<double> a = {1, 2, 3};
    std::vector<double> c = {5, 5, 5};
    std::vector<double> shorter = {1, 2};
    CHECK_THROWS_AS(srocc(a, shorter), Error);
    CHECK_THROWS_AS(srocc(a, c), Error);  // constant input has undefined rank correlation
}

TEST_CASE("ties receive average ranks") {
    std::vector<double> v = {1.0, 2.0, 2.0, 3.0};
    std::vector<double> r = average_ranks(v);
    CHECK(r[0] == 1.0);
    CHECK(r[1] == 2.5);
    CHECK(r[2] == 2.5);
    CHECK(r[3] == 4.0);
}

TEST_CASE("lcc canonical values") {
    std::vector<double> m = {1, 3, 5};
    CHECK(lcc(m, m) == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> anti = {-1 + 7., -3 + 7., -5 + 7.};
    CHECK(lcc(anti, m) == doctest::Approx(-1.0).epsilon(1e-12));
    // direct Pearson arithmetic: cov=6, var1=14/3, var2=8 -> 6/sqrt(112/3)
    std::vector<double> x = {1, 2, 4};
    std::vector<double> y = {1, 3, 5};
    CHECK(lcc(x, y) == doctest::Approx(6.0 / std::sqrt(112.0 / 3.0)).epsilon(1e-12));
    CHECK(lcc(x, y) == doctest::Approx(0.98198).epsilon(1e-4));
}

TEST_CASE("lcc affine invariance up to sign") {
    Rng rng(7);
    std::vector<double> x(15), y(15);
    for (size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.normal();
        y[i] = rng.normal();
    }
    double base = lcc(x, y);
    std::vector<double> pos(x.size()), neg(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        pos[i] = 2.5 * x[i] + 1.0;
        neg[i] = -0.5 * x[i] + 3.0;
    }
    CHECK(lcc(pos, y) == doctest::Approx(base).epsilon(1e-12));
    CHECK(lcc(neg, y) == doctest::Approx(-base).epsilon(1e-12));
}

TEST_CASE("rmse values and symmetry") {
    std::vector<double> x = {1, 2, 3};
    CHECK(rmse(x, x) == 0.0);
    std::vector<double> a = {0, 0};
    std::vector<double> b = {3, 4};
    CHECK(rmse(a, b) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-12));
    CHECK(rmse(a, b) == rmse(b, a));
}

TEST_CASE("logistic fit recovers synthetic parameters to curve RMSE < 1e-6") {
    LogisticParams truth;
    truth.b1 = 90;
    truth.b2 = 10;
    truth.b3 = 0.5;
    truth.b4 = 0.15;
    truth.b5 = 5;
    std::vector<double> pred, mos;
    for (int i = 0; i <= 40; ++i) {
        double x = double(i) / 40.0;
        pred.push_back(x);
        mos.push_back(logistic_eval(truth, x));
    }
    LogisticParams fit = logistic_fit(pred, mos);
    std::vector<double> fitted(pred.size());
    for (size_t i = 0; i < pred.size(); ++i) fitted[i] = logistic_eval(fit, pred[i]);
    CHECK(rmse(fitted, mos) < 1e-6);
}

TEST_CASE("logistic fit handles constant targets with a flat curve") {
    std::vector<double> pred = {0.1, 0.3, 0.5, 0.7, 0.9};
    std::vector<double> mos = {42, 42, 42, 42, 42};
    LogisticParams fit = logistic_fit(pred, mos);
    std::vector<double> fitted(pred.size());
    for (size_t i = 0; i < pred.size(); ++i) fitted[i] = logistic_eval(fit, pred[i]);
    CHECK(rmse(fitted, mos) < 1e-9);
}

TEST_CASE("logistic fit rejects constant predictions") {
    std::vector<double> pred = {0.5, 0.5, 0.5, 0.5, 0.5};
    std::vector<double> mos = {1, 2, 3, 4, 5};
    CHECK_THROWS_AS(logistic_fit(pred, mos), Error);
    std::vector<double> tooshort = {1, 2};
    CHECK_THROWS_AS(logistic_fit(tooshort, tooshort), Error);
}

TEST_CASE("logistic fit in-denominator form reproduces its own generator") {
    LogisticParams truth;
    truth.b1 = 80;
    truth.b2 = 5;
    truth.b3 = 0.4;
    truth.b4 = 0.2;
    truth.b5 = 0.3;
    std::vector<double> pred, mos;
    for (int i = 0; i <= 30; ++i) {
        double x = double(i) / 30.0;
        pred.push_back(x);
        mos.push_back(logistic_eval(truth, x, LogisticForm::InDenominator));
    }
    LogisticParams fit = logistic_fit(pred, mos, LogisticForm::InDenominator);
    std::vector<double> fitted(pred.size());
    for (size_t i = 0; i < pred.size(); ++i)
        fitted[i] = logistic_eval(fit, pred[i], LogisticForm::InDenominator);
    CHECK(rmse(fitted, mos) < 1e-5);
}

TEST_CASE("lcc after logistic fitting is not inferior to raw lcc on sigmoid data") {
    for (uint64_t seed : {1u, 2u, 3u, 4u}) {
        Rng rng(seed);
        LogisticParams truth;
        truth.b1 = 100;
        truth.b2 = 0;
        truth.b3 = 0.5;
        truth.b4 = 0.08;
        truth.b5 = 0;
        std::vector<double> pred, mos;
        for (int i = 0; i < 40; ++i) {
            double x = rng.uniform();
            pred.push_back(x);
            mos.push_back(logistic_eval(truth, x) + rng.normal() * 2.0);
        }
        double raw = lcc(pred, mos);
        LogisticParams fit = logistic_fit(pred, mos);
        std::vector<double> fitted(pred.size());
        for (size_t i = 0; i < pred.size(); ++i) fitted[i] = logistic_eval(fit, pred[i]);
        CHECK(lcc(fitted, mos) >= raw - 1e-9);
    }
}

TEST_CASE("aggregate medians and sample stds") {
    auto mk = [](double s) {
        TrialMetrics t;
        t.srocc = s;
        t.lcc = s;
        t.rmse = s;
        return t;
    };
    MetricsAggregate a3 = aggregate({mk(0.8), mk(0.9), mk(1.0)});
    CHECK(a3.median_srocc == 0.9);
    MetricsAggregate a2 = aggregate({mk(0.8), mk(0.9)});
    CHECK(a2.median_srocc == doctest::Approx(0.85).epsilon(1e-15));
    MetricsAggregate ac = aggregate({mk(1.0), mk(1.0), mk(1.0)});
    CHECK(ac.std_srocc == 0.0);
    // sample std uses the n-1 denominator
    MetricsAggregate sd = aggregate({mk(1.0), mk(3.0)});
    CHECK(sd.std_srocc == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(aggregate({}), Error);

    // order invariance
    MetricsAggregate fwd = aggregate({mk(0.1), mk(0.5), mk(0.9), mk(0.3)});
    MetricsAggregate rev = aggregate({mk(0.3), mk(0.9), mk(0.5), mk(0.1)});
    CHECK(fwd.median_srocc == rev.median_srocc);
    CHECK(fwd.std_srocc == doctest::Approx(rev.std_srocc).epsilon(1e-15));
}
