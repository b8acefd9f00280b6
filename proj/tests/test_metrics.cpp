// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "llmprop/metrics.hpp"
#include "oracles.hpp"

using namespace llmprop;

TEST_CASE("mae examples") {
    Eigen::VectorXd a(3), b(3);
    a << 1, 2, 3;
    b << 2, 2, 2;
    CHECK(mae(a, a) == 0.0);
    CHECK(mae(a, b) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(mae(Eigen::VectorXd(), Eigen::VectorXd()), NumericError);
    CHECK_THROWS_AS(mae(a, Eigen::VectorXd::Zero(2)), NumericError);
}

TEST_CASE("mae matches an independent summation") {
    Rng rng(1);
    const auto p = oracle::random_vector(10000, rng, -100, 100);
    const auto t = oracle::random_vector(10000, rng, -100, 100);
    CHECK(std::abs(mae(p, t) - oracle::mae_kahan(p, t)) <= 1e-12);
}

TEST_CASE("mae is translation equivariant") {
    Rng rng(2);
    for (int k = 0; k < 20; ++k) {
        const auto p = oracle::random_vector(100, rng, -5, 5);
        const auto t = oracle::random_vector(100, rng, -5, 5);
        const double c = uniform_real(rng, -10, 10);
        const Eigen::VectorXd pc = p.array() + c, tc = t.array() + c;
        CHECK(std::abs(mae(pc, tc) - mae(p, t)) <= 1e-12);
    }
}

TEST_CASE("auc examples") {
    Eigen::VectorXd s(2), l(2);
    s << 0.9, 0.1;
    l << 1, 0;
    CHECK(roc_auc(s, l) == 1.0);

    Eigen::VectorXd flat = Eigen::VectorXd::Constant(6, 0.3), bal(6);
    bal << 1, 0, 1, 0, 1, 0;
    CHECK(roc_auc(flat, bal) == 0.5);

    CHECK_THROWS_AS(roc_auc(flat, Eigen::VectorXd::Ones(6)), NumericError);
    CHECK_THROWS_AS(roc_auc(flat, Eigen::VectorXd::Zero(6)), NumericError);
}

TEST_CASE("auc equals the pairwise oracle exactly, with ties") {
    Rng rng(3);
    for (int k = 0; k < 200; ++k) {
        const auto [s, l] = oracle::random_auc_instance(30, rng);
        CHECK(roc_auc(s, l) == oracle::auc_pairwise(s, l));
    }
}

TEST_CASE("auc invariances") {
    Rng rng(4);
    for (int k = 0; k < 100; ++k) {
        const auto [s, l] = oracle::random_auc_instance(40, rng);
        const double a = roc_auc(s, l);
        const Eigen::VectorXd e = s.array().exp();
        const Eigen::VectorXd affine = 3.0 * s.array() - 7.0;
        CHECK(roc_auc(e, l) == a);
        CHECK(roc_auc(affine, l) == a);
        const Eigen::VectorXd flipped = 1.0 - l.array();
        CHECK(a + roc_auc(s, flipped) == 1.0);
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
    }
}

TEST_CASE("report serialization") {
    MetricsReport r;
    r.task = Task::volume;
    r.metric = MetricName::mae;
    r.value = 44.553;
    r.n = 9888;
    r.units = std::string(task_units(Task::volume));
    r.notes.emplace_back("zero_shot.head", "random");
    const auto kv = parse_key_values(r.serialize());
    CHECK(kv.at("metric") == "MAE");
    CHECK(*parse_double(kv.at("value")) == 44.553);
    CHECK(kv.at("n") == "9888");
    CHECK(kv.at("units") == "Å³/cell");
    CHECK(kv.at("zero_shot.head") == "random");
    CHECK(r.summary().find("44.5530") != std::string::npos);
}
