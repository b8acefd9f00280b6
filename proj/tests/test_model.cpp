// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "llmprop/model.hpp"

using namespace llmprop;

namespace {

EncoderConfig toy_config(std::size_t vocab, std::size_t hidden = 16) {
    EncoderConfig c;
    c.vocab_size = vocab;
    c.hidden_size = hidden;
    c.num_layers = 2;
    c.num_heads = 2;
    c.dropout = 0;
    c.max_positions = 1024;
    return c;
}

// Rows of random ids; row r keeps lengths[r] real tokens, the rest is padding.
Batch random_batch(const std::vector<std::size_t>& lengths, std::size_t cols, std::size_t vocab, Rng& rng) {
    Batch b;
    const auto rows = static_cast<Eigen::Index>(lengths.size());
    b.ids.setZero(rows, static_cast<Eigen::Index>(cols));
    b.mask.setZero(rows, static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < lengths[static_cast<std::size_t>(r)]; ++c) {
            b.ids(r, static_cast<Eigen::Index>(c)) = static_cast<TokenId>(1 + uniform_index(rng, vocab - 1));
            b.mask(r, static_cast<Eigen::Index>(c)) = 1;
        }
    }
    return b;
}

double directional(const Model& m, const Batch& b, const Eigen::VectorXd& d_z) {
    return d_z.dot(m.forward(b, Model::Mode::eval, nullptr, nullptr));
}

} // namespace

TEST_CASE("encoder config validation") {
    auto c = toy_config(10);
    c.num_heads = 3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = toy_config(10);
    c.dropout = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = toy_config(0);
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_NOTHROW(toy_config(10).validate());
}

TEST_CASE("hidden state shapes and eval determinism") {
    Model m(toy_config(50, 64), HeadKind::regression, Pooling::cls);
    m.init_random(1);
    Rng rng(2);
    const auto b = random_batch({888, 300}, 888, 50, rng);
    const auto states = m.encode(b);
    REQUIRE(states.size() == 2);
    CHECK(states[0].rows() == 888);
    CHECK(states[0].cols() == 64);
    const auto again = m.encode(b);
    CHECK(states[0] == again[0]);
    CHECK(states[1] == again[1]);

    const auto cls = pool_cls(states);
    CHECK(cls.rows() == 2);
    CHECK(cls.cols() == 64);
    CHECK(cls.row(1) == states[1].row(0));
    CHECK(pool_cls(std::vector<Eigen::MatrixXd>{states[0]}).rows() == 1);
}

TEST_CASE("mean pooling matches direct computation") {
    Model m(toy_config(30), HeadKind::regression, Pooling::mean);
    m.init_random(3);
    Rng rng(4);
    const auto b = random_batch({5, 9, 1}, 9, 30, rng);
    const auto states = m.encode(b);
    const auto pooled = pool_mean(states, b.mask);
    for (std::size_t r = 0; r < states.size(); ++r) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(16);
        double n = 0;
        for (Eigen::Index t = 0; t < b.cols(); ++t) {
            if (!b.mask(static_cast<Eigen::Index>(r), t)) continue;
            acc += states[r].row(t).transpose();
            n += 1;
        }
        CHECK((pooled.row(static_cast<Eigen::Index>(r)).transpose() - acc / n).cwiseAbs().maxCoeff() <= 1e-12);
    }
    // The head reads the same pooled vector.
    const Eigen::VectorXd z = m.forward(b, Model::Mode::eval, nullptr, nullptr);
    const Eigen::VectorXd direct = (pooled * m.head_weight()).array() + m.head_bias();
    CHECK((z - direct).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("padded ids do not influence real positions") {
    for (auto pooling : {Pooling::cls, Pooling::mean}) {
        Model m(toy_config(40), HeadKind::regression, pooling);
        m.init_random(5);
        Rng rng(6);
        auto b = random_batch({4, 12, 7, 1}, 12, 40, rng);
        const auto before = m.encode(b);
        const Eigen::VectorXd p0 = m.predict(b);
        for (int trial = 0; trial < 10; ++trial) {
            for (Eigen::Index i = 0; i < b.ids.size(); ++i)
                if (!b.mask.data()[i]) b.ids.data()[i] = static_cast<TokenId>(uniform_index(rng, 40));
            CHECK((m.predict(b) - p0).cwiseAbs().maxCoeff() <= 1e-6);
            const auto after = m.encode(b);
            for (Eigen::Index r = 0; r < b.rows(); ++r)
                for (Eigen::Index t = 0; t < b.cols(); ++t)
                    if (b.mask(r, t))
                        CHECK((after[static_cast<std::size_t>(r)].row(t) - before[static_cast<std::size_t>(r)].row(t))
                                  .cwiseAbs()
                                  .maxCoeff() <= 1e-6);
        }
    }
}

TEST_CASE("zero weights give the bias") {
    Model m(toy_config(20), HeadKind::regression, Pooling::cls);
    m.head_bias() = 1.75;
    Rng rng(7);
    const auto b = random_batch({3, 8}, 8, 20, rng);
    CHECK((m.predict(b).array() == 1.75).all());

    Model c(toy_config(20), HeadKind::classification, Pooling::cls);
    CHECK((c.predict(b).array() == 0.5).all());
}

TEST_CASE("classification outputs stay inside (0, 1)") {
    Model m(toy_config(20), HeadKind::classification, Pooling::cls);
    m.init_random(8);
    Rng rng(9);
    const auto b = random_batch({8, 8, 3}, 8, 20, rng);
    for (double w : {1.0, 1e3, -1e3}) {
        m.head_weight().setConstant(w);
        const Eigen::VectorXd p = m.predict(b);
        // logistic saturates to 0 or 1 in double only beyond |z| ~ 37 and 745
        for (double v : p) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            CHECK(std::isfinite(v));
        }
    }
    m.head_weight().setConstant(0.01);
    const Eigen::VectorXd p = m.predict(b);
    CHECK((p.array() > 0.0).all());
    CHECK((p.array() < 1.0).all());
    CHECK(logistic(-800.0) >= 0.0);
    CHECK(logistic(30.0) < 1.0);
    CHECK(logistic(-30.0) > 0.0);
}

TEST_CASE("seeded initialization is reproducible") {
    Model a(toy_config(25), HeadKind::regression, Pooling::cls);
    Model b(toy_config(25), HeadKind::regression, Pooling::cls);
    a.init_random(11);
    b.init_random(11);
    CHECK(a.parameters() == b.parameters());
    Rng rng(12);
    const auto batch = random_batch({6, 2}, 6, 25, rng);
    CHECK((a.predict(batch) - b.predict(batch)).cwiseAbs().maxCoeff() <= 1e-6);
    b.init_random(12);
    CHECK(a.parameters() != b.parameters());
}

TEST_CASE("analytic gradients match central differences") {
    for (auto pooling : {Pooling::cls, Pooling::mean}) {
        Model m(toy_config(20), HeadKind::regression, pooling);
        m.init_random(13);
        m.init_head(14);
        m.head_weight() *= 25.0; // gradients into the encoder of comparable size
        Rng rng(15);
        const auto b = random_batch({8, 5, 8}, 8, 20, rng);
        Eigen::VectorXd d_z(3);
        d_z << 0.7, -1.3, 0.4;

        std::vector<Model::SequenceCache> caches;
        m.forward(b, Model::Mode::train, nullptr, &caches);
        const Eigen::VectorXd g = m.backward(b, caches, d_z);

        const double h = 1e-4;
        Model probe = m;
        double worst = 0;
        std::size_t checked = 0;
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            const double x = probe.parameters()(i);
            probe.parameters()(i) = x + h;
            const double up = directional(probe, b, d_z);
            probe.parameters()(i) = x - h;
            const double down = directional(probe, b, d_z);
            probe.parameters()(i) = x;
            const double num = (up - down) / (2 * h);
            const double denom = std::max({std::abs(num), std::abs(g(i)), 1e-6});
            worst = std::max(worst, std::abs(num - g(i)) / denom);
            ++checked;
        }
        CHECK(checked == static_cast<std::size_t>(m.size()));
        CHECK_MESSAGE(worst < 1e-3, "worst relative error " << worst);
    }
}

TEST_CASE("gradients ignore padded token rows") {
    Model m(toy_config(20), HeadKind::regression, Pooling::mean);
    m.init_random(16);
    Rng rng(17);
    auto b = random_batch({3}, 6, 19, rng); // ids 1..18
    b.ids(0, 4) = 19; // padded id that appears nowhere else
    std::vector<Model::SequenceCache> caches;
    m.forward(b, Model::Mode::train, nullptr, &caches);
    const Eigen::VectorXd g = m.backward(b, caches, Eigen::VectorXd::Ones(1));
    const Eigen::Map<const Eigen::MatrixXd> d_tok(g.data() + m.layout().tok_emb, 20, 16);
    const Eigen::Map<const Eigen::MatrixXd> d_pos(g.data() + m.layout().pos_emb, 1024, 16);
    CHECK(d_tok.row(19).isZero());
    CHECK(d_pos.row(4).isZero());
    CHECK_FALSE(d_pos.row(0).isZero());
}

TEST_CASE("dropout is train-only and seeded") {
    auto cfg = toy_config(20);
    cfg.dropout = 0.2;
    Model m(cfg, HeadKind::regression, Pooling::cls);
    m.init_random(18);
    Rng rng(19);
    const auto b = random_batch({8, 8}, 8, 20, rng);
    CHECK(m.predict(b) == m.predict(b));
    Rng d1(5), d2(5);
    const Eigen::VectorXd t1 = m.forward(b, Model::Mode::train, &d1, nullptr);
    const Eigen::VectorXd t2 = m.forward(b, Model::Mode::train, &d2, nullptr);
    CHECK(t1 == t2);
    CHECK(t1 != m.predict(b));
    CHECK_THROWS_AS(m.forward(b, Model::Mode::train, nullptr, nullptr), ConfigError);
}

TEST_CASE("encoder-only parameter budget") {
    EncoderConfig small; // same widths as a small public encoder-decoder
    small.vocab_size = 32128;
    small.hidden_size = 512;
    small.num_layers = 6;
    small.num_heads = 8;
    small.ffn_size = 2048;
    small.max_positions = 512;
    CHECK(static_cast<double>(parameter_count(small)) < 0.6 * static_cast<double>(seq2seq_parameter_count(small)));

    const auto toy = toy_config(500, 64);
    CHECK(parameter_count(toy) < seq2seq_parameter_count(toy));
    CHECK(static_cast<double>(parameter_count(toy)) < 0.6 * static_cast<double>(seq2seq_parameter_count(toy)));
    Model m(toy, HeadKind::regression, Pooling::cls);
    CHECK(static_cast<std::size_t>(m.size()) == parameter_count(toy));
    CHECK(static_cast<std::size_t>(m.encoder_size()) == parameter_count(toy, false));
}

TEST_CASE("batch checks") {
    Model m(toy_config(10), HeadKind::regression, Pooling::cls);
    Batch b;
    b.ids.setConstant(1, 4, 3);
    b.mask.setOnes(1, 4);
    CHECK_NOTHROW(m.predict(b));
    b.ids(0, 2) = 10;
    CHECK_THROWS_AS(m.predict(b), DataError);
    b.ids(0, 2) = -1;
    CHECK_THROWS_AS(m.predict(b), DataError);
    b.ids(0, 2) = 0;
    b.mask.setOnes(1, 3);
    CHECK_THROWS_AS(m.predict(b), DataError);
    Batch longb;
    longb.ids.setZero(1, 1025);
    longb.mask.setOnes(1, 1025);
    CHECK_THROWS_AS(m.predict(longb), DataError);
}
