// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace llmprop;
namespace fs = std::filesystem;

namespace {

double bce_oracle(const Eigen::VectorXd& p, const Eigen::VectorXd& t) {
    long double s = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const long double pi = p(i), ti = t(i);
        s += ti * std::log(pi) + (1 - ti) * std::log(1 - pi);
    }
    return static_cast<double>(-s / p.size());
}

Checkpoint source_checkpoint(testing::ToyRun& run) {
    return train(run.split, run.config, run.setup).best;
}

} // namespace

TEST_CASE("mae loss") {
    Eigen::VectorXd p(2), t(2);
    p << 0, 2;
    t << 1, 1;
    CHECK(mae_loss(p, t) == 1.0);
    CHECK(mae_loss(p, p) == 0.0);
    CHECK_THROWS_AS(mae_loss(Eigen::VectorXd(), Eigen::VectorXd()), NumericError);
    Rng rng(1);
    for (int k = 0; k < 20; ++k) {
        const auto a = oracle::random_vector(100, rng, -3, 3);
        const auto b = oracle::random_vector(100, rng, -3, 3);
        CHECK(std::abs(mae_loss(a, b) - oracle::mae_kahan(a, b)) <= 1e-12);
    }
}

TEST_CASE("bce loss") {
    const Eigen::VectorXd half = Eigen::VectorXd::Constant(4, 0.5);
    Eigen::VectorXd t(4);
    t << 1, 0, 0, 1;
    CHECK(bce_loss(half, t) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(bce_with_logits(Eigen::VectorXd::Zero(4), t) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    Eigen::VectorXd near(4);
    near << 1 - 1e-9, 1e-9, 1e-9, 1 - 1e-9;
    CHECK(bce_loss(near, t) <= 1e-8 + 1e-15);
    CHECK_THROWS_AS(bce_loss(Eigen::VectorXd(), Eigen::VectorXd()), NumericError);
    CHECK_THROWS_AS(bce_with_logits(Eigen::VectorXd(), Eigen::VectorXd()), NumericError);

    Rng rng(2);
    for (int k = 0; k < 20; ++k) {
        const auto z = oracle::random_vector(50, rng, -6, 6);
        Eigen::VectorXd y(50), p(50);
        for (Eigen::Index i = 0; i < 50; ++i) {
            y(i) = static_cast<double>(uniform_index(rng, 2));
            p(i) = logistic(z(i));
        }
        CHECK(std::abs(bce_loss(p, y) - bce_oracle(p, y)) <= 1e-10);
        CHECK(std::abs(bce_with_logits(z, y) - bce_oracle(p, y)) <= 1e-10);
    }
}

TEST_CASE("onecycle examples") {
    const double lr = 1e-3, pct = 0.3, ff = 0.04;
    CHECK(onecycle_lr(0, 1000, lr, pct, ff) == lr * ff);
    CHECK(onecycle_lr(300, 1000, lr, pct, ff) == lr);
    const double mid = (pct + (1 - pct) / 2) * 1000;
    CHECK(onecycle_lr(650, 1000, lr, pct, ff) == doctest::Approx(oracle::onecycle(mid, 1000, lr, pct, ff)).epsilon(1e-12));
    CHECK(onecycle_lr(650, 1000, lr, pct, ff) == doctest::Approx(lr * ff + (lr - lr * ff) / 2).epsilon(1e-12));
    CHECK(onecycle_lr(1000, 1000, lr, pct, ff) <= lr * ff + 1e-12);
    CHECK_THROWS_AS(onecycle_lr(1001, 1000, lr, pct, ff), ConfigError);
    CHECK_THROWS_AS(onecycle_lr(0, 1000, lr, 0.0, ff), ConfigError);
    CHECK_THROWS_AS(onecycle_lr(0, 1000, lr, 1.0, ff), ConfigError);
}

TEST_CASE("property: onecycle shape") {
    Rng rng(3);
    for (int k = 0; k < 200; ++k) {
        const std::size_t total = 1 + uniform_index(rng, 2000);
        const double lr = uniform_real(rng, 1e-5, 1e-1);
        const double pct = uniform_real(rng, 0.05, 0.95);
        const double ff = uniform_real(rng, 0.0, 0.5);
        double prev = -1;
        const auto peak = static_cast<std::size_t>(pct * static_cast<double>(total));
        for (std::size_t s = 0; s <= total; ++s) {
            const double v = onecycle_lr(s, total, lr, pct, ff);
            CHECK_MESSAGE(v <= lr, "step " << s << " of " << total);
            CHECK(v >= lr * ff - 1e-15);
            CHECK(std::abs(v - oracle::onecycle(static_cast<double>(s), static_cast<double>(total), lr, pct, ff)) <= 1e-12 * lr + 1e-18);
            if (s <= peak && s > 0) CHECK(v >= prev);
            prev = v;
        }
        CHECK(onecycle_lr(total, total, lr, pct, ff) <= lr * ff + 1e-12);
    }
}

TEST_CASE("adam reduces the loss on a repeated batch") {
    auto run = testing::toy_run(40, Task::band_gap, 4);
    auto cfg = run.setup.encoder;
    cfg.vocab_size = run.setup.tokenizer.size();
    Model m(cfg, HeadKind::regression, Pooling::cls);
    m.init_random(5);
    const auto prepared = prepare_examples(run.split.train, Task::band_gap, run.setup.preprocess, run.setup.tokenizer, 128);
    std::vector<std::size_t> idx = {0, 1, 2, 3, 4, 5, 6, 7};
    const Batch b = make_batch(prepared.examples, idx, run.setup.tokenizer.special().pad);
    Eigen::VectorXd t(8);
    for (Eigen::Index i = 0; i < 8; ++i) t(i) = prepared.examples[static_cast<std::size_t>(i)].label;

    AdamState st;
    std::vector<Model::SequenceCache> caches;
    const double first = mae_loss(m.predict(b), t);
    double loss = first;
    for (int step = 0; step < 50; ++step) {
        const Eigen::VectorXd z = m.forward(b, Model::Mode::train, nullptr, &caches);
        Eigen::VectorXd d(8);
        for (Eigen::Index i = 0; i < 8; ++i) d(i) = (z(i) > t(i) ? 1.0 : -1.0) / 8.0;
        adam_step(m.parameters(), m.backward(b, caches, d), st, 1e-3);
        loss = mae_loss(m.predict(b), t);
    }
    CHECK(st.t == 50);
    CHECK(loss < first);
}

TEST_CASE("zero-epoch run returns the initialized model") {
    auto run = testing::toy_run(30, Task::band_gap, 6);
    run.config.epochs = 0;
    const auto r = train(run.split, run.config, run.setup);
    CHECK(r.state.history.empty());
    CHECK(r.state.step == 0);
    CHECK(r.best.epoch == 0);
    auto cfg = run.setup.encoder;
    cfg.vocab_size = run.setup.tokenizer.size();
    Model fresh(cfg, HeadKind::regression, Pooling::cls);
    fresh.init_random(run.setup.init_seed);
    CHECK(r.best.weights == fresh.parameters());
    CHECK(r.best.val_metric == r.state.initial_val_metric);
}

TEST_CASE("training is reproducible and best equals the history extremum") {
    for (Task task : {Task::band_gap, Task::is_gap_direct}) {
        auto run = testing::toy_run(60, task, 7);
        run.config.epochs = 4;
        const auto a = train(run.split, run.config, run.setup);
        const auto b = train(run.split, run.config, run.setup);
        REQUIRE(a.state.history.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(std::abs(a.state.history[i].train_loss - b.state.history[i].train_loss) <= 1e-6);
            CHECK(std::abs(a.state.history[i].val_metric - b.state.history[i].val_metric) <= 1e-6);
            CHECK(a.state.history[i].lr == b.state.history[i].lr);
        }
        CHECK(a.best.weights == b.best.weights);

        double extremum = a.state.history.front().val_metric;
        std::size_t at = 1;
        for (const auto& h : a.state.history) {
            if (metric_improves(task, h.val_metric, extremum)) {
                extremum = h.val_metric;
                at = h.epoch;
            }
        }
        CHECK(a.best.val_metric == extremum);
        CHECK(a.state.best_val_metric == extremum);
        CHECK(a.best.epoch == at);
        CHECK(a.last.epoch == 4);
        CHECK(a.last.optimizer.has_value());
        CHECK_FALSE(a.best.optimizer.has_value());
    }
}

TEST_CASE("learning rate follows the schedule across the run") {
    auto run = testing::toy_run(40, Task::volume, 8);
    run.config.epochs = 5;
    const auto r = train(run.split, run.config, run.setup);
    const std::size_t per_epoch = (run.split.train.size() + 7) / 8;
    const std::size_t total = per_epoch * 5;
    CHECK(r.state.step == total);
    CHECK(r.state.history.back().lr == onecycle_lr(total - 1, total - 1, 3e-3, 0.3, 0.04));
    CHECK(r.state.history.back().lr <= 3e-3 * 0.04 + 1e-12);
}

TEST_CASE("run directory layout and checkpoint fidelity") {
    testing::ScratchDir dir("trainer_run");
    auto run = testing::toy_run(50, Task::band_gap, 9);
    run.config.epochs = 3;
    run.config.retention = CheckpointRetention::every_epoch;
    run.config.run_dir = dir.str();
    const auto r = train(run.split, run.config, run.setup);

    for (const char* sub : {"best", "last", "epoch-1", "epoch-2", "epoch-3"})
        CHECK(fs::is_directory(fs::path(dir.str()) / "checkpoints" / sub));
    std::istringstream history(read_file(dir.file("history")));
    std::size_t lines = 0;
    for (std::string line; std::getline(history, line); ++lines) {
        const auto j = nlohmann::json::parse(line);
        const auto& rec = r.state.history[lines];
        CHECK(j.at("epoch").get<std::size_t>() == rec.epoch);
        CHECK(j.at("val_metric").get<double>() == rec.val_metric);
        CHECK(j.at("train_loss").get<double>() == rec.train_loss);
        CHECK(j.at("lr").get<double>() == rec.lr);
    }
    CHECK(lines == 3);

    const auto loaded = Checkpoint::load((fs::path(dir.str()) / "checkpoints" / "best").string());
    CHECK(loaded.hash() == r.best.hash());
    CHECK(loaded.weights == r.best.weights);
    const auto m1 = evaluate(r.best, run.split.test, Task::band_gap);
    const auto m2 = evaluate(loaded, run.split.test, Task::band_gap);
    CHECK(m1.value == m2.value);
    CHECK(m1.mean_prediction == m2.mean_prediction);
    CHECK(m1.serialize() == m2.serialize());

    const auto last = Checkpoint::load((fs::path(dir.str()) / "checkpoints" / "last").string());
    REQUIRE(last.optimizer.has_value());
    CHECK(last.optimizer->t == r.last.optimizer->t);
    CHECK(last.optimizer->m == r.last.optimizer->m);
}

TEST_CASE("constant predictor at the train mean") {
    auto run = testing::toy_run(60, Task::volume, 10);
    auto cfg = run.setup.encoder;
    cfg.vocab_size = run.setup.tokenizer.size();
    const Model zero(cfg, HeadKind::regression, Pooling::cls); // every weight 0, bias 0
    Eigen::VectorXd y(static_cast<Eigen::Index>(run.split.train.size()));
    for (std::size_t i = 0; i < run.split.train.size(); ++i) y(static_cast<Eigen::Index>(i)) = *run.split.train[i].volume;
    const auto scaler = LabelScaler::fit(y, ScalerMethod::z_score);
    const auto ckpt = make_checkpoint(zero, Task::volume, scaler, run.setup.tokenizer, run.setup.preprocess, 128);
    const auto report = evaluate(ckpt, run.split.test, Task::volume);

    long double dev = 0;
    for (const auto& r : run.split.test) dev += std::fabs(static_cast<long double>(*r.volume) - y.mean());
    const double expected = static_cast<double>(dev / run.split.test.size());
    CHECK(report.value == doctest::Approx(expected).epsilon(1e-12));
    CHECK(report.mean_prediction == doctest::Approx(y.mean()).epsilon(1e-12));
    CHECK(report.n == run.split.test.size());
    CHECK(report.units == "Å³/cell");
}

TEST_CASE("evaluate errors and skipped records") {
    auto run = testing::toy_run(30, Task::band_gap, 11);
    run.config.epochs = 1;
    const auto ckpt = source_checkpoint(run);
    CHECK_THROWS_AS(evaluate(ckpt, run.split.test, Task::volume), ConfigError);
    auto records = run.split.test;
    records[0].band_gap.reset();
    const auto rep = evaluate(ckpt, records, Task::band_gap);
    CHECK(rep.skipped == 1);
    CHECK(rep.n == records.size() - 1);
    for (auto& r : records) r.band_gap.reset();
    CHECK_THROWS_AS(evaluate(ckpt, records, Task::band_gap), DataError);

    auto empty = run.split;
    for (auto& r : empty.train) r.band_gap.reset();
    CHECK_THROWS_AS(train(empty, run.config, run.setup), DataError);
}

TEST_CASE("zero-shot performs no updates and records its choices") {
    auto run = testing::toy_run(40, Task::volume, 12);
    run.config.epochs = 1;
    const auto ckpt = source_checkpoint(run);
    const auto before = ckpt.hash();
    std::vector<double> ref;
    for (const auto& r : run.split.train) ref.push_back(*r.band_gap);
    const auto rep = zero_shot(ckpt, run.split.test, Task::band_gap, ref);
    CHECK(std::isfinite(rep.value));
    CHECK(ckpt.hash() == before);
    CHECK(rep.checkpoint_hash == before);
    std::map<std::string, std::string> notes(rep.notes.begin(), rep.notes.end());
    CHECK(notes.at("zero_shot.head") == "checkpoint");
    CHECK(notes.at("zero_shot.scaler") == "z_score(reference)");
    CHECK(notes.at("zero_shot.source_task") == "volume");
    CHECK(notes.at("zero_shot.source_step") == std::to_string(ckpt.step));

    const auto cls = zero_shot(ckpt, run.split.test, Task::is_gap_direct, {}, 3);
    std::map<std::string, std::string> cnotes(cls.notes.begin(), cls.notes.end());
    CHECK(cnotes.at("zero_shot.head") == "random");
    CHECK(cls.value >= 0.0);
    CHECK(cls.value <= 1.0);
}

TEST_CASE("transfer to the same task continues from the source") {
    auto run = testing::toy_run(50, Task::band_gap, 13);
    run.config.epochs = 2;
    const auto src = source_checkpoint(run);
    const auto r = transfer_train(src, run.split, run.config);
    CHECK(r.state.initial_val_metric == src.val_metric);
    CHECK(r.state.history.size() == 2);
}

TEST_CASE("transfer across tasks re-initializes the head") {
    auto run = testing::toy_run(50, Task::band_gap, 14);
    run.config.epochs = 1;
    const auto src = source_checkpoint(run);
    auto cfg = run.config;
    cfg.task = Task::volume;
    cfg.epochs = 2;
    const auto r = transfer_train(src, run.split, cfg);
    CHECK(r.best.task == Task::volume);
    CHECK(r.state.history.size() == 2);
    CHECK(r.best.head_init.find("reinitialized") != std::string::npos);
    CHECK(r.best.scaler.fitted_on() == run.split.train.size());
    for (const auto& h : r.state.history) CHECK(std::isfinite(h.val_metric));

    auto wrong = testing::toy_encoder(32);
    CHECK_THROWS_AS(transfer_train(src, run.split, cfg, wrong), ConfigError);
    CHECK_NOTHROW(transfer_train(src, run.split, cfg, testing::toy_encoder()));
}

TEST_CASE("adapting an encoder to a new vocabulary keeps shared rows") {
    auto run = testing::toy_run(30, Task::band_gap, 15);
    run.config.epochs = 0;
    const auto src = source_checkpoint(run);
    auto target = TokenizerBundle::from_tokens({"zzz", run.setup.tokenizer.tokens()[7]});
    const Model m = adapt_encoder(src, target, 1);
    const Model s = src.model();
    const auto h = static_cast<Eigen::Index>(src.encoder.hidden_size);
    const auto shared = target.id_of(run.setup.tokenizer.tokens()[7]);
    const auto v_src = static_cast<Eigen::Index>(src.encoder.vocab_size);
    const auto v_dst = static_cast<Eigen::Index>(target.size());
    CHECK(m.tensor(m.layout().tok_emb, v_dst, h).row(shared) == s.tensor(s.layout().tok_emb, v_src, h).row(7));
    CHECK(m.parameters().tail(m.size() - m.layout().pos_emb) == s.parameters().tail(s.size() - s.layout().pos_emb));
    CHECK(static_cast<std::size_t>(m.config().vocab_size) == target.size());
}
