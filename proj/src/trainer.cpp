// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "llmprop/trainer.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace llmprop {

namespace fs = std::filesystem;

double onecycle_lr(std::size_t step, std::size_t total_steps, double lr_max, double pct_warmup,
                   double final_fraction) {
    if (!(pct_warmup > 0 && pct_warmup < 1)) throw ConfigError("onecycle pct_warmup must lie in (0, 1)");
    if (step > total_steps)
        throw ConfigError("onecycle step " + std::to_string(step) + " beyond total " + std::to_string(total_steps));
    const double lo = lr_max * final_fraction;
    if (total_steps == 0) return lr_max;
    const double s = static_cast<double>(step);
    const double peak = pct_warmup * static_cast<double>(total_steps);
    if (step == 0) return lo;
    if (s == peak) return lr_max;
    if (s < peak) return std::min(lr_max, lo + (lr_max - lo) * (s / peak));
    const double progress = (s - peak) / (static_cast<double>(total_steps) - peak);
    return std::min(lr_max, lo + (lr_max - lo) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state, double lr,
               const AdamParams& hp) {
    if (grad.size() != params.size()) throw NumericError("adam_step: gradient size differs from parameters");
    if (state.m.size() != params.size()) {
        state.m.setZero(params.size());
        state.v.setZero(params.size());
        state.t = 0;
    }
    ++state.t;
    state.m = hp.beta1 * state.m + (1 - hp.beta1) * grad;
    state.v = hp.beta2 * state.v + (1 - hp.beta2) * grad.cwiseAbs2();
    const double c1 = 1 - std::pow(hp.beta1, static_cast<double>(state.t));
    const double c2 = 1 - std::pow(hp.beta2, static_cast<double>(state.t));
    params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + hp.eps);
}

void TrainConfig::validate() const {
    if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
    if (!(lr_max > 0) || !std::isfinite(lr_max)) throw ConfigError("train.lr_max must be a positive number");
    if (max_length == 0) throw ConfigError("train.max_length must be positive");
    if (!(onecycle.pct_warmup > 0 && onecycle.pct_warmup < 1))
        throw ConfigError("train.onecycle.pct_warmup must lie in (0, 1)");
    if (!(onecycle.final_fraction >= 0 && onecycle.final_fraction <= 1))
        throw ConfigError("train.onecycle.final_fraction must lie in [0, 1]");
    if (!(clip_grad_norm >= 0)) throw ConfigError("train.clip_grad_norm must be >= 0");
    if (!(adam.beta1 >= 0 && adam.beta1 < 1) || !(adam.beta2 >= 0 && adam.beta2 < 1) || !(adam.eps > 0))
        throw ConfigError("invalid Adam hyperparameters");
}

PreparedExamples prepare_examples(const std::vector<CrystalRecord>& records, Task task,
                                  const PreprocessConfig& preprocess, const TokenizerBundle& tokenizer,
                                  std::size_t max_length) {
    PreparedExamples out;
    out.examples.reserve(records.size());
    for (const auto& r : records) {
        const auto y = r.label(task);
        if (!y) {
            ++out.skipped;
            continue;
        }
        const auto text = llmprop::preprocess(r.description, preprocess);
        out.examples.push_back({encode(tokenizer, text.text, max_length), *y});
    }
    return out;
}

Batch make_batch(const std::vector<Example>& examples, const std::vector<std::size_t>& index, TokenId pad_id) {
    std::vector<TokenizedExample> rows;
    rows.reserve(index.size());
    std::size_t longest = 0;
    for (auto i : index) {
        rows.push_back(examples.at(i).tokens);
        longest = std::max(longest, rows.back().ids.size());
    }
    return pad_batch(rows, longest, pad_id);
}

Eigen::VectorXd predict_examples(const Model& model, const LabelScaler& scaler, const std::vector<Example>& examples,
                                 std::size_t batch_size) {
    if (batch_size == 0) batch_size = 1;
    Eigen::VectorXd out(static_cast<Eigen::Index>(examples.size()));
    std::vector<std::size_t> index;
    for (std::size_t start = 0; start < examples.size(); start += batch_size) {
        const std::size_t end = std::min(examples.size(), start + batch_size);
        index.resize(end - start);
        std::iota(index.begin(), index.end(), start);
        const Eigen::VectorXd p = model.predict(make_batch(examples, index, 0));
        for (std::size_t i = start; i < end; ++i) {
            const double v = p(static_cast<Eigen::Index>(i - start));
            out(static_cast<Eigen::Index>(i)) = model.head_kind() == HeadKind::regression ? scaler.inverse(v) : v;
        }
    }
    return out;
}

namespace {

Eigen::VectorXd labels_of(const std::vector<Example>& examples) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(examples.size()));
    for (std::size_t i = 0; i < examples.size(); ++i) y(static_cast<Eigen::Index>(i)) = examples[i].label;
    return y;
}

double metric_from(Task task, const Eigen::VectorXd& pred, const Eigen::VectorXd& labels) {
    return is_regression(task) ? mae(pred, labels) : roc_auc(pred, labels);
}

void append_history(const std::string& path, const EpochRecord& r) {
    nlohmann::json line = {{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_metric", r.val_metric}, {"lr", r.lr}};
    std::ofstream out(path, std::ios::app);
    if (!out) throw IoError("cannot append to '" + path + "'");
    out << line.dump() << '\n';
}

} // namespace

double metric_on(const Model& model, const LabelScaler& scaler, Task task, const std::vector<Example>& examples) {
    if (examples.empty()) throw DataError("no labelled examples to score");
    return metric_from(task, predict_examples(model, scaler, examples), labels_of(examples));
}

TrainResult train(const DatasetSplit& split, const TrainConfig& config, const TrainSetup& setup) {
    config.validate();
    setup.preprocess.validate();
    const Task task = config.task;
    const TokenId pad = setup.tokenizer.special().pad;

    const auto train_set = prepare_examples(split.train, task, setup.preprocess, setup.tokenizer, config.max_length);
    const auto val_set = prepare_examples(split.validation, task, setup.preprocess, setup.tokenizer, config.max_length);
    const auto& train_ex = train_set.examples;
    const auto& val_ex = val_set.examples;
    if (train_ex.empty()) throw DataError("training split has no records labelled for " + std::string(to_string(task)));
    if (val_ex.empty()) throw DataError("validation split has no records labelled for " + std::string(to_string(task)));

    const Eigen::VectorXd y_train = labels_of(train_ex);
    const LabelScaler scaler =
        LabelScaler::fit(y_train, is_regression(task) ? config.scaler : ScalerMethod::identity);
    const Eigen::VectorXd targets = scaler.transform(y_train).matrix();

    const Pooling pooling = setup.preprocess.prepend_cls ? Pooling::cls : Pooling::mean;
    Model model;
    if (setup.initial) {
        model = *setup.initial;
        if (model.config().vocab_size != setup.tokenizer.size())
            throw ConfigError("initial model vocabulary differs from the tokenizer");
        if (model.head_kind() != head_kind_for(task))
            throw ConfigError("initial model head does not fit task " + std::string(to_string(task)));
        model.set_pooling(pooling);
    } else {
        EncoderConfig enc = setup.encoder;
        enc.vocab_size = setup.tokenizer.size();
        model = Model(enc, head_kind_for(task), pooling);
        model.init_random(setup.init_seed);
    }
    if (config.max_length > model.config().max_positions)
        throw ConfigError("max_length " + std::to_string(config.max_length) + " exceeds encoder max_positions " +
                          std::to_string(model.config().max_positions));

    auto snapshot = [&](std::size_t epoch, std::size_t step, double val) {
        Checkpoint c = make_checkpoint(model, task, scaler, setup.tokenizer, setup.preprocess, config.max_length);
        c.epoch = epoch;
        c.step = step;
        c.val_metric = val;
        c.head_init = setup.head_init;
        return c;
    };

    const std::string ckpt_dir = config.run_dir.empty() ? std::string() : (fs::path(config.run_dir) / "checkpoints").string();
    const std::string history_path = config.run_dir.empty() ? std::string() : (fs::path(config.run_dir) / "history").string();
    if (!config.run_dir.empty()) {
        std::error_code ec;
        fs::create_directories(ckpt_dir, ec);
        if (ec) throw IoError("cannot create " + ckpt_dir + ": " + ec.message());
        write_file(history_path, "");
    }

    TrainResult result;
    TrainState& state = result.state;
    state.initial_val_metric = metric_on(model, scaler, task, val_ex);
    state.best_val_metric = state.initial_val_metric;
    result.best = snapshot(0, 0, state.initial_val_metric);
    result.last = result.best;

    const std::size_t n = train_ex.size();
    const std::size_t per_epoch = (n + config.batch_size - 1) / config.batch_size;
    const std::size_t total_updates = per_epoch * config.epochs;
    const std::size_t schedule_span = total_updates > 0 ? total_updates - 1 : 0;

    AdamState adam;
    std::vector<std::size_t> order(n), index;
    std::vector<Model::SequenceCache> caches;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle_rng(derive_seed(config.seed, epoch));
        shuffle(order, shuffle_rng);
        Rng dropout_rng(derive_seed(derive_seed(config.seed, 0xd409), epoch));

        double loss_sum = 0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t end = std::min(n, start + config.batch_size);
            index.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
            const Batch batch = make_batch(train_ex, index, pad);
            const Eigen::Index B = batch.rows();
            Eigen::VectorXd t(B);
            for (Eigen::Index b = 0; b < B; ++b) t(b) = targets(static_cast<Eigen::Index>(index[static_cast<std::size_t>(b)]));

            const Eigen::VectorXd z = model.forward(batch, Model::Mode::train, &dropout_rng, &caches);
            double loss;
            Eigen::VectorXd d_z(B);
            if (is_regression(task)) {
                loss = mae_loss(z, t);
                for (Eigen::Index b = 0; b < B; ++b) {
                    const double r = z(b) - t(b);
                    d_z(b) = (r > 0 ? 1.0 : r < 0 ? -1.0 : 0.0) / static_cast<double>(B);
                }
            } else {
                loss = bce_with_logits(z, t);
                for (Eigen::Index b = 0; b < B; ++b) d_z(b) = (logistic(z(b)) - t(b)) / static_cast<double>(B);
            }
            if (!std::isfinite(loss))
                throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", step " +
                                   std::to_string(state.step));

            Eigen::VectorXd grad = model.backward(batch, caches, d_z);
            const double norm = grad.norm();
            if (!std::isfinite(norm))
                throw NumericError("non-finite gradient at epoch " + std::to_string(epoch) + ", step " +
                                   std::to_string(state.step));
            if (config.clip_grad_norm > 0 && norm > config.clip_grad_norm) grad *= config.clip_grad_norm / norm;

            state.current_lr = onecycle_lr(state.step, schedule_span, config.lr_max, config.onecycle.pct_warmup,
                                           config.onecycle.final_fraction);
            adam_step(model.parameters(), grad, adam, state.current_lr, config.adam);
            ++state.step;
            loss_sum += loss * static_cast<double>(B);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(n);
        rec.val_metric = metric_on(model, scaler, task, val_ex);
        rec.lr = state.current_lr;
        if (!std::isfinite(rec.val_metric))
            throw NumericError("non-finite validation metric at epoch " + std::to_string(epoch));
        state.history.push_back(rec);
        state.epoch = epoch;

        result.last = snapshot(epoch, state.step, rec.val_metric);
        result.last.optimizer = OptimizerSnapshot{adam.m, adam.v, adam.t};
        const bool improved = epoch == 1 || metric_improves(task, rec.val_metric, state.best_val_metric);
        if (improved) {
            state.best_val_metric = rec.val_metric;
            state.best_epoch = epoch;
            result.best = result.last;
            result.best.optimizer.reset();
        }
        if (!config.run_dir.empty()) {
            append_history(history_path, rec);
            result.last.save((fs::path(ckpt_dir) / "last").string());
            if (improved) result.best.save((fs::path(ckpt_dir) / "best").string());
            if (config.retention == CheckpointRetention::every_epoch)
                result.last.save((fs::path(ckpt_dir) / ("epoch-" + std::to_string(epoch))).string());
        }
    }
    if (!config.run_dir.empty() && config.epochs == 0) {
        result.best.save((fs::path(ckpt_dir) / "best").string());
        result.last.save((fs::path(ckpt_dir) / "last").string());
    }
    return result;
}

namespace {

MetricsReport score(const Checkpoint& checkpoint, const Model& model, const LabelScaler& scaler,
                    const std::vector<CrystalRecord>& records, Task task) {
    const auto prepared =
        prepare_examples(records, task, checkpoint.preprocess, checkpoint.tokenizer, checkpoint.max_length);
    if (prepared.examples.empty())
        throw DataError("no records carry a " + std::string(to_string(task)) + " label");
    const Eigen::VectorXd pred = predict_examples(model, scaler, prepared.examples);
    MetricsReport r;
    r.task = task;
    r.metric = is_regression(task) ? MetricName::mae : MetricName::auc;
    r.value = metric_from(task, pred, labels_of(prepared.examples));
    r.n = prepared.examples.size();
    r.skipped = prepared.skipped;
    r.mean_prediction = pred.mean();
    r.units = std::string(task_units(task));
    r.checkpoint_hash = checkpoint.hash();
    return r;
}

} // namespace

MetricsReport evaluate(const Checkpoint& checkpoint, const std::vector<CrystalRecord>& records, Task task) {
    if (checkpoint.task != task)
        throw ConfigError("checkpoint was trained for " + std::string(to_string(checkpoint.task)) +
                          ", not " + std::string(to_string(task)));
    return score(checkpoint, checkpoint.model(), checkpoint.scaler, records, task);
}

MetricsReport zero_shot(const Checkpoint& checkpoint, const std::vector<CrystalRecord>& records, Task task,
                        const std::vector<double>& reference_labels, std::uint64_t head_seed) {
    Model model = checkpoint.model();
    std::string head = "checkpoint";
    if (model.head_kind() != head_kind_for(task)) {
        model.set_head_kind(head_kind_for(task));
        model.init_head(head_seed);
        head = "random";
    }
    LabelScaler scaler;
    std::string scaler_note;
    if (!is_regression(task)) {
        scaler = LabelScaler::fit(Eigen::VectorXd::Zero(1), ScalerMethod::identity);
        scaler_note = "identity";
    } else if (checkpoint.task == task) {
        scaler = checkpoint.scaler;
        scaler_note = "checkpoint";
    } else if (reference_labels.size() >= 2) {
        scaler = LabelScaler::fit(
            Eigen::Map<const Eigen::VectorXd>(reference_labels.data(), static_cast<Eigen::Index>(reference_labels.size())),
            ScalerMethod::z_score);
        scaler_note = "z_score(reference)";
    } else {
        scaler = LabelScaler::fit(Eigen::VectorXd::Zero(1), ScalerMethod::identity);
        scaler_note = "identity";
    }
    MetricsReport r = score(checkpoint, model, scaler, records, task);
    r.notes.emplace_back("zero_shot.head", head);
    r.notes.emplace_back("zero_shot.scaler", scaler_note);
    r.notes.emplace_back("zero_shot.source_task", std::string(to_string(checkpoint.task)));
    r.notes.emplace_back("zero_shot.source_step", std::to_string(checkpoint.step));
    return r;
}

TrainResult transfer_train(const Checkpoint& source, const DatasetSplit& split, const TrainConfig& config,
                           const std::optional<EncoderConfig>& expected_encoder) {
    if (expected_encoder) {
        EncoderConfig want = *expected_encoder;
        want.vocab_size = source.encoder.vocab_size;
        want.ffn_size = want.ffn();
        want.dropout = source.encoder.dropout;
        if (!(want == source.encoder))
            throw ConfigError("source checkpoint encoder shape differs from the configured encoder");
    }
    TrainSetup setup;
    setup.preprocess = source.preprocess;
    setup.tokenizer = source.tokenizer;
    setup.encoder = source.encoder;
    Model model = source.model();
    if (source.task == config.task) {
        setup.head_init = "copied from " + std::string(to_string(source.task)) + " checkpoint";
    } else {
        model.set_head_kind(head_kind_for(config.task));
        model.init_head(derive_seed(config.seed, 0x4ead));
        setup.head_init = "uniform(-0.02,0.02),bias=0 (reinitialized for transfer)";
    }
    setup.initial = std::move(model);
    return train(split, config, setup);
}

Model adapt_encoder(const Checkpoint& source, const TokenizerBundle& target, std::uint64_t seed) {
    const Model src = source.model();
    EncoderConfig cfg = source.encoder;
    cfg.vocab_size = target.size();
    Model dst(cfg, src.head_kind(), src.pooling());
    dst.init_random(seed);

    const auto h = static_cast<Eigen::Index>(cfg.hidden_size);
    const auto src_tok = src.tensor(src.layout().tok_emb, static_cast<Eigen::Index>(source.encoder.vocab_size), h);
    auto dst_tok = dst.tensor(dst.layout().tok_emb, static_cast<Eigen::Index>(cfg.vocab_size), h);
    for (std::size_t i = 0; i < target.size(); ++i) {
        const auto& tok = target.tokens()[i];
        if (source.tokenizer.contains(tok))
            dst_tok.row(static_cast<Eigen::Index>(i)) = src_tok.row(source.tokenizer.id_of(tok));
    }
    const Eigen::Index src_rest = src.size() - src.layout().pos_emb;
    dst.parameters().tail(src_rest) = src.parameters().tail(src_rest);
    return dst;
}

} // namespace llmprop
