// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "llmprop/checkpoint.hpp"
#include "llmprop/corpus.hpp"
#include "llmprop/labelscale.hpp"
#include "llmprop/metrics.hpp"
#include "llmprop/model.hpp"
#include "llmprop/textprep.hpp"
#include "llmprop/tokenizer.hpp"

namespace llmprop {

// ---------------------------------------------------------------- losses

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar mae_loss(const Eigen::DenseBase<DerivedA>& pred, const Eigen::DenseBase<DerivedB>& target) {
    if (pred.size() == 0) throw NumericError("mae_loss on an empty batch");
    return mae(pred, target);
}

/// -mean[t log p + (1 - t) log(1 - p)] over probabilities.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar bce_loss(const Eigen::DenseBase<DerivedA>& prob, const Eigen::DenseBase<DerivedB>& target) {
    using Scalar = typename DerivedA::Scalar;
    if (prob.size() == 0) throw NumericError("bce_loss on an empty batch");
    if (prob.size() != target.size()) throw NumericError("bce_loss: length mismatch");
    const auto p = prob.derived().array();
    const auto t = target.derived().array().template cast<Scalar>();
    return -(t * p.log() + (Scalar(1) - t) * (Scalar(1) - p).log()).mean();
}

/// The same loss from logits z, p = logistic(z): mean[softplus(z) - t z].
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar bce_with_logits(const Eigen::DenseBase<DerivedA>& z, const Eigen::DenseBase<DerivedB>& target) {
    using Scalar = typename DerivedA::Scalar;
    if (z.size() == 0) throw NumericError("bce_loss on an empty batch");
    const auto zz = z.derived().array();
    const auto t = target.derived().array().template cast<Scalar>();
    const auto softplus = zz.max(Scalar(0)) + (-zz.abs()).exp().log1p();
    return (softplus - t * zz).mean();
}

// ---------------------------------------------------------------- schedule

struct OneCycle {
    double pct_warmup = 0.3;
    double final_fraction = 0.04;
};

/// Linear ramp lr_max*final_fraction -> lr_max over the first pct_warmup of the
/// steps, then cosine anneal back to lr_max*final_fraction at total_steps.
double onecycle_lr(std::size_t step, std::size_t total_steps, double lr_max, double pct_warmup,
                   double final_fraction);

// ---------------------------------------------------------------- optimizer

struct AdamState {
    Eigen::VectorXd m, v;
    std::int64_t t = 0;
};

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state, double lr,
               const AdamParams& hp = {});

// ---------------------------------------------------------------- training

enum class CheckpointRetention { best_last, every_epoch };

struct TrainConfig {
    Task task = Task::band_gap;
    std::size_t batch_size = 64;
    double lr_max = 1e-3;
    std::size_t epochs = 200;
    std::size_t max_length = kDefaultMaxLength;
    ScalerMethod scaler = ScalerMethod::z_score;
    std::uint64_t seed = 0;
    OneCycle onecycle;
    AdamParams adam;
    double clip_grad_norm = 0; // 0 disables clipping
    CheckpointRetention retention = CheckpointRetention::best_last;
    std::string run_dir;       // empty: keep checkpoints in memory only

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0;
    double val_metric = 0;
    double lr = 0;
};

struct TrainState {
    std::size_t epoch = 0;
    std::size_t step = 0;
    double current_lr = 0;
    double initial_val_metric = 0;
    double best_val_metric = 0;
    std::size_t best_epoch = 0;
    std::vector<EpochRecord> history;
};

struct TrainResult {
    Checkpoint best;
    Checkpoint last;
    TrainState state;
};

// Everything a run needs besides the data: text processing, vocabulary and the
// starting weights.
struct TrainSetup {
    PreprocessConfig preprocess;
    TokenizerBundle tokenizer;
    EncoderConfig encoder;
    std::optional<Model> initial; // transfer or pretrained start; otherwise seeded random init
    std::uint64_t init_seed = 0;
    std::string head_init = "uniform(-0.02,0.02),bias=0";
};

// One tokenized record with its task label.
struct Example {
    TokenizedExample tokens;
    double label = 0; // original units, or 0/1
};

struct PreparedExamples {
    std::vector<Example> examples;
    std::size_t skipped = 0; // records without the task's label
};

PreparedExamples prepare_examples(const std::vector<CrystalRecord>& records, Task task,
                                  const PreprocessConfig& preprocess, const TokenizerBundle& tokenizer,
                                  std::size_t max_length);

/// Batches of padded examples (padding to the longest member).
Batch make_batch(const std::vector<Example>& examples, const std::vector<std::size_t>& index, TokenId pad_id);

/// Predictions in original units (regression) or probabilities (classification).
Eigen::VectorXd predict_examples(const Model& model, const LabelScaler& scaler, const std::vector<Example>& examples,
                                 std::size_t batch_size = 64);

/// Denormalized MAE or ROC-AUC of a model over prepared examples.
double metric_on(const Model& model, const LabelScaler& scaler, Task task, const std::vector<Example>& examples);

inline bool metric_improves(Task task, double candidate, double incumbent) {
    return is_regression(task) ? candidate < incumbent : candidate > incumbent;
}

TrainResult train(const DatasetSplit& split, const TrainConfig& config, const TrainSetup& setup);

MetricsReport evaluate(const Checkpoint& checkpoint, const std::vector<CrystalRecord>& records, Task task);

/// Evaluation with no gradient updates. When the checkpoint's head does not
/// fit the task kind, a seeded random head is used; regression labels are
/// scaled with the checkpoint's scaler when tasks match, else with a z-score
/// fit on reference_labels (identity when none are given).
MetricsReport zero_shot(const Checkpoint& checkpoint, const std::vector<CrystalRecord>& records, Task task,
                        const std::vector<double>& reference_labels = {}, std::uint64_t head_seed = 0);

/// Continues from a source checkpoint: encoder (and head when the task is the
/// same) are copied, the scaler is refit on the target train labels.
TrainResult transfer_train(const Checkpoint& source, const DatasetSplit& split, const TrainConfig& config,
                           const std::optional<EncoderConfig>& expected_encoder = std::nullopt);

/// Builds a model for `target` vocabulary from a checkpoint's encoder; token
/// embeddings are matched by token string, unmatched rows get fresh values.
Model adapt_encoder(const Checkpoint& source, const TokenizerBundle& target, std::uint64_t seed);

} // namespace llmprop
