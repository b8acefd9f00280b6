// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "llmprop/labelscale.hpp"
#include "llmprop/model.hpp"
#include "llmprop/textprep.hpp"
#include "llmprop/tokenizer.hpp"

namespace llmprop {

// Optimizer moments saved with `last` so a run can be inspected or continued.
struct OptimizerSnapshot {
    Eigen::VectorXd m, v;
    std::int64_t t = 0;
};

// Everything needed to rebuild a predictor: weights, architecture, the
// frozen text pipeline and the label scaler fitted at train time.
struct Checkpoint {
    EncoderConfig encoder;
    Task task = Task::band_gap;
    Pooling pooling = Pooling::cls;
    Eigen::VectorXd weights;
    LabelScaler scaler;
    TokenizerBundle tokenizer;
    PreprocessConfig preprocess;
    std::size_t max_length = kDefaultMaxLength;
    std::size_t epoch = 0;
    std::size_t step = 0;
    double val_metric = 0;
    std::string head_init;
    std::optional<OptimizerSnapshot> optimizer;

    Model model() const;
    std::string hash() const;

    /// Directory with `meta`, `scaler`, `vocab.tsv`, `stopwords.txt`,
    /// `weights.bin` (and `optimizer.bin` when present). Written to a sibling
    /// temp directory first, then renamed into place.
    void save(const std::string& dir) const;
    static Checkpoint load(const std::string& dir);
};

Checkpoint make_checkpoint(const Model& model, Task task, const LabelScaler& scaler, const TokenizerBundle& tokenizer,
                           const PreprocessConfig& preprocess, std::size_t max_length);

} // namespace llmprop
