// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "llmprop/config.hpp"
#include "llmprop/corpus.hpp"
#include "llmprop/model.hpp"
#include "llmprop/textprep.hpp"
#include "llmprop/tokenizer.hpp"
#include "llmprop/trainer.hpp"

namespace llmprop {

// Typed view of a Config.
struct Settings {
    std::string corpus_path;
    InputFormat format = InputFormat::automatic;
    FieldSchema schema;
    SplitFractions fractions;
    std::uint64_t split_seed = 0;
    std::string split_manifest;

    PreprocessConfig preprocess;
    bool trained_tokenizer = true;
    std::size_t vocab_size = 32000;
    std::string vocab_path;

    EncoderConfig encoder;
    std::uint64_t init_seed = 0;
    std::string pretrained;

    TrainConfig train;
    std::size_t train_size = 0; // 0: the whole training split
    std::uint64_t subsample_seed = 0;
    std::string transfer_source;

    std::string checkpoint;
    std::string eval_split = "test";
    std::uint64_t head_seed = 0;
    std::string predict_input;

    std::vector<std::string> toggles;
    std::string sweep_dimension;
    std::vector<std::string> sweep_values;

    static Settings from(const Config& config);
};

inline const std::vector<std::string>& ablation_toggle_names() {
    static const std::vector<std::string> names = {"modified_tokenizer", "label_scaling", "cls_token",
                                                   "num_token",          "ang_token",     "stopwords"};
    return names;
}

struct AblationRow {
    std::string name;             // "baseline", "+num_token", ..., "+all"
    std::vector<std::string> on;  // toggles enabled on top of the baseline
};

/// Baseline, one row per toggle, and an "+all" row when two or more toggles are given.
std::vector<AblationRow> ablation_rows(const std::vector<std::string>& toggles);

/// Ablation baseline (no [NUM]/[ANG]/[CLS], stopwords kept, identity scaler,
/// stock vocabulary) with the listed toggles switched back on.
Settings ablation_variant(Settings base, const std::vector<std::string>& on);

/// Data, text pipeline and starting model for one training run.
struct PreparedRun {
    DatasetSplit split;
    std::size_t rejected = 0;
    TrainSetup setup;
};

DatasetSplit load_split(const Settings& s, std::size_t* rejected = nullptr);
PreparedRun prepare_run(const Settings& s);

const std::vector<std::string>& command_names();

/// Runs one command. Work happens in `<out_dir>.partial`, which starts with
/// the resolved `config` and is renamed to out_dir on success.
void run_command(const std::string& command, const Config& config, const std::string& out_dir, std::ostream& log);

} // namespace llmprop
