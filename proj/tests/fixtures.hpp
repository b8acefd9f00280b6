// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

// Small end-to-end training setups over the synthetic corpus.

#pragma once

#include "llmprop/trainer.hpp"
#include "support.hpp"

namespace llmprop::testing {

struct ToyRun {
    DatasetSplit split;
    TrainSetup setup;
    TrainConfig config;
};

inline EncoderConfig toy_encoder(std::size_t hidden = 16, std::size_t layers = 2) {
    EncoderConfig e;
    e.hidden_size = hidden;
    e.num_layers = layers;
    e.num_heads = 2;
    e.dropout = 0;
    e.max_positions = 128;
    return e;
}

inline ToyRun toy_run(std::size_t n_records, Task task, std::uint64_t seed, std::size_t vocab_size = 160) {
    ToyRun run;
    run.split = split_dataset(toy_records(n_records, seed), {}, seed);
    run.setup.preprocess.stopwords = load_stopwords(default_stopwords_path());
    std::vector<std::string> texts;
    for (const auto& r : run.split.train) texts.push_back(preprocess(r.description, run.setup.preprocess).text);
    run.setup.tokenizer = train_vocab(texts, vocab_size, 128);
    run.setup.encoder = toy_encoder();
    run.setup.init_seed = seed;
    run.config.task = task;
    run.config.batch_size = 8;
    run.config.lr_max = 3e-3;
    run.config.epochs = 2;
    run.config.max_length = 128;
    run.config.seed = seed;
    return run;
}

} // namespace llmprop::testing
