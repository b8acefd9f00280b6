// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "llmprop/model.hpp"

namespace llmprop {

void EncoderConfig::validate() const {
    if (vocab_size == 0) throw ConfigError("encoder vocab_size must be positive");
    if (hidden_size == 0 || num_layers == 0 || num_heads == 0)
        throw ConfigError("encoder hidden_size, num_layers and num_heads must be positive");
    if (hidden_size % num_heads != 0)
        throw ConfigError("hidden_size " + std::to_string(hidden_size) + " is not divisible by num_heads " +
                          std::to_string(num_heads));
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    if (max_positions == 0) throw ConfigError("max_positions must be positive");
}

std::string_view to_string(HeadKind k) { return k == HeadKind::regression ? "regression" : "classification"; }

std::string_view to_string(Pooling p) { return p == Pooling::cls ? "cls" : "mean"; }

Pooling parse_pooling(std::string_view s) {
    if (s == "cls") return Pooling::cls;
    if (s == "mean") return Pooling::mean;
    throw ConfigError("unknown pooling '" + std::string(s) + "'");
}

ParameterLayout ParameterLayout::make(const EncoderConfig& cfg) {
    using I = Eigen::Index;
    const I h = static_cast<I>(cfg.hidden_size), f = static_cast<I>(cfg.ffn()),
            v = static_cast<I>(cfg.vocab_size), p = static_cast<I>(cfg.max_positions);
    ParameterLayout out;
    I off = 0;
    auto take = [&](I n) {
        const I at = off;
        off += n;
        return at;
    };
    out.tok_emb = take(v * h);
    out.pos_emb = take(p * h);
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
        Layer layer{};
        layer.norm1 = take(h);
        layer.wq = take(h * h);
        layer.wk = take(h * h);
        layer.wv = take(h * h);
        layer.wo = take(h * h);
        layer.norm2 = take(h);
        layer.w1 = take(h * f);
        layer.w2 = take(f * h);
        out.layers.push_back(layer);
    }
    out.final_norm = take(h);
    out.encoder_size = off;
    out.head_w = take(h);
    out.head_b = take(1);
    out.total = off;
    return out;
}

std::size_t parameter_count(const EncoderConfig& cfg, bool include_head) {
    const std::size_t h = cfg.hidden_size, f = cfg.ffn();
    std::size_t n = cfg.vocab_size * h + cfg.max_positions * h;
    n += cfg.num_layers * (4 * h * h + 2 * h * f + 2 * h);
    n += h;
    if (include_head) n += h + 1;
    return n;
}

std::size_t seq2seq_parameter_count(const EncoderConfig& cfg) {
    const std::size_t h = cfg.hidden_size, f = cfg.ffn();
    std::size_t n = parameter_count(cfg, false);
    n += cfg.max_positions * h;                             // decoder positions
    n += cfg.num_layers * (8 * h * h + 2 * h * f + 3 * h); // self + cross attention, FFN, 3 norms
    n += h;                                                 // decoder final norm
    return n;
}

template class EncoderModel<double>;

} // namespace llmprop
