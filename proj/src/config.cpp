// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "llmprop/config.hpp"

#include "llmprop/common.hpp"

namespace llmprop {

namespace {

const std::map<std::string, std::string>& registry() {
    static const std::map<std::string, std::string> keys = {
        {"corpus.path", ""},
        {"corpus.format", "auto"},
        {"corpus.field.id", "id"},
        {"corpus.field.formula", "formula"},
        {"corpus.field.description", "description"},
        {"corpus.field.band_gap", "band_gap"},
        {"corpus.field.volume", "volume"},
        {"corpus.field.is_gap_direct", "is_gap_direct"},
        {"split.train", "0.8"},
        {"split.validation", "0.1"},
        {"split.test", "0.1"},
        {"split.seed", "0"},
        {"split.manifest", ""},
        {"prep.replace_num", "true"},
        {"prep.replace_ang", "true"},
        {"prep.remove_stopwords", "true"},
        {"prep.prepend_cls", "true"},
        {"prep.stopwords", ""},
        {"tokenizer.kind", "trained"},
        {"tokenizer.vocab_size", "32000"},
        {"tokenizer.path", ""},
        {"model.hidden_size", "64"},
        {"model.num_layers", "2"},
        {"model.num_heads", "2"},
        {"model.ffn_size", "0"},
        {"model.dropout", "0.2"},
        {"model.max_positions", "1024"},
        {"model.init_seed", "0"},
        {"model.init_from", ""},
        {"train.task", "band_gap"},
        {"train.batch_size", "64"},
        {"train.lr_max", "0.001"},
        {"train.epochs", "200"},
        {"train.max_length", "888"},
        {"train.scaler", "z_score"},
        {"train.seed", "0"},
        {"train.onecycle.pct_warmup", "0.3"},
        {"train.onecycle.final_fraction", "0.04"},
        {"train.clip_grad_norm", "0"},
        {"train.retention", "best_last"},
        {"train.train_size", "0"},
        {"train.subsample_seed", "0"},
        {"train.init_from", ""},
        {"eval.checkpoint", ""},
        {"eval.split", "test"},
        {"zero_shot.head_seed", "0"},
        {"predict.input", ""},
        {"ablate.toggles", ""},
        {"sweep.dimension", ""},
        {"sweep.values", ""},
    };
    return keys;
}

} // namespace

Config Config::defaults() {
    Config c;
    c.values_ = registry();
    return c;
}

bool Config::known(std::string_view key) { return registry().count(std::string(key)) > 0; }

void Config::merge_file(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const IoError&) {
        throw ConfigError("cannot read config file '" + path + "'");
    }
    merge_text(text);
}

void Config::merge_text(std::string_view text) {
    for (const auto& [k, v] : parse_key_values(text)) set(k, v);
}

void Config::set(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
    set(std::string(trim(assignment.substr(0, eq))), std::string(trim(assignment.substr(eq + 1))));
}

void Config::set(const std::string& key, const std::string& value) {
    if (!known(key)) throw ConfigError("unknown config key '" + key + "'");
    values_[key] = value;
}

const std::string& Config::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it != values_.end()) return it->second;
    const auto d = registry().find(key);
    if (d == registry().end()) throw ConfigError("unknown config key '" + key + "'");
    return d->second;
}

double Config::get_double(const std::string& key) const {
    const auto v = parse_double(get(key));
    if (!v) throw ConfigError(key + ": expected a number, got '" + get(key) + "'");
    return *v;
}

std::size_t Config::get_size(const std::string& key) const {
    const auto v = parse_int(get(key));
    if (!v || *v < 0) throw ConfigError(key + ": expected a non-negative integer, got '" + get(key) + "'");
    return static_cast<std::size_t>(*v);
}

std::uint64_t Config::get_u64(const std::string& key) const {
    const std::string& s = get(key);
    std::uint64_t v = 0;
    const auto t = trim(s);
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || p != t.data() + t.size())
        throw ConfigError(key + ": expected an unsigned integer, got '" + s + "'");
    return v;
}

bool Config::get_bool(const std::string& key) const {
    const auto v = parse_bool(get(key));
    if (!v) throw ConfigError(key + ": expected true/false, got '" + get(key) + "'");
    return *v;
}

std::vector<std::string> Config::get_list(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& part : split(get(key), ',')) {
        const auto t = trim(part);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

std::string Config::dump() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
}

} // namespace llmprop
