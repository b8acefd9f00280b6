// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "llmprop/checkpoint.hpp"

#include <cstring>
#include <filesystem>

namespace llmprop {

namespace fs = std::filesystem;

namespace {

constexpr char kWeightsMagic[8] = {'L', 'L', 'M', 'P', 'R', 'O', 'P', 'W'};
constexpr char kOptimizerMagic[8] = {'L', 'L', 'M', 'P', 'R', 'O', 'P', 'A'};

template <typename T>
void put(std::string& out, const T& v) {
    out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_vector(std::string& out, const Eigen::VectorXd& v) {
    out.append(reinterpret_cast<const char*>(v.data()), static_cast<std::size_t>(v.size()) * sizeof(double));
}

class Reader {
public:
    Reader(std::string data, std::string what) : data_(std::move(data)), what_(std::move(what)) {}

    template <typename T>
    T get() {
        T v;
        need(sizeof(T));
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    Eigen::VectorXd get_vector(std::uint64_t n) {
        need(n * sizeof(double));
        Eigen::VectorXd v(static_cast<Eigen::Index>(n));
        std::memcpy(v.data(), data_.data() + pos_, n * sizeof(double));
        pos_ += n * sizeof(double);
        return v;
    }

    void magic(const char (&m)[8]) {
        need(8);
        if (std::memcmp(data_.data() + pos_, m, 8) != 0) throw DataError(what_ + ": bad magic");
        pos_ += 8;
    }

    void end() const {
        if (pos_ != data_.size()) throw DataError(what_ + ": trailing bytes");
    }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) throw DataError(what_ + ": truncated");
    }
    std::string data_;
    std::string what_;
    std::size_t pos_ = 0;
};

std::string format_meta(const Checkpoint& c) {
    std::string out = "format=llmprop-checkpoint-1\n";
    auto kv = [&](const std::string& k, const std::string& v) { out += k + "=" + v + "\n"; };
    kv("task", std::string(to_string(c.task)));
    kv("head_kind", std::string(to_string(head_kind_for(c.task))));
    kv("pooling", std::string(to_string(c.pooling)));
    kv("encoder.vocab_size", std::to_string(c.encoder.vocab_size));
    kv("encoder.hidden_size", std::to_string(c.encoder.hidden_size));
    kv("encoder.num_layers", std::to_string(c.encoder.num_layers));
    kv("encoder.num_heads", std::to_string(c.encoder.num_heads));
    kv("encoder.ffn_size", std::to_string(c.encoder.ffn()));
    kv("encoder.dropout", format_double(c.encoder.dropout));
    kv("encoder.max_positions", std::to_string(c.encoder.max_positions));
    kv("prep.replace_num", c.preprocess.replace_num ? "true" : "false");
    kv("prep.replace_ang", c.preprocess.replace_ang ? "true" : "false");
    kv("prep.remove_stopwords", c.preprocess.remove_stopwords ? "true" : "false");
    kv("prep.prepend_cls", c.preprocess.prepend_cls ? "true" : "false");
    kv("max_length", std::to_string(c.max_length));
    kv("epoch", std::to_string(c.epoch));
    kv("step", std::to_string(c.step));
    kv("val_metric", format_double(c.val_metric));
    kv("vocab_hash", c.tokenizer.hash());
    kv("head.init", c.head_init);
    kv("weights.count", std::to_string(c.weights.size()));
    return out;
}

std::string weights_blob(const Eigen::VectorXd& w) {
    std::string out(kWeightsMagic, 8);
    put(out, static_cast<std::uint64_t>(w.size()));
    put_vector(out, w);
    return out;
}

} // namespace

Model Checkpoint::model() const {
    Model m(encoder, head_kind_for(task), pooling);
    if (weights.size() != m.size())
        throw DataError("checkpoint holds " + std::to_string(weights.size()) + " weights, architecture needs " +
                        std::to_string(m.size()));
    m.parameters() = weights;
    return m;
}

std::string Checkpoint::hash() const {
    std::uint64_t h = fnv1a64(format_meta(*this));
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(weights.data()),
                                 static_cast<std::size_t>(weights.size()) * sizeof(double)),
                h);
    return hex64(h);
}

void Checkpoint::save(const std::string& dir) const {
    const fs::path target(dir);
    const fs::path tmp = target.string() + ".tmp";
    std::error_code ec;
    fs::remove_all(tmp, ec);
    fs::create_directories(tmp, ec);
    if (ec) throw IoError("cannot create checkpoint directory " + tmp.string() + ": " + ec.message());

    write_file((tmp / "meta").string(), format_meta(*this));
    write_file((tmp / "scaler").string(), scaler.serialize());
    write_file((tmp / "vocab.tsv").string(), tokenizer.serialize());
    write_file((tmp / "stopwords.txt").string(), format_stopwords(preprocess.stopwords));
    write_file((tmp / "weights.bin").string(), weights_blob(weights));
    if (optimizer) {
        std::string blob(kOptimizerMagic, 8);
        put(blob, static_cast<std::int64_t>(optimizer->t));
        put(blob, static_cast<std::uint64_t>(optimizer->m.size()));
        put_vector(blob, optimizer->m);
        put_vector(blob, optimizer->v);
        write_file((tmp / "optimizer.bin").string(), blob);
    }
    fs::remove_all(target, ec);
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("cannot move checkpoint into " + target.string() + ": " + ec.message());
}

Checkpoint Checkpoint::load(const std::string& dir) {
    const fs::path root(dir);
    if (!fs::is_directory(root)) throw DataError("checkpoint directory not found: " + dir);
    auto meta = parse_key_values(read_file((root / "meta").string()));
    auto get = [&](const std::string& k) -> const std::string& {
        const auto it = meta.find(k);
        if (it == meta.end()) throw DataError("checkpoint meta lacks '" + k + "'");
        return it->second;
    };
    auto get_size = [&](const std::string& k) {
        const auto v = parse_int(get(k));
        if (!v || *v < 0) throw DataError("checkpoint meta has bad '" + k + "'");
        return static_cast<std::size_t>(*v);
    };
    auto get_bool = [&](const std::string& k) {
        const auto v = parse_bool(get(k));
        if (!v) throw DataError("checkpoint meta has bad '" + k + "'");
        return *v;
    };
    if (get("format") != "llmprop-checkpoint-1") throw DataError("unsupported checkpoint format " + get("format"));

    Checkpoint c;
    c.task = parse_task(get("task"));
    c.pooling = parse_pooling(get("pooling"));
    c.encoder.vocab_size = get_size("encoder.vocab_size");
    c.encoder.hidden_size = get_size("encoder.hidden_size");
    c.encoder.num_layers = get_size("encoder.num_layers");
    c.encoder.num_heads = get_size("encoder.num_heads");
    c.encoder.ffn_size = get_size("encoder.ffn_size");
    c.encoder.max_positions = get_size("encoder.max_positions");
    const auto dropout = parse_double(get("encoder.dropout"));
    if (!dropout) throw DataError("checkpoint meta has bad 'encoder.dropout'");
    c.encoder.dropout = *dropout;
    c.preprocess.replace_num = get_bool("prep.replace_num");
    c.preprocess.replace_ang = get_bool("prep.replace_ang");
    c.preprocess.remove_stopwords = get_bool("prep.remove_stopwords");
    c.preprocess.prepend_cls = get_bool("prep.prepend_cls");
    c.max_length = get_size("max_length");
    c.epoch = get_size("epoch");
    c.step = get_size("step");
    const auto val = parse_double(get("val_metric"));
    if (!val) throw DataError("checkpoint meta has bad 'val_metric'");
    c.val_metric = *val;
    c.head_init = meta.count("head.init") ? meta["head.init"] : std::string();

    c.scaler = LabelScaler::deserialize(read_file((root / "scaler").string()));
    c.tokenizer = TokenizerBundle::load((root / "vocab.tsv").string());
    c.tokenizer.set_max_length(c.max_length);
    if (c.tokenizer.size() != c.encoder.vocab_size)
        throw DataError("checkpoint vocabulary does not match encoder vocab_size");
    if (c.tokenizer.hash() != get("vocab_hash")) throw DataError("checkpoint vocabulary hash mismatch");
    c.preprocess.stopwords = load_stopwords((root / "stopwords.txt").string());

    Reader w(read_file((root / "weights.bin").string()), "weights.bin");
    w.magic(kWeightsMagic);
    const auto n = w.get<std::uint64_t>();
    c.weights = w.get_vector(n);
    w.end();
    if (n != get_size("weights.count")) throw DataError("weights.bin count disagrees with meta");

    if (fs::exists(root / "optimizer.bin")) {
        Reader o(read_file((root / "optimizer.bin").string()), "optimizer.bin");
        o.magic(kOptimizerMagic);
        OptimizerSnapshot snap;
        snap.t = o.get<std::int64_t>();
        const auto k = o.get<std::uint64_t>();
        snap.m = o.get_vector(k);
        snap.v = o.get_vector(k);
        o.end();
        c.optimizer = std::move(snap);
    }
    return c;
}

Checkpoint make_checkpoint(const Model& model, Task task, const LabelScaler& scaler, const TokenizerBundle& tokenizer,
                           const PreprocessConfig& preprocess, std::size_t max_length) {
    Checkpoint c;
    c.encoder = model.config();
    c.task = task;
    c.pooling = model.pooling();
    c.weights = model.parameters();
    c.scaler = scaler;
    c.tokenizer = tokenizer;
    c.tokenizer.set_max_length(max_length);
    c.preprocess = preprocess;
    c.max_length = max_length;
    return c;
}

} // namespace llmprop
