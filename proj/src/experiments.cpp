// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "llmprop/experiments.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "llmprop/checkpoint.hpp"

namespace llmprop {

namespace fs = std::filesystem;

namespace {

InputFormat parse_format(const std::string& s) {
    if (s == "auto") return InputFormat::automatic;
    if (s == "csv") return InputFormat::csv;
    if (s == "tsv") return InputFormat::tsv;
    if (s == "jsonl") return InputFormat::jsonl;
    throw ConfigError("corpus.format must be auto, csv, tsv or jsonl, got '" + s + "'");
}

CheckpointRetention parse_retention(const std::string& s) {
    if (s == "best_last") return CheckpointRetention::best_last;
    if (s == "every_epoch") return CheckpointRetention::every_epoch;
    throw ConfigError("train.retention must be best_last or every_epoch, got '" + s + "'");
}

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

} // namespace

Settings Settings::from(const Config& c) {
    Settings s;
    s.corpus_path = c.get("corpus.path");
    s.format = parse_format(c.get("corpus.format"));
    s.schema.id = c.get("corpus.field.id");
    s.schema.formula = c.get("corpus.field.formula");
    s.schema.description = c.get("corpus.field.description");
    s.schema.band_gap = c.get("corpus.field.band_gap");
    s.schema.volume = c.get("corpus.field.volume");
    s.schema.is_gap_direct = c.get("corpus.field.is_gap_direct");
    s.fractions = {c.get_double("split.train"), c.get_double("split.validation"), c.get_double("split.test")};
    s.split_seed = c.get_u64("split.seed");
    s.split_manifest = c.get("split.manifest");

    s.preprocess.replace_num = c.get_bool("prep.replace_num");
    s.preprocess.replace_ang = c.get_bool("prep.replace_ang");
    s.preprocess.remove_stopwords = c.get_bool("prep.remove_stopwords");
    s.preprocess.prepend_cls = c.get_bool("prep.prepend_cls");
    const std::string stopwords = c.get("prep.stopwords").empty() ? default_stopwords_path() : c.get("prep.stopwords");
    if (s.preprocess.remove_stopwords) s.preprocess.stopwords = load_stopwords(stopwords);
    s.preprocess.validate();

    const std::string kind = c.get("tokenizer.kind");
    if (kind != "trained" && kind != "stock")
        throw ConfigError("tokenizer.kind must be trained or stock, got '" + kind + "'");
    s.trained_tokenizer = kind == "trained";
    s.vocab_size = c.get_size("tokenizer.vocab_size");
    s.vocab_path = c.get("tokenizer.path");

    s.encoder.hidden_size = c.get_size("model.hidden_size");
    s.encoder.num_layers = c.get_size("model.num_layers");
    s.encoder.num_heads = c.get_size("model.num_heads");
    s.encoder.ffn_size = c.get_size("model.ffn_size");
    s.encoder.dropout = c.get_double("model.dropout");
    s.encoder.max_positions = c.get_size("model.max_positions");
    s.init_seed = c.get_u64("model.init_seed");
    s.pretrained = c.get("model.init_from");

    s.train.task = parse_task(c.get("train.task"));
    s.train.batch_size = c.get_size("train.batch_size");
    s.train.lr_max = c.get_double("train.lr_max");
    s.train.epochs = c.get_size("train.epochs");
    s.train.max_length = c.get_size("train.max_length");
    s.train.scaler = parse_scaler_method(c.get("train.scaler"));
    s.train.seed = c.get_u64("train.seed");
    s.train.onecycle.pct_warmup = c.get_double("train.onecycle.pct_warmup");
    s.train.onecycle.final_fraction = c.get_double("train.onecycle.final_fraction");
    s.train.clip_grad_norm = c.get_double("train.clip_grad_norm");
    s.train.retention = parse_retention(c.get("train.retention"));
    s.train.validate();
    s.train_size = c.get_size("train.train_size");
    s.subsample_seed = c.get_u64("train.subsample_seed");
    s.transfer_source = c.get("train.init_from");

    s.checkpoint = c.get("eval.checkpoint");
    s.eval_split = c.get("eval.split");
    if (s.eval_split != "train" && s.eval_split != "validation" && s.eval_split != "test" && s.eval_split != "all")
        throw ConfigError("eval.split must be train, validation, test or all");
    s.head_seed = c.get_u64("zero_shot.head_seed");
    s.predict_input = c.get("predict.input");

    s.toggles = c.get_list("ablate.toggles");
    const auto& names = ablation_toggle_names();
    std::set<std::string> seen;
    for (const auto& t : s.toggles) {
        if (std::find(names.begin(), names.end(), t) == names.end()) throw ConfigError("unknown ablation toggle '" + t + "'");
        if (!seen.insert(t).second) throw ConfigError("ablation toggle '" + t + "' listed twice");
    }
    s.sweep_dimension = c.get("sweep.dimension");
    s.sweep_values = c.get_list("sweep.values");
    return s;
}

std::vector<AblationRow> ablation_rows(const std::vector<std::string>& toggles) {
    std::vector<AblationRow> rows{{"baseline", {}}};
    for (const auto& t : toggles) rows.push_back({"+" + t, {t}});
    if (toggles.size() >= 2) rows.push_back({"+all", toggles});
    return rows;
}

Settings ablation_variant(Settings s, const std::vector<std::string>& on) {
    auto has = [&](const char* t) { return std::find(on.begin(), on.end(), t) != on.end(); };
    s.trained_tokenizer = has("modified_tokenizer");
    s.vocab_path.clear();
    if (!has("label_scaling")) s.train.scaler = ScalerMethod::identity;
    s.preprocess.prepend_cls = has("cls_token");
    s.preprocess.replace_num = has("num_token");
    s.preprocess.replace_ang = has("ang_token");
    s.preprocess.remove_stopwords = has("stopwords");
    if (s.preprocess.remove_stopwords && s.preprocess.stopwords.empty())
        s.preprocess.stopwords = load_stopwords(default_stopwords_path());
    return s;
}

DatasetSplit load_split(const Settings& s, std::size_t* rejected) {
    if (s.corpus_path.empty()) throw ConfigError("corpus.path is not set");
    const LoadResult loaded = load_dataset(s.corpus_path, s.schema, s.format);
    if (rejected) *rejected = loaded.rejected();
    if (loaded.records.empty())
        throw DataError("no valid records in '" + s.corpus_path + "' (" + std::to_string(loaded.rejected()) +
                        " rejected)");
    DatasetSplit split = s.split_manifest.empty() ? split_dataset(loaded.records, s.fractions, s.split_seed)
                                                  : apply_split_manifest(loaded.records, read_file(s.split_manifest));
    if (s.train_size > 0) split = subsample_train(split, s.train_size, s.subsample_seed);
    return split;
}

namespace {

std::vector<std::string> processed_texts(const std::vector<CrystalRecord>& records, const PreprocessConfig& p) {
    std::vector<std::string> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(preprocess(r.description, p).text);
    return out;
}

TokenizerBundle build_tokenizer(const Settings& s, const DatasetSplit& split) {
    if (!s.vocab_path.empty()) {
        auto t = TokenizerBundle::load(s.vocab_path);
        t.set_max_length(s.train.max_length);
        return t;
    }
    const auto texts = processed_texts(split.train, s.preprocess);
    if (!s.trained_tokenizer) {
        if (!s.pretrained.empty()) {
            auto t = Checkpoint::load(s.pretrained).tokenizer;
            t.set_max_length(s.train.max_length);
            return t;
        }
        return character_vocab(texts, s.train.max_length);
    }
    const std::string cache = env_or("LLMPROP_CACHE_DIR", "");
    std::string cached;
    if (!cache.empty()) {
        std::uint64_t h = fnv1a64(std::to_string(s.vocab_size));
        for (const auto& t : texts) h = fnv1a64(t + "\n", h);
        cached = path_in(cache, "vocab-" + hex64(h) + ".tsv");
        if (fs::exists(cached)) {
            auto t = TokenizerBundle::load(cached);
            t.set_max_length(s.train.max_length);
            return t;
        }
    }
    auto t = train_vocab(texts, s.vocab_size, s.train.max_length);
    if (!cached.empty()) {
        std::error_code ec;
        fs::create_directories(cache, ec);
        if (ec) throw IoError("cannot create cache directory " + cache + ": " + ec.message());
        t.save(cached);
    }
    return t;
}

} // namespace

PreparedRun prepare_run(const Settings& s) {
    PreparedRun run;
    run.split = load_split(s, &run.rejected);
    run.setup.preprocess = s.preprocess;
    run.setup.tokenizer = build_tokenizer(s, run.split);
    run.setup.encoder = s.encoder;
    run.setup.init_seed = s.init_seed;
    if (!s.pretrained.empty()) {
        const Checkpoint source = Checkpoint::load(s.pretrained);
        Model m = source.tokenizer.tokens() == run.setup.tokenizer.tokens()
                      ? source.model()
                      : adapt_encoder(source, run.setup.tokenizer, s.init_seed);
        m.set_head_kind(head_kind_for(s.train.task));
        m.init_head(derive_seed(s.init_seed, 0x4ead));
        run.setup.encoder = m.config();
        run.setup.initial = std::move(m);
    }
    return run;
}

namespace {

using Log = std::ostream;

std::string table_line(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += '\t';
        out += cells[i];
    }
    return out + "\n";
}

// Column-aligned rendering of a TSV table.
std::string aligned(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& r : rows)
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (width.size() <= i) width.push_back(0);
            width[i] = std::max(width[i], r[i].size());
        }
    std::ostringstream out;
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i)
            out << std::left << std::setw(static_cast<int>(width[i] + 2)) << r[i];
        out << '\n';
    }
    return out.str();
}

std::vector<CrystalRecord> records_of(const DatasetSplit& split, const std::string& which) {
    if (which == "train") return split.train;
    if (which == "validation") return split.validation;
    if (which == "test") return split.test;
    std::vector<CrystalRecord> all = split.train;
    all.insert(all.end(), split.validation.begin(), split.validation.end());
    all.insert(all.end(), split.test.begin(), split.test.end());
    return all;
}

std::string rounded(double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << v;
    return s.str();
}

struct CellResult {
    MetricsReport report;
    TrainState state;
};

CellResult run_cell(const Settings& s, const std::string& run_dir) {
    PreparedRun run = prepare_run(s);
    TrainConfig tc = s.train;
    tc.run_dir = run_dir;
    TrainResult result = train(run.split, tc, run.setup);
    CellResult cell{evaluate(result.best, run.split.test, s.train.task), result.state};
    cell.report.split_manifest_hash = hex64(fnv1a64(format_split_manifest(run.split)));
    return cell;
}

void cmd_prepare(const Settings& s, const std::string& work, Log& log) {
    std::size_t rejected = 0;
    const DatasetSplit split = load_split(s, &rejected);
    const LoadResult loaded = load_dataset(s.corpus_path, s.schema, s.format);
    {
        std::string errors = "row\tmessage\n";
        for (const auto& e : loaded.errors) errors += std::to_string(e.row) + "\t" + e.message + "\n";
        write_file(path_in(work, "rejected.tsv"), errors);
    }
    write_split_manifest(split, path_in(work, "splits.tsv"));

    std::string cache;
    std::size_t num = 0, ang = 0, stop = 0;
    auto emit = [&](const std::vector<CrystalRecord>& part, const char* name) {
        for (const auto& r : part) {
            const auto p = preprocess(r.description, s.preprocess);
            num += p.num_substitutions;
            ang += p.ang_substitutions;
            stop += p.stopwords_removed;
            cache += nlohmann::json{{"id", r.id}, {"split", name}, {"text", p.text}}.dump() + "\n";
        }
    };
    emit(split.train, "train");
    emit(split.validation, "validation");
    emit(split.test, "test");
    write_file(path_in(work, "processed.jsonl"), cache);

    const TokenizerBundle tok = build_tokenizer(s, split);
    tok.save(path_in(work, "vocab.tsv"));

    double token_sum = 0;
    std::size_t truncated = 0, total = 0;
    for (const auto* part : {&split.train, &split.validation, &split.test})
        for (const auto& r : *part) {
            const auto e = encode(tok, preprocess(r.description, s.preprocess).text, s.train.max_length);
            token_sum += static_cast<double>(e.original_length);
            truncated += e.original_length > e.ids.size() ? 1 : 0;
            ++total;
        }
    std::vector<std::vector<std::string>> stats = {
        {"statistic", "value"},
        {"records", std::to_string(total)},
        {"rejected", std::to_string(rejected)},
        {"train", std::to_string(split.train.size())},
        {"validation", std::to_string(split.validation.size())},
        {"test", std::to_string(split.test.size())},
        {"vocab_size", std::to_string(tok.size())},
        {"mean_tokens", format_double(total ? token_sum / static_cast<double>(total) : 0.0)},
        {"truncated", std::to_string(truncated)},
        {"num_substitutions", std::to_string(num)},
        {"ang_substitutions", std::to_string(ang)},
        {"stopwords_removed", std::to_string(stop)},
    };
    std::string tsv;
    for (const auto& r : stats) tsv += table_line(r);
    write_file(path_in(work, "stats.tsv"), tsv);
    log << aligned(stats);
}

void cmd_train(const Settings& s, const std::string& work, Log& log) {
    PreparedRun run = prepare_run(s);
    write_split_manifest(run.split, path_in(work, "splits.tsv"));
    TrainConfig tc = s.train;
    tc.run_dir = work;
    const TrainResult result = train(run.split, tc, run.setup);
    MetricsReport report = evaluate(result.best, run.split.test, s.train.task);
    report.split_manifest_hash = hex64(fnv1a64(format_split_manifest(run.split)));
    report.notes.emplace_back("best_epoch", std::to_string(result.state.best_epoch));
    report.notes.emplace_back("best_val_metric", format_double(result.state.best_val_metric));
    report.notes.emplace_back("initial_val_metric", format_double(result.state.initial_val_metric));
    report.notes.emplace_back("onecycle.pct_warmup", format_double(s.train.onecycle.pct_warmup));
    report.notes.emplace_back("onecycle.final_fraction", format_double(s.train.onecycle.final_fraction));
    write_file(path_in(work, "metrics"), report.serialize());
    log << "test " << report.summary() << " (best epoch " << result.state.best_epoch << ")\n";
}

Checkpoint require_checkpoint(const std::string& path, const char* key) {
    if (path.empty()) throw ConfigError(std::string(key) + " is not set");
    return Checkpoint::load(path);
}

void cmd_evaluate(const Settings& s, const std::string& work, Log& log) {
    const Checkpoint ck = require_checkpoint(s.checkpoint, "eval.checkpoint");
    const DatasetSplit split = load_split(s);
    MetricsReport report = evaluate(ck, records_of(split, s.eval_split), ck.task);
    report.split_manifest_hash = hex64(fnv1a64(format_split_manifest(split)));
    report.notes.emplace_back("eval.split", s.eval_split);
    write_file(path_in(work, "metrics"), report.serialize());
    log << s.eval_split << " " << report.summary() << "\n";
}

void cmd_zero_shot(const Settings& s, const std::string& work, Log& log) {
    const Checkpoint ck = require_checkpoint(s.checkpoint.empty() ? s.pretrained : s.checkpoint, "eval.checkpoint");
    const DatasetSplit split = load_split(s);
    std::vector<double> reference;
    for (const auto& r : split.train)
        if (const auto y = r.label(s.train.task)) reference.push_back(*y);
    MetricsReport report = zero_shot(ck, records_of(split, s.eval_split), s.train.task, reference, s.head_seed);
    report.split_manifest_hash = hex64(fnv1a64(format_split_manifest(split)));
    report.notes.emplace_back("eval.split", s.eval_split);
    write_file(path_in(work, "metrics"), report.serialize());
    log << "zero-shot " << report.summary() << "\n";
}

void cmd_transfer(const Settings& s, const std::string& work, Log& log) {
    const Checkpoint source = require_checkpoint(s.transfer_source, "train.init_from");
    const DatasetSplit split = load_split(s);
    write_split_manifest(split, path_in(work, "splits.tsv"));
    TrainConfig tc = s.train;
    tc.run_dir = work;
    const TrainResult result = transfer_train(source, split, tc, s.encoder);
    MetricsReport report = evaluate(result.best, split.test, s.train.task);
    report.split_manifest_hash = hex64(fnv1a64(format_split_manifest(split)));
    report.notes.emplace_back("transfer.source_task", std::string(to_string(source.task)));
    report.notes.emplace_back("initial_val_metric", format_double(result.state.initial_val_metric));
    report.notes.emplace_back("best_epoch", std::to_string(result.state.best_epoch));
    write_file(path_in(work, "metrics"), report.serialize());
    log << "transfer " << to_string(source.task) << " -> " << report.summary() << "\n";
}

void cmd_predict(const Settings& s, const std::string& work, Log& log) {
    const Checkpoint ck = require_checkpoint(s.checkpoint, "eval.checkpoint");
    if (s.predict_input.empty()) throw ConfigError("predict.input is not set");
    std::string content = read_file(s.predict_input);
    if (!content.empty() && content.back() == '\n') content.pop_back();
    std::vector<Example> examples;
    if (!content.empty())
        for (auto line : split(content, '\n')) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            examples.push_back({encode(ck.tokenizer, preprocess(line, ck.preprocess).text, ck.max_length), 0.0});
        }
    const Model model = ck.model();
    const Eigen::VectorXd pred = predict_examples(model, ck.scaler, examples);
    std::string out = "line\t" + std::string(to_string(ck.task)) + "\n";
    for (Eigen::Index i = 0; i < pred.size(); ++i) out += std::to_string(i + 1) + "\t" + format_double(pred(i)) + "\n";
    write_file(path_in(work, "predictions.tsv"), out);
    log << "predicted " << pred.size() << " lines (" << to_string(ck.task) << ", " << task_units(ck.task) << ")\n";
}

void cmd_ablate(const Settings& s, const std::string& work, Log& log) {
    const std::vector<std::string> header = {"row", "task", "metric", "value", "n", "best_epoch", "best_val_metric"};
    std::vector<std::vector<std::string>> table{header};
    const std::string metric = is_regression(s.train.task) ? "MAE" : "AUC";
    for (const auto& row : ablation_rows(s.toggles)) {
        const bool na = !is_regression(s.train.task) && row.on.size() == 1 && row.on.front() == "label_scaling";
        if (na) {
            table.push_back({row.name, std::string(to_string(s.train.task)), metric, "N/A", "0", "N/A", "N/A"});
            log << row.name << ": N/A (no label scaling for classification)\n";
            continue;
        }
        const Settings variant = ablation_variant(s, row.on);
        const CellResult cell = run_cell(variant, path_in(work, "cells/" + row.name));
        table.push_back({row.name, std::string(to_string(s.train.task)), metric, format_double(cell.report.value),
                         std::to_string(cell.report.n), std::to_string(cell.state.best_epoch),
                         format_double(cell.state.best_val_metric)});
        log << row.name << ": " << cell.report.summary() << "\n";
    }
    std::string tsv;
    for (const auto& r : table) tsv += table_line(r);
    write_file(path_in(work, "ablation.tsv"), tsv);
    std::vector<std::vector<std::string>> human = table;
    for (std::size_t i = 1; i < human.size(); ++i)
        if (human[i][3] != "N/A") human[i][3] = rounded(std::stod(human[i][3]));
    write_file(path_in(work, "ablation.txt"), aligned(human));
}

void cmd_sweep(const Settings& s, const std::string& work, Log& log) {
    const std::string& dim = s.sweep_dimension;
    if (dim != "train_size" && dim != "max_length" && dim != "scaler")
        throw ConfigError("sweep.dimension must be train_size, max_length or scaler");
    if (s.sweep_values.empty()) throw ConfigError("sweep.values is empty");
    std::vector<Settings> variants;
    for (const auto& v : s.sweep_values) {
        Settings c = s;
        if (dim == "scaler") {
            c.train.scaler = parse_scaler_method(v);
        } else {
            const auto n = parse_int(v);
            if (!n || *n <= 0) throw ConfigError("sweep value '" + v + "' is not a positive integer");
            if (dim == "train_size") {
                c.train_size = static_cast<std::size_t>(*n);
            } else {
                c.train.max_length = static_cast<std::size_t>(*n);
                if (c.train.max_length > c.encoder.max_positions)
                    throw ConfigError("sweep max_length " + v + " exceeds model.max_positions");
            }
        }
        variants.push_back(std::move(c));
    }
    const std::string metric = is_regression(s.train.task) ? "MAE" : "AUC";
    std::vector<std::vector<std::string>> table{{dim, "task", "metric", "value", "n", "best_epoch", "best_val_metric"}};
    std::string dat = dim + "\t" + metric + "\n";
    std::vector<double> values;
    for (std::size_t i = 0; i < variants.size(); ++i) {
        const std::string& v = s.sweep_values[i];
        const CellResult cell = run_cell(variants[i], path_in(work, "cells/" + dim + "-" + v));
        values.push_back(cell.report.value);
        table.push_back({v, std::string(to_string(s.train.task)), metric, format_double(cell.report.value),
                         std::to_string(cell.report.n), std::to_string(cell.state.best_epoch),
                         format_double(cell.state.best_val_metric)});
        dat += v + "\t" + format_double(cell.report.value) + "\n";
        log << dim << "=" << v << ": " << cell.report.summary() << "\n";
    }
    std::string tsv;
    for (const auto& r : table) tsv += table_line(r);
    write_file(path_in(work, "sweep.tsv"), tsv);
    write_file(path_in(work, "sweep.dat"), dat);
    std::vector<std::vector<std::string>> human = table;
    for (std::size_t i = 1; i < human.size(); ++i) human[i][3] = rounded(values[i - 1]);
    std::string text = aligned(human);
    if (dim != "scaler" && values.size() > 1) {
        const bool better = is_regression(s.train.task);
        bool monotone = true;
        for (std::size_t i = 1; i < values.size(); ++i)
            monotone = monotone && (better ? values[i] <= values[i - 1] : values[i] >= values[i - 1]);
        text += std::string("monotone improvement: ") + (monotone ? "yes" : "no") + "\n";
        log << "monotone improvement: " << (monotone ? "yes" : "no") << "\n";
    }
    write_file(path_in(work, "sweep.txt"), text);
}

} // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {"prepare",   "train",    "evaluate", "predict",
                                                   "zero-shot", "transfer", "ablate",   "sweep"};
    return names;
}

void run_command(const std::string& command, const Config& config, const std::string& out_dir, Log& log) {
    const auto& names = command_names();
    if (std::find(names.begin(), names.end(), command) == names.end())
        throw ConfigError("unknown command '" + command + "'");
    if (out_dir.empty()) throw ConfigError("--out is required");
    const Settings s = Settings::from(config);

    const fs::path target(out_dir);
    const fs::path work = target.string() + ".partial";
    std::error_code ec;
    fs::remove_all(work, ec);
    fs::create_directories(work, ec);
    if (ec) throw IoError("cannot create " + work.string() + ": " + ec.message());

    std::string frozen = "# llmprop " + command + "\n";
    frozen += "# env LLMPROP_DETERMINISTIC=" + env_or("LLMPROP_DETERMINISTIC", "") + "\n";
    frozen += "# env LLMPROP_CACHE_DIR=" + env_or("LLMPROP_CACHE_DIR", "") + "\n";
    frozen += config.dump();
    write_file(path_in(work.string(), "config"), frozen);

    if (command == "prepare") cmd_prepare(s, work.string(), log);
    else if (command == "train") cmd_train(s, work.string(), log);
    else if (command == "evaluate") cmd_evaluate(s, work.string(), log);
    else if (command == "predict") cmd_predict(s, work.string(), log);
    else if (command == "zero-shot") cmd_zero_shot(s, work.string(), log);
    else if (command == "transfer") cmd_transfer(s, work.string(), log);
    else if (command == "ablate") cmd_ablate(s, work.string(), log);
    else cmd_sweep(s, work.string(), log);

    fs::remove_all(target, ec);
    fs::rename(work, target, ec);
    if (ec) throw IoError("cannot move results into " + target.string() + ": " + ec.message());
}

} // namespace llmprop
