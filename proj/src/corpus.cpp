// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "llmprop/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace llmprop {

std::optional<double> CrystalRecord::label(Task task) const {
    switch (task) {
    case Task::band_gap: return band_gap;
    case Task::volume: return volume;
    case Task::is_gap_direct:
        if (!is_gap_direct) return std::nullopt;
        return *is_gap_direct ? 1.0 : 0.0;
    }
    return std::nullopt;
}

std::optional<bool> parse_direct_flag(std::string_view s) {
    const std::string l = to_lower(trim(s));
    if (l == "yes" || l == "true" || l == "1") return true;
    if (l == "no" || l == "false" || l == "0") return false;
    return std::nullopt;
}

namespace {

// RFC 4180 records: quoted fields may hold delimiters, doubled quotes and newlines.
std::vector<std::vector<std::string>> parse_delimited(const std::string& text, char delim) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    const std::size_t n = text.size();
    for (std::size_t i = 0; i < n; ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < n && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && field.empty() && !field_started) {
            quoted = true;
            field_started = true;
        } else if (c == delim) {
            row.push_back(std::move(field));
            field.clear();
            field_started = false;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < n && text[i + 1] == '\n') ++i;
            row.push_back(std::move(field));
            field.clear();
            field_started = false;
            if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
            row.clear();
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (quoted) throw DataError("unterminated quoted field at end of input");
    if (field_started || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

// Raw field values for one record before validation; nullopt = absent/empty.
struct RawRow {
    std::optional<std::string> id, formula, description, band_gap, volume, is_gap_direct;
};

void validate_row(const RawRow& raw, std::size_t row_no, std::unordered_set<std::string>& seen, LoadResult& out) {
    auto reject = [&](std::string msg) { out.errors.push_back({row_no, std::move(msg)}); };

    const std::string id = raw.id ? std::string(trim(*raw.id)) : std::string();
    if (id.empty()) return reject("missing id");
    const std::string description = raw.description ? std::string(trim(*raw.description)) : std::string();
    if (description.empty()) return reject("record " + id + ": empty description");

    CrystalRecord rec;
    rec.id = id;
    rec.formula = raw.formula ? std::string(trim(*raw.formula)) : std::string();
    rec.description = description;

    if (raw.band_gap && !trim(*raw.band_gap).empty()) {
        const auto v = parse_double(*raw.band_gap);
        if (!v || !std::isfinite(*v)) return reject("record " + id + ": unparseable band_gap '" + *raw.band_gap + "'");
        if (*v < 0) return reject("record " + id + ": band_gap < 0");
        rec.band_gap = *v;
    }
    if (raw.volume && !trim(*raw.volume).empty()) {
        const auto v = parse_double(*raw.volume);
        if (!v || !std::isfinite(*v)) return reject("record " + id + ": unparseable volume '" + *raw.volume + "'");
        if (*v <= 0) return reject("record " + id + ": volume <= 0");
        rec.volume = *v;
    }
    if (raw.is_gap_direct && !trim(*raw.is_gap_direct).empty()) {
        const auto v = parse_direct_flag(*raw.is_gap_direct);
        if (!v) return reject("record " + id + ": unparseable is_gap_direct '" + *raw.is_gap_direct + "'");
        rec.is_gap_direct = *v;
    }
    if (!seen.insert(id).second) return reject("duplicate id " + id);
    out.records.push_back(std::move(rec));
}

LoadResult parse_delimited_dataset(const std::string& content, const FieldSchema& schema, char delim) {
    LoadResult out;
    const auto rows = parse_delimited(content, delim);
    if (rows.empty()) return out;

    const auto& header = rows.front();
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string name(trim(header[i]));
        if (i == 0 && name.rfind("\xEF\xBB\xBF", 0) == 0) name.erase(0, 3); // UTF-8 BOM
        col.emplace(name, i);
    }
    auto column = [&](const std::string& name) {
        const auto it = col.find(name);
        if (it == col.end()) throw DataError("missing required column '" + name + "'");
        return it->second;
    };
    const std::size_t c_id = column(schema.id), c_formula = column(schema.formula),
                      c_desc = column(schema.description), c_bg = column(schema.band_gap),
                      c_vol = column(schema.volume), c_dir = column(schema.is_gap_direct);

    std::unordered_set<std::string> seen;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        auto get = [&](std::size_t c) -> std::optional<std::string> {
            if (c >= row.size()) return std::nullopt;
            return row[c];
        };
        if (row.size() != header.size()) {
            out.errors.push_back({r, "expected " + std::to_string(header.size()) + " fields, found " +
                                         std::to_string(row.size())});
            continue;
        }
        validate_row(RawRow{get(c_id), get(c_formula), get(c_desc), get(c_bg), get(c_vol), get(c_dir)}, r, seen,
                     out);
    }
    return out;
}

std::optional<std::string> json_field(const nlohmann::json& obj, const std::string& key) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (it->is_string()) return it->get<std::string>();
    if (it->is_boolean()) return it->get<bool>() ? std::string("true") : std::string("false");
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
    if (it->is_number()) return format_double(it->get<double>());
    return it->dump();
}

LoadResult parse_jsonl_dataset(const std::string& content, const FieldSchema& schema) {
    LoadResult out;
    std::unordered_set<std::string> seen;
    std::set<std::string> keys_seen;
    std::istringstream in(content);
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            out.errors.push_back({row, std::string("malformed JSON: ") + e.what()});
            continue;
        }
        if (!obj.is_object()) {
            out.errors.push_back({row, "record is not a JSON object"});
            continue;
        }
        for (const auto& [k, v] : obj.items()) keys_seen.insert(k);
        validate_row(RawRow{json_field(obj, schema.id), json_field(obj, schema.formula),
                            json_field(obj, schema.description), json_field(obj, schema.band_gap),
                            json_field(obj, schema.volume), json_field(obj, schema.is_gap_direct)},
                     row, seen, out);
    }
    if (row > 0) {
        for (const std::string* key : {&schema.id, &schema.description}) {
            if (!keys_seen.count(*key)) throw DataError("missing required key '" + *key + "' in every record");
        }
    }
    return out;
}

} // namespace

LoadResult parse_dataset(const std::string& content, const FieldSchema& schema, InputFormat format) {
    if (format == InputFormat::automatic) {
        const auto body = trim(content);
        format = (!body.empty() && body.front() == '{') ? InputFormat::jsonl : InputFormat::csv;
    }
    switch (format) {
    case InputFormat::jsonl: return parse_jsonl_dataset(content, schema);
    case InputFormat::tsv: return parse_delimited_dataset(content, schema, '\t');
    default: return parse_delimited_dataset(content, schema, ',');
    }
}

LoadResult load_dataset(const std::string& path, const FieldSchema& schema, InputFormat format) {
    if (!std::filesystem::is_regular_file(path)) throw DataError("dataset file not found: " + path);
    if (format == InputFormat::automatic) {
        const auto ext = to_lower(std::filesystem::path(path).extension().string());
        if (ext == ".tsv" || ext == ".tab") format = InputFormat::tsv;
        else if (ext == ".jsonl" || ext == ".ndjson" || ext == ".json") format = InputFormat::jsonl;
    }
    return parse_dataset(read_file(path), schema, format);
}

DatasetSplit split_dataset(const std::vector<CrystalRecord>& records, const SplitFractions& f, std::uint64_t seed) {
    if (f.train < 0 || f.validation < 0 || f.test < 0)
        throw ConfigError("split fractions must be non-negative");
    if (std::abs(f.train + f.validation + f.test - 1.0) > 1e-9)
        throw ConfigError("split fractions must sum to 1");
    if (records.size() < 3) throw DataError("need at least 3 records to split, got " + std::to_string(records.size()));

    const std::size_t n = records.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    shuffle(order, rng);

    const auto n_train = static_cast<std::size_t>(std::llround(f.train * static_cast<double>(n)));
    const auto n_val = std::min(n - std::min(n, n_train),
                                static_cast<std::size_t>(std::llround(f.validation * static_cast<double>(n))));

    DatasetSplit out;
    out.split_seed = seed;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& rec = records[order[i]];
        if (i < n_train) out.train.push_back(rec);
        else if (i < n_train + n_val) out.validation.push_back(rec);
        else out.test.push_back(rec);
    }
    return out;
}

DatasetSplit subsample_train(const DatasetSplit& split, std::size_t n, std::uint64_t seed) {
    if (n < 1 || n > split.train.size())
        throw ConfigError("subsample size " + std::to_string(n) + " outside [1, " +
                          std::to_string(split.train.size()) + "]");
    std::vector<std::size_t> order(split.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    // Partial Fisher-Yates: the first n slots are a uniform draw without replacement.
    for (std::size_t i = 0; i < n; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_index(rng, order.size() - i));
        std::swap(order[i], order[j]);
    }
    order.resize(n);
    std::sort(order.begin(), order.end());

    DatasetSplit out;
    out.split_seed = split.split_seed;
    out.validation = split.validation;
    out.test = split.test;
    out.train.reserve(n);
    for (auto i : order) out.train.push_back(split.train[i]);
    return out;
}

std::string format_split_manifest(const DatasetSplit& split) {
    std::string out;
    auto emit = [&](const std::vector<CrystalRecord>& part, std::string_view name) {
        for (const auto& r : part) {
            out += r.id;
            out += '\t';
            out += name;
            out += '\n';
        }
    };
    emit(split.train, "train");
    emit(split.validation, "validation");
    emit(split.test, "test");
    return out;
}

void write_split_manifest(const DatasetSplit& split, const std::string& path) {
    write_file(path, format_split_manifest(split));
}

DatasetSplit apply_split_manifest(const std::vector<CrystalRecord>& records, const std::string& manifest) {
    std::unordered_map<std::string, const CrystalRecord*> by_id;
    for (const auto& r : records) by_id.emplace(r.id, &r);

    DatasetSplit out;
    std::unordered_set<std::string> assigned;
    std::istringstream in(manifest);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw DataError("manifest line " + std::to_string(line_no) + ": missing tab");
        const std::string id = line.substr(0, tab);
        const std::string part = line.substr(tab + 1);
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw DataError("manifest references unknown id " + id);
        if (!assigned.insert(id).second) throw DataError("manifest lists id " + id + " twice");
        if (part == "train") out.train.push_back(*it->second);
        else if (part == "validation") out.validation.push_back(*it->second);
        else if (part == "test") out.test.push_back(*it->second);
        else throw DataError("manifest line " + std::to_string(line_no) + ": unknown split '" + part + "'");
    }
    if (assigned.size() != records.size())
        throw DataError(std::to_string(records.size() - assigned.size()) + " records are absent from the manifest");
    return out;
}

} // namespace llmprop
