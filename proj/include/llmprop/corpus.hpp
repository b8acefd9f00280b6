// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "llmprop/common.hpp"

namespace llmprop {

// One crystal of the benchmark: its text description plus the three labels.
// A label may be absent; such records are skipped only by tasks needing it.
struct CrystalRecord {
    std::string id;
    std::string formula;
    std::string description;
    std::optional<double> band_gap; // eV, >= 0
    std::optional<double> volume;   // Å³ per cell, > 0
    std::optional<bool> is_gap_direct;

    std::optional<double> label(Task task) const;
};

// Maps logical fields to column names (delimited text) or keys (JSON lines).
struct FieldSchema {
    std::string id = "id";
    std::string formula = "formula";
    std::string description = "description";
    std::string band_gap = "band_gap";
    std::string volume = "volume";
    std::string is_gap_direct = "is_gap_direct";
};

enum class InputFormat { automatic, csv, tsv, jsonl };

struct RowError {
    std::size_t row = 0; // 1-based record number (header excluded)
    std::string message;
};

struct LoadResult {
    std::vector<CrystalRecord> records;
    std::vector<RowError> errors;

    std::size_t rejected() const { return errors.size(); }
};

/// Reads a dataset file. Row-level problems (bad numbers, negative band gap,
/// empty description, duplicate id) reject that row and are listed in
/// `errors`; a missing file or missing required column throws.
LoadResult load_dataset(const std::string& path, const FieldSchema& schema = {},
                        InputFormat format = InputFormat::automatic);

/// Same as load_dataset but over in-memory content.
LoadResult parse_dataset(const std::string& content, const FieldSchema& schema, InputFormat format);

/// Accepts Yes/No/true/false/1/0, case-insensitively.
std::optional<bool> parse_direct_flag(std::string_view s);

struct SplitFractions {
    double train = 0.8;
    double validation = 0.1;
    double test = 0.1;
};

struct DatasetSplit {
    std::vector<CrystalRecord> train;
    std::vector<CrystalRecord> validation;
    std::vector<CrystalRecord> test;
    std::uint64_t split_seed = 0;
};

/// Seeded random permutation of the input order, cut by fraction. Sizes are
/// round(f_train*n), round(f_val*n) and the remainder.
DatasetSplit split_dataset(const std::vector<CrystalRecord>& records, const SplitFractions& fractions,
                           std::uint64_t seed);

/// Draws exactly n training records without replacement; validation and test
/// are carried over untouched.
DatasetSplit subsample_train(const DatasetSplit& split, std::size_t n, std::uint64_t seed);

// Manifest: one `<id>\t<split-name>` line per record.
std::string format_split_manifest(const DatasetSplit& split);
void write_split_manifest(const DatasetSplit& split, const std::string& path);
DatasetSplit apply_split_manifest(const std::vector<CrystalRecord>& records, const std::string& manifest_content);

} // namespace llmprop
