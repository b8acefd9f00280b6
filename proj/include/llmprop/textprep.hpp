// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>

namespace llmprop {

inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kNumToken = "[NUM]";
inline constexpr std::string_view kAngToken = "[ANG]";

using StopwordSet = std::set<std::string, std::less<>>;

struct PreprocessConfig {
    bool replace_num = true;
    bool replace_ang = true;
    bool remove_stopwords = true;
    bool prepend_cls = true;
    StopwordSet stopwords;

    /// Throws ConfigError if a stopword is a number or a sign/unit symbol.
    void validate() const;
};

struct ProcessedText {
    std::string text;
    std::size_t num_substitutions = 0;
    std::size_t ang_substitutions = 0;
    std::size_t stopwords_removed = 0;
};

struct Substitution {
    std::string text;
    std::size_t count = 0;
};

/// `<number> Å` (also "Angstrom"), optional space before the unit -> [NUM].
Substitution replace_bond_lengths(std::string_view text);

/// `<number> degrees`, `<number> degree`, `<number>°` -> [ANG].
Substitution replace_bond_angles(std::string_view text);

Substitution remove_stopwords(std::string_view text, const StopwordSet& stopwords);

/// Not idempotent: the caller applies it once.
std::string prepend_cls(std::string_view text);

/// Lengths, angles, stopwords, [CLS], in that order; disabled steps are skipped.
ProcessedText preprocess(std::string_view description, const PreprocessConfig& config);

/// One lowercase word per line; blank lines and `#` comments are ignored.
StopwordSet parse_stopwords(std::string_view content);
StopwordSet load_stopwords(const std::string& path);
std::string format_stopwords(const StopwordSet& words);

/// Path of the stopword list shipped in data/ (overridable with LLMPROP_DATA_DIR).
std::string default_stopwords_path();

bool is_element_symbol(std::string_view word);

} // namespace llmprop
