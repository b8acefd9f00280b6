// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace llmprop {

// Flat dotted-key configuration (`train.lr_max=1e-3`). Every key has a
// registered default; unknown keys are rejected.
class Config {
public:
    /// All registered keys with their default values.
    static Config defaults();
    static bool known(std::string_view key);

    /// Merges a key=value file over the current values.
    void merge_file(const std::string& path);
    void merge_text(std::string_view text);
    /// `key=value` override.
    void set(std::string_view assignment);
    void set(const std::string& key, const std::string& value);

    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::size_t get_size(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<std::string> get_list(const std::string& key) const; // comma separated, blanks dropped

    /// Every key, sorted, one `key=value` per line.
    std::string dump() const;
    const std::map<std::string, std::string>& values() const { return values_; }

    friend bool operator==(const Config&, const Config&) = default;

private:
    std::map<std::string, std::string> values_;
};

} // namespace llmprop
