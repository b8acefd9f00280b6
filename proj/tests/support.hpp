// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

// Shared fixtures: synthetic crystal descriptions and scratch directories.

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "llmprop/common.hpp"
#include "llmprop/corpus.hpp"

namespace llmprop::testing {

inline std::string golden_dir() { return LLMPROP_TEST_GOLDEN_DIR; }

inline std::string golden(const std::string& name) { return read_file(golden_dir() + "/" + name); }

inline const std::vector<std::string>& table_ids() {
    static const std::vector<std::string> ids = {"mp-22851", "mp-30274", "mp-570693"};
    return ids;
}

// Fresh directory under the build tree, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& name) : path_(std::filesystem::path(LLMPROP_TEST_SCRATCH_DIR) / name) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

// Robocrystallographer-like descriptions whose labels depend on the crystal
// system, coordination and bond length, so small encoders can learn them.
inline std::vector<CrystalRecord> toy_records(std::size_t n, std::uint64_t seed) {
    static const char* kSystems[] = {"cubic", "tetragonal", "orthorhombic", "hexagonal", "trigonal", "monoclinic"};
    static const char* kGroups[] = {"Pm-3m", "P4/nmm", "Pnma", "P6_3/mmc", "R-3m", "C2/m"};
    static const char* kCations[] = {"Na", "K", "Li", "Mg", "Ca", "Sr", "Ba", "Zn", "Ti", "Fe"};
    static const char* kAnions[] = {"Cl", "Br", "O", "S", "F", "Se", "N", "I"};
    static const char* kCounts[] = {"two", "three", "four", "five", "six", "eight"};
    static const char* kTypes[] = {"Rocksalt-like", "Matlockite", "Perovskite", "Spinel", "Wurtzite"};
    Rng rng(seed);
    std::vector<CrystalRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto sys = uniform_index(rng, 6);
        const auto cat = uniform_index(rng, 10);
        const auto an = uniform_index(rng, 8);
        const auto cnt = uniform_index(rng, 6);
        const auto typ = uniform_index(rng, 5);
        const double bond = 1.5 + 0.01 * static_cast<double>(uniform_index(rng, 200));
        const int angle = 90 + static_cast<int>(uniform_index(rng, 40));
        char bond_txt[16];
        std::snprintf(bond_txt, sizeof bond_txt, "%.2f", bond);

        CrystalRecord r;
        r.id = "toy-" + std::to_string(seed) + "-" + std::to_string(i);
        r.formula = std::string(kCations[cat]) + kAnions[an];
        r.description = r.formula + " is " + kTypes[typ] + " structured and crystallizes in the " + kSystems[sys] +
                        " " + kGroups[sys] + " space group. " + kCations[cat] + "1+ is bonded in a " +
                        std::string(kCounts[cnt]) + "-coordinate geometry to " + kCounts[cnt] + " equivalent " +
                        kAnions[an] + "1- atoms. All " + kCations[cat] + "-" + kAnions[an] + " bond lengths are " +
                        bond_txt + " Å. The " + kAnions[an] + "-" + kCations[cat] + "-" + kAnions[an] +
                        " bond angle is " + std::to_string(angle) + "°.";
        r.band_gap = 0.4 * static_cast<double>(sys) + 0.3 * static_cast<double>(an) + 0.5 * (bond - 1.5);
        r.volume = 20.0 + 15.0 * static_cast<double>(cnt) + 8.0 * static_cast<double>(cat % 4) + 5.0 * bond;
        r.is_gap_direct = (sys + an) % 2 == 0;
        out.push_back(std::move(r));
    }
    return out;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

inline std::string to_csv(const std::vector<CrystalRecord>& records) {
    std::string out = "id,formula,description,band_gap,volume,is_gap_direct\n";
    for (const auto& r : records) {
        out += csv_field(r.id) + "," + csv_field(r.formula) + "," + csv_field(r.description) + ",";
        out += (r.band_gap ? format_double(*r.band_gap) : "") + ",";
        out += (r.volume ? format_double(*r.volume) : "") + ",";
        out += (r.is_gap_direct ? (*r.is_gap_direct ? "Yes" : "No") : "") + std::string("\n");
    }
    return out;
}

} // namespace llmprop::testing
