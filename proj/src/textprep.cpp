// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "llmprop/textprep.hpp"

#include <array>
#include <cstdlib>
#include <vector>

#include "llmprop/common.hpp"

#ifndef LLMPROP_DATA_DIR
#define LLMPROP_DATA_DIR "data"
#endif

namespace llmprop {

namespace {

bool ascii_digit(char c) { return c >= '0' && c <= '9'; }
bool ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool ascii_alnum(char c) { return ascii_digit(c) || ascii_alpha(c); }

bool starts_with(std::string_view s, std::size_t pos, std::string_view prefix) {
    return s.size() >= pos + prefix.size() && s.compare(pos, prefix.size(), prefix) == 0;
}

// Length of a horizontal-space run at pos (ASCII space/tab and the no-break spaces).
std::size_t space_run(std::string_view s, std::size_t pos) {
    std::size_t p = pos;
    for (;;) {
        if (p < s.size() && (s[p] == ' ' || s[p] == '\t')) ++p;
        else if (starts_with(s, p, "\xC2\xA0")) p += 2;                                       // U+00A0
        else if (starts_with(s, p, "\xE2\x80\xAF") || starts_with(s, p, "\xE2\x80\x89")) p += 3; // U+202F, U+2009
        else return p - pos;
    }
}

// Matches `[sign] digits [. digits]` at pos; returns its length or 0.
std::size_t match_number(std::string_view s, std::size_t pos) {
    if (pos > 0) {
        const char prev = s[pos - 1];
        if (ascii_alnum(prev) || prev == '.' || prev == '_') return 0;
    }
    std::size_t p = pos;
    if (p < s.size() && (s[p] == '+' || s[p] == '-')) ++p;
    else if (starts_with(s, p, "\xE2\x88\x92")) p += 3; // U+2212 minus sign
    const std::size_t digits_start = p;
    while (p < s.size() && ascii_digit(s[p])) ++p;
    if (p == digits_start) return 0;
    if (p + 1 < s.size() && s[p] == '.' && ascii_digit(s[p + 1])) {
        ++p;
        while (p < s.size() && ascii_digit(s[p])) ++p;
    }
    return p - pos;
}

// Word unit such as "degrees": must not continue into another ASCII letter.
std::size_t match_word(std::string_view s, std::size_t pos, std::string_view word) {
    if (!starts_with(s, pos, word)) return 0;
    const std::size_t end = pos + word.size();
    if (end < s.size() && ascii_alpha(s[end])) return 0;
    return word.size();
}

std::size_t match_length_unit(std::string_view s, std::size_t pos) {
    if (starts_with(s, pos, "\xC3\x85")) return 2;     // U+00C5
    if (starts_with(s, pos, "\xE2\x84\xAB")) return 3; // U+212B angstrom sign
    for (std::string_view w : {"Angstroms", "angstroms", "Angstrom", "angstrom"}) {
        if (auto n = match_word(s, pos, w)) return n;
    }
    return 0;
}

std::size_t match_angle_unit(std::string_view s, std::size_t pos) {
    if (starts_with(s, pos, "\xC2\xB0")) return 2; // U+00B0
    for (std::string_view w : {"degrees", "degree"}) {
        if (auto n = match_word(s, pos, w)) return n;
    }
    return 0;
}

template <typename UnitMatcher>
Substitution replace_quantities(std::string_view text, UnitMatcher unit, std::string_view token) {
    Substitution out;
    out.text.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (const std::size_t num = match_number(text, i)) {
            const std::size_t after = i + num;
            const std::size_t gap = space_run(text, after);
            if (const std::size_t u = unit(text, after + gap)) {
                out.text += token;
                ++out.count;
                i = after + gap + u;
                continue;
            }
            // Not a quantity; copy the whole number so its tail is not re-scanned.
            out.text.append(text.substr(i, num));
            i = after;
            continue;
        }
        out.text.push_back(text[i]);
        ++i;
    }
    return out;
}

constexpr std::array<std::string_view, 118> kElements = {
    "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al", "Si", "P",  "S",  "Cl", "Ar",
    "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr",
    "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe",
    "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf",
    "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th",
    "Pa", "U",  "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs",
    "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

constexpr std::string_view kLeadingPunct = "(\"'";
constexpr std::string_view kTrailingPunct = ".,;:!?)\"'";
constexpr std::string_view kCarriedPunct = ".,;";

bool only_letters(std::string_view core) {
    for (char c : core) {
        if (!ascii_alpha(c) && c != '\'') return false;
    }
    return true;
}

bool sentence_initial(const std::vector<std::string>& out) {
    if (out.empty()) return true;
    const char last = out.back().back();
    return last == '.' || last == '!' || last == '?';
}

} // namespace

bool is_element_symbol(std::string_view word) {
    for (auto e : kElements) {
        if (e == word) return true;
    }
    return false;
}

void PreprocessConfig::validate() const {
    for (const auto& w : stopwords) {
        bool has_letter = false;
        for (char c : w) {
            if (ascii_alpha(c)) {
                has_letter = true;
            } else if (c != '\'' && c != '-') {
                throw ConfigError("stopword '" + w + "' contains a digit, sign or unit symbol");
            }
        }
        if (!has_letter) throw ConfigError("stopword '" + w + "' has no letters");
    }
}

Substitution replace_bond_lengths(std::string_view text) {
    return replace_quantities(text, match_length_unit, kNumToken);
}

Substitution replace_bond_angles(std::string_view text) {
    return replace_quantities(text, match_angle_unit, kAngToken);
}

Substitution remove_stopwords(std::string_view text, const StopwordSet& stopwords) {
    Substitution result;
    if (stopwords.empty()) {
        result.text = std::string(text);
        return result;
    }
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n' || text[i] == '\r')) ++i;
        if (i >= text.size()) break;
        std::size_t j = i;
        while (j < text.size() && !(text[j] == ' ' || text[j] == '\t' || text[j] == '\n' || text[j] == '\r')) ++j;
        const std::string_view word = text.substr(i, j - i);
        i = j;

        std::size_t b = 0, e = word.size();
        while (b < e && kLeadingPunct.find(word[b]) != std::string_view::npos) ++b;
        while (e > b && kTrailingPunct.find(word[e - 1]) != std::string_view::npos) --e;
        const std::string_view core = word.substr(b, e - b);

        bool removable = !core.empty() && core != kClsToken && core != kNumToken && core != kAngToken &&
                         only_letters(core) && stopwords.count(to_lower(core)) > 0;
        if (removable && is_element_symbol(core) && (core.size() == 1 || !sentence_initial(out)))
            removable = false;

        if (!removable) {
            out.emplace_back(word);
            continue;
        }
        ++result.count;
        if (!out.empty()) {
            for (char c : word.substr(e)) {
                if (kCarriedPunct.find(c) != std::string_view::npos) out.back().push_back(c);
            }
        }
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (k) result.text.push_back(' ');
        result.text += out[k];
    }
    return result;
}

std::string prepend_cls(std::string_view text) {
    std::string out(kClsToken);
    out.push_back(' ');
    out.append(text);
    return out;
}

ProcessedText preprocess(std::string_view description, const PreprocessConfig& config) {
    ProcessedText out;
    out.text = std::string(description);
    if (config.replace_num) {
        auto r = replace_bond_lengths(out.text);
        out.text = std::move(r.text);
        out.num_substitutions = r.count;
    }
    if (config.replace_ang) {
        auto r = replace_bond_angles(out.text);
        out.text = std::move(r.text);
        out.ang_substitutions = r.count;
    }
    if (config.remove_stopwords) {
        auto r = remove_stopwords(out.text, config.stopwords);
        out.text = std::move(r.text);
        out.stopwords_removed = r.count;
    }
    if (config.prepend_cls) out.text = prepend_cls(out.text);
    return out;
}

StopwordSet parse_stopwords(std::string_view content) {
    StopwordSet words;
    for (const auto& line : split(content, '\n')) {
        const auto w = trim(line);
        if (w.empty() || w.front() == '#') continue;
        words.insert(to_lower(w));
    }
    PreprocessConfig probe;
    probe.stopwords = words;
    probe.validate();
    return words;
}

StopwordSet load_stopwords(const std::string& path) { return parse_stopwords(read_file(path)); }

std::string format_stopwords(const StopwordSet& words) {
    std::string out;
    for (const auto& w : words) {
        out += w;
        out += '\n';
    }
    return out;
}

std::string default_stopwords_path() {
    if (const char* dir = std::getenv("LLMPROP_DATA_DIR")) return std::string(dir) + "/stopwords_en.txt";
    return std::string(LLMPROP_DATA_DIR) + "/stopwords_en.txt";
}

} // namespace llmprop
