// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#include "llmprop/tokenizer.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "llmprop/common.hpp"
#include "llmprop/textprep.hpp"

namespace llmprop {

namespace {

constexpr std::string_view kPad = "[PAD]";
constexpr std::string_view kUnk = "[UNK]";

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::size_t utf8_len(unsigned char lead) {
    if (lead < 0x80) return 1;
    if ((lead >> 5) == 0x6) return 2;
    if ((lead >> 4) == 0xE) return 3;
    if ((lead >> 3) == 0x1E) return 4;
    return 1; // stray continuation byte: treat as one unit
}

std::vector<std::string> code_points(std::string_view s) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < s.size();) {
        const std::size_t n = std::min(utf8_len(static_cast<unsigned char>(s[i])), s.size() - i);
        out.emplace_back(s.substr(i, n));
        i += n;
    }
    return out;
}

struct Segment {
    bool special = false;
    std::string_view special_token;
    std::string word; // marker-prefixed when it starts a whitespace-delimited word
};

std::vector<Segment> pretokenize(std::string_view text) {
    std::vector<Segment> out;
    std::size_t i = 0;
    bool after_space = true;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            out.push_back(Segment{false, {}, std::move(current)});
            current.clear();
        }
    };
    while (i < text.size()) {
        if (is_space(text[i])) {
            flush();
            after_space = true;
            ++i;
            continue;
        }
        if (text[i] == '[') {
            std::string_view hit;
            for (auto tok : {kClsToken, kNumToken, kAngToken}) {
                if (text.substr(i, tok.size()) == tok) hit = tok;
            }
            if (!hit.empty()) {
                flush();
                out.push_back(Segment{true, hit, {}});
                i += hit.size();
                after_space = false;
                continue;
            }
        }
        if (current.empty() && after_space) current.append(kWordMarker);
        after_space = false;
        current.push_back(text[i]);
        ++i;
    }
    flush();
    return out;
}

std::vector<std::string> sorted_alphabet(const std::vector<std::string>& corpus) {
    std::set<std::string> alphabet;
    for (const auto& text : corpus) {
        for (const auto& seg : pretokenize(text)) {
            if (seg.special) continue;
            for (auto& cp : code_points(seg.word)) alphabet.insert(std::move(cp));
        }
    }
    return {alphabet.begin(), alphabet.end()};
}

std::vector<std::string> special_tokens() {
    return {std::string(kPad), std::string(kUnk), std::string(kClsToken), std::string(kNumToken),
            std::string(kAngToken)};
}

// Incremental BPE trainer state.
class BpeTrainer {
public:
    explicit BpeTrainer(const std::vector<std::string>& corpus) {
        std::map<std::string, std::int64_t> freq;
        for (const auto& text : corpus) {
            for (auto& seg : pretokenize(text)) {
                if (!seg.special) ++freq[seg.word];
            }
        }
        for (const auto& [word, count] : freq) {
            Word w;
            w.freq = count;
            for (const auto& cp : code_points(word)) w.syms.push_back(intern(cp));
            words_.push_back(std::move(w));
        }
        for (std::size_t wi = 0; wi < words_.size(); ++wi) add_pairs(wi);
    }

    const std::string& symbol(int id) const { return symbols_[static_cast<std::size_t>(id)]; }

    // Applies the best merge; returns the new symbol string or empty when done.
    std::string merge_best() {
        if (queue_.empty()) return {};
        const auto [neg_count, a, b] = *queue_.begin();
        const std::string merged = symbol(a) + symbol(b);
        const int c = intern(merged);
        const std::uint64_t key = pair_key(a, b);
        const auto where = where_[key];
        for (std::size_t wi : where) {
            remove_pairs(wi);
            auto& syms = words_[wi].syms;
            std::vector<int> next;
            next.reserve(syms.size());
            for (std::size_t k = 0; k < syms.size(); ++k) {
                if (k + 1 < syms.size() && syms[k] == a && syms[k + 1] == b) {
                    next.push_back(c);
                    ++k;
                } else {
                    next.push_back(syms[k]);
                }
            }
            syms = std::move(next);
            add_pairs(wi);
        }
        where_.erase(key);
        return merged;
    }

private:
    struct Word {
        std::vector<int> syms;
        std::int64_t freq = 0;
    };

    using Entry = std::tuple<std::int64_t, int, int>; // (-count, left, right)

    struct EntryLess {
        const BpeTrainer* self;
        bool operator()(const Entry& x, const Entry& y) const {
            if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) < std::get<0>(y);
            const auto& xl = self->symbol(std::get<1>(x));
            const auto& yl = self->symbol(std::get<1>(y));
            if (xl != yl) return xl < yl;
            return self->symbol(std::get<2>(x)) < self->symbol(std::get<2>(y));
        }
    };

    static std::uint64_t pair_key(int a, int b) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
    }

    int intern(const std::string& s) {
        const auto it = ids_.find(s);
        if (it != ids_.end()) return it->second;
        const int id = static_cast<int>(symbols_.size());
        symbols_.push_back(s);
        ids_.emplace(s, id);
        return id;
    }

    void bump(int a, int b, std::int64_t delta, std::size_t wi) {
        const std::uint64_t key = pair_key(a, b);
        auto& count = counts_[key];
        if (count > 0) queue_.erase(Entry{-count, a, b});
        count += delta;
        if (count > 0) {
            queue_.insert(Entry{-count, a, b});
            if (delta > 0) where_[key].insert(wi);
        } else {
            counts_.erase(key);
        }
    }

    void add_pairs(std::size_t wi) {
        const auto& w = words_[wi];
        for (std::size_t k = 0; k + 1 < w.syms.size(); ++k) bump(w.syms[k], w.syms[k + 1], w.freq, wi);
    }

    void remove_pairs(std::size_t wi) {
        const auto& w = words_[wi];
        for (std::size_t k = 0; k + 1 < w.syms.size(); ++k) bump(w.syms[k], w.syms[k + 1], -w.freq, wi);
    }

    std::vector<std::string> symbols_;
    std::unordered_map<std::string, int> ids_;
    std::vector<Word> words_;
    std::unordered_map<std::uint64_t, std::int64_t> counts_;
    std::unordered_map<std::uint64_t, std::set<std::size_t>> where_;
    std::set<Entry, EntryLess> queue_{EntryLess{this}};
};

} // namespace

TokenizerBundle TokenizerBundle::from_tokens(std::vector<std::string> tokens, std::size_t max_length) {
    TokenizerBundle b;
    b.max_length_ = max_length;
    for (auto& t : tokens) {
        if (t.empty()) throw ConfigError("empty token in vocabulary");
        if (b.index_.count(t)) throw ConfigError("duplicate token '" + t + "' in vocabulary");
        b.index_.emplace(t, static_cast<TokenId>(b.tokens_.size()));
        b.tokens_.push_back(std::move(t));
    }
    for (const auto& s : special_tokens()) {
        if (!b.index_.count(s)) {
            b.index_.emplace(s, static_cast<TokenId>(b.tokens_.size()));
            b.tokens_.push_back(s);
        }
    }
    b.special_ = SpecialIds{b.index_.at(std::string(kPad)), b.index_.at(std::string(kUnk)),
                            b.index_.at(std::string(kClsToken)), b.index_.at(std::string(kNumToken)),
                            b.index_.at(std::string(kAngToken))};
    for (const auto& t : b.tokens_) b.longest_ = std::max(b.longest_, t.size());
    return b;
}

TokenId TokenizerBundle::id_of(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    return it == index_.end() ? special_.unk : it->second;
}

std::string TokenizerBundle::serialize() const {
    std::ostringstream out;
    out << "#llmprop-vocab 1\n";
    out << "#size " << tokens_.size() << "\n";
    out << "#max_length " << max_length_ << "\n";
    out << "#special pad " << tokens_[special_.pad] << " " << special_.pad << "\n";
    out << "#special unk " << tokens_[special_.unk] << " " << special_.unk << "\n";
    out << "#special cls " << tokens_[special_.cls] << " " << special_.cls << "\n";
    out << "#special num " << tokens_[special_.num] << " " << special_.num << "\n";
    out << "#special ang " << tokens_[special_.ang] << " " << special_.ang << "\n";
    for (std::size_t i = 0; i < tokens_.size(); ++i) out << tokens_[i] << '\t' << i << '\n';
    return out.str();
}

TokenizerBundle TokenizerBundle::deserialize(std::string_view text) {
    std::vector<std::pair<std::int64_t, std::string>> entries;
    std::size_t max_length = kDefaultMaxLength;
    std::size_t line_no = 0;
    for (const auto& raw : split(text, '\n')) {
        ++line_no;
        std::string_view line = raw;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (line.front() == '#' && line.find('\t') == std::string_view::npos) {
            if (line.rfind("#max_length ", 0) == 0) {
                const auto v = parse_int(line.substr(12));
                if (!v || *v <= 0) throw DataError("vocab: bad max_length header");
                max_length = static_cast<std::size_t>(*v);
            }
            continue;
        }
        const auto tab = line.rfind('\t');
        if (tab == std::string_view::npos) throw DataError("vocab line " + std::to_string(line_no) + ": no tab");
        const auto id = parse_int(line.substr(tab + 1));
        if (!id || *id < 0) throw DataError("vocab line " + std::to_string(line_no) + ": bad id");
        entries.emplace_back(*id, std::string(line.substr(0, tab)));
    }
    std::sort(entries.begin(), entries.end());
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].first != static_cast<std::int64_t>(i))
            throw DataError("vocab ids are not contiguous from 0");
        tokens.push_back(std::move(entries[i].second));
    }
    return from_tokens(std::move(tokens), max_length);
}

void TokenizerBundle::save(const std::string& path) const { write_file(path, serialize()); }

TokenizerBundle TokenizerBundle::load(const std::string& path) { return deserialize(read_file(path)); }

std::string TokenizerBundle::hash() const { return hex64(fnv1a64(serialize())); }

std::size_t minimum_vocab_size(const std::vector<std::string>& corpus) {
    return special_tokens().size() + sorted_alphabet(corpus).size();
}

TokenizerBundle character_vocab(const std::vector<std::string>& corpus, std::size_t max_length) {
    if (corpus.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
    auto tokens = special_tokens();
    for (auto& cp : sorted_alphabet(corpus)) tokens.push_back(std::move(cp));
    return TokenizerBundle::from_tokens(std::move(tokens), max_length);
}

TokenizerBundle train_vocab(const std::vector<std::string>& corpus, std::size_t vocab_size, std::size_t max_length) {
    if (corpus.empty()) throw DataError("cannot train a vocabulary on an empty corpus");
    const std::size_t minimum = minimum_vocab_size(corpus);
    if (vocab_size < minimum)
        throw ConfigError("vocab_size " + std::to_string(vocab_size) + " below the minimum " +
                          std::to_string(minimum) + " (special tokens + alphabet)");

    auto tokens = special_tokens();
    std::unordered_set<std::string> have(tokens.begin(), tokens.end());
    for (auto& cp : sorted_alphabet(corpus)) {
        have.insert(cp);
        tokens.push_back(std::move(cp));
    }
    BpeTrainer trainer(corpus);
    while (tokens.size() < vocab_size) {
        std::string merged = trainer.merge_best();
        if (merged.empty()) break;
        if (have.insert(merged).second) tokens.push_back(std::move(merged));
    }
    return TokenizerBundle::from_tokens(std::move(tokens), max_length);
}

TokenizedExample encode(const TokenizerBundle& bundle, std::string_view text) {
    return encode(bundle, text, bundle.max_length());
}

TokenizedExample encode(const TokenizerBundle& bundle, std::string_view text, std::size_t max_length) {
    TokenizedExample ex;
    const auto& sp = bundle.special();
    for (const auto& seg : pretokenize(text)) {
        if (seg.special) {
            ex.ids.push_back(seg.special_token == kClsToken   ? sp.cls
                             : seg.special_token == kNumToken ? sp.num
                                                              : sp.ang);
            continue;
        }
        const std::string_view w = seg.word;
        std::size_t pos = 0;
        while (pos < w.size()) {
            std::size_t len = std::min(bundle.longest_token_bytes(), w.size() - pos);
            TokenId found = -1;
            for (; len > 0; --len) {
                const auto id = bundle.id_of(w.substr(pos, len));
                if (id != sp.unk) {
                    found = id;
                    break;
                }
            }
            if (found < 0) {
                ex.ids.push_back(sp.unk);
                pos += std::min(utf8_len(static_cast<unsigned char>(w[pos])), w.size() - pos);
            } else {
                ex.ids.push_back(found);
                pos += len;
            }
        }
    }
    ex.original_length = ex.ids.size();
    if (ex.ids.size() > max_length) ex.ids.resize(max_length);
    ex.attention_mask.assign(ex.ids.size(), 1);
    return ex;
}

std::string decode(const TokenizerBundle& bundle, const std::vector<TokenId>& ids) {
    const auto& sp = bundle.special();
    std::string out;
    for (TokenId id : ids) {
        if (id == sp.pad) continue;
        if (id == sp.cls || id == sp.num || id == sp.ang || id == sp.unk) {
            if (!out.empty()) out.push_back(' ');
            out += bundle.token_of(id);
            continue;
        }
        out += bundle.token_of(id);
    }
    // word markers become spaces
    std::string text;
    for (std::size_t i = 0; i < out.size();) {
        if (out.compare(i, kWordMarker.size(), kWordMarker) == 0) {
            if (!text.empty() && text.back() != ' ') text.push_back(' ');
            i += kWordMarker.size();
        } else {
            text.push_back(out[i++]);
        }
    }
    return std::string(trim(text));
}

Batch pad_batch(const std::vector<TokenizedExample>& examples, std::size_t to_length, TokenId pad_id) {
    Batch batch;
    const auto rows = static_cast<Eigen::Index>(examples.size());
    const auto cols = static_cast<Eigen::Index>(to_length);
    batch.ids.setConstant(rows, cols, pad_id);
    batch.mask.setZero(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& ex = examples[static_cast<std::size_t>(r)];
        if (ex.ids.size() > to_length)
            throw DataError("example of length " + std::to_string(ex.ids.size()) + " exceeds batch length " +
                            std::to_string(to_length));
        for (std::size_t c = 0; c < ex.ids.size(); ++c) {
            batch.ids(r, static_cast<Eigen::Index>(c)) = ex.ids[c];
            batch.mask(r, static_cast<Eigen::Index>(c)) = ex.attention_mask.empty() ? 1 : ex.attention_mask[c];
        }
    }
    return batch;
}

} // namespace llmprop
