// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace llmprop {

inline constexpr std::size_t kDefaultMaxLength = 888;
inline constexpr std::size_t kShortMaxLength = 512;

// Marks the start of a whitespace-delimited word inside a subword piece.
inline constexpr std::string_view kWordMarker = "\xE2\x96\x81"; // U+2581

using TokenId = std::int32_t;

struct SpecialIds {
    TokenId pad = 0;
    TokenId unk = 1;
    TokenId cls = 2;
    TokenId num = 3;
    TokenId ang = 4;
};

// Subword vocabulary with atomic special tokens. Encoding is greedy
// longest-match over the vocabulary, so the token->id table alone defines it.
class TokenizerBundle {
public:
    TokenizerBundle() = default;

    /// Builds from an id-ordered token list; missing special tokens are appended.
    static TokenizerBundle from_tokens(std::vector<std::string> tokens, std::size_t max_length = kDefaultMaxLength);

    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }
    const SpecialIds& special() const { return special_; }
    std::size_t max_length() const { return max_length_; }
    void set_max_length(std::size_t m) { max_length_ = m; }

    bool contains(std::string_view token) const { return index_.count(std::string(token)) > 0; }
    TokenId id_of(std::string_view token) const;
    const std::string& token_of(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }

    /// Text with a header block listing special tokens, then `token<TAB>id` lines.
    std::string serialize() const;
    static TokenizerBundle deserialize(std::string_view text);
    void save(const std::string& path) const;
    static TokenizerBundle load(const std::string& path);
    std::string hash() const;

    std::size_t longest_token_bytes() const { return longest_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
    SpecialIds special_;
    std::size_t max_length_ = kDefaultMaxLength;
    std::size_t longest_ = 1;
};

struct TokenizedExample {
    std::vector<TokenId> ids;
    std::vector<std::uint8_t> attention_mask;
    std::size_t original_length = 0;
};

/// Smallest vocab_size train_vocab accepts for this corpus (specials + alphabet).
std::size_t minimum_vocab_size(const std::vector<std::string>& corpus);

/// BPE merges over the corpus until vocab_size tokens exist or nothing is
/// left to merge. Ties between equally frequent pairs break on the pair's
/// strings, so the result depends only on corpus content and order.
TokenizerBundle train_vocab(const std::vector<std::string>& corpus, std::size_t vocab_size,
                            std::size_t max_length = kDefaultMaxLength);

/// Character-level vocabulary: special tokens plus the corpus alphabet.
TokenizerBundle character_vocab(const std::vector<std::string>& corpus, std::size_t max_length = kDefaultMaxLength);

/// Encodes and truncates to bundle.max_length(), keeping the front.
TokenizedExample encode(const TokenizerBundle& bundle, std::string_view text);
TokenizedExample encode(const TokenizerBundle& bundle, std::string_view text, std::size_t max_length);

std::string decode(const TokenizerBundle& bundle, const std::vector<TokenId>& ids);

using IdMatrix = Eigen::Matrix<TokenId, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Batch {
    IdMatrix ids;    // (batch, length)
    MaskMatrix mask; // 1 on real tokens, 0 on padding
    Eigen::Index rows() const { return ids.rows(); }
    Eigen::Index cols() const { return ids.cols(); }
};

/// Right-pads every example with pad_id to to_length.
Batch pad_batch(const std::vector<TokenizedExample>& examples, std::size_t to_length, TokenId pad_id);

} // namespace llmprop
