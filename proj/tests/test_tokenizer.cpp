// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sstream>

#include "llmprop/textprep.hpp"
#include "llmprop/tokenizer.hpp"
#include "support.hpp"

using namespace llmprop;

namespace {

std::vector<std::string> processed_corpus(std::size_t n) {
    PreprocessConfig cfg;
    cfg.stopwords = load_stopwords(default_stopwords_path());
    std::vector<std::string> out;
    for (const auto& r : testing::toy_records(n, 9)) out.push_back(preprocess(r.description, cfg).text);
    for (const auto& id : testing::table_ids()) out.push_back(testing::golden(id + ".processed.txt"));
    return out;
}

std::string normalize_space(const std::string& s) {
    std::istringstream in(s);
    std::string out;
    for (std::string w; in >> w;) out += (out.empty() ? "" : " ") + w;
    return out;
}

std::string long_text(std::size_t words) {
    std::string t = "[CLS]";
    for (std::size_t i = 0; i < words; ++i) t += i % 7 == 0 ? " [NUM]" : " bond";
    return t;
}

} // namespace

TEST_CASE("special tokens are atomic with fixed ids") {
    const auto tok = train_vocab(processed_corpus(50), 400);
    CHECK(tok.special().pad == 0);
    CHECK(tok.special().unk == 1);
    CHECK(tok.special().cls == 2);
    CHECK(tok.special().num == 3);
    CHECK(tok.special().ang == 4);
    const auto e = encode(tok, "[CLS] x [NUM] y [ANG].");
    CHECK(e.ids.front() == tok.special().cls);
    CHECK(std::count(e.ids.begin(), e.ids.end(), tok.special().num) == 1);
    CHECK(std::count(e.ids.begin(), e.ids.end(), tok.special().ang) == 1);
    const auto glued = encode(tok, "[NUM][ANG][CLS]");
    CHECK(glued.ids == std::vector<TokenId>{3, 4, 2});
}

TEST_CASE("truncation keeps the front") {
    const auto tok = train_vocab(processed_corpus(50), 400);
    const auto e = encode(tok, long_text(1199));
    CHECK(e.original_length == 1200);
    CHECK(e.ids.size() == kDefaultMaxLength);
    CHECK(e.ids.front() == tok.special().cls);
    CHECK(e.attention_mask.size() == kDefaultMaxLength);

    const auto full = encode(tok, long_text(1199), 5000);
    CHECK(std::equal(e.ids.begin(), e.ids.end(), full.ids.begin()));

    const auto shorter = encode(tok, long_text(1199), kShortMaxLength);
    CHECK(std::equal(shorter.ids.begin(), shorter.ids.end(), e.ids.begin()));
}

TEST_CASE("empty input") {
    const auto tok = character_vocab({"abc"});
    const auto e = encode(tok, "");
    CHECK(e.ids.empty());
    CHECK(e.attention_mask.empty());
    CHECK(e.original_length == 0);
    CHECK(encode(tok, "   \t ").ids.empty());
}

TEST_CASE("unknown characters map to [UNK]") {
    const auto tok = character_vocab({"abc"});
    const auto e = encode(tok, "abz");
    REQUIRE(e.ids.size() == 4); // marker, a, b, z
    CHECK(e.ids.back() == tok.special().unk);
    CHECK(encode(tok, "Å").ids.back() == tok.special().unk);
}

TEST_CASE("pad_batch shapes and errors") {
    const auto tok = character_vocab({"abc def"});
    const std::vector<TokenizedExample> ex = {encode(tok, "abc"), encode(tok, "a")};
    const auto b = pad_batch(ex, 5, tok.special().pad);
    CHECK(b.rows() == 2);
    CHECK(b.cols() == 5);
    CHECK(b.mask.row(0).cast<int>().sum() == 4);
    CHECK(b.mask.row(1).cast<int>().sum() == 2);
    for (Eigen::Index r = 0; r < 2; ++r)
        for (Eigen::Index c = 0; c < 5; ++c) CHECK((b.mask(r, c) == 0) == (b.ids(r, c) == tok.special().pad));
    CHECK_THROWS_AS(pad_batch(ex, 3, 0), DataError);
    const auto empty = pad_batch({}, 7, 0);
    CHECK(empty.rows() == 0);
}

TEST_CASE("train_vocab is deterministic and honours the size budget") {
    const auto corpus = processed_corpus(120);
    const auto a = train_vocab(corpus, 300);
    const auto b = train_vocab(corpus, 300);
    CHECK(a.tokens() == b.tokens());
    CHECK(a.hash() == b.hash());
    CHECK(a.size() == 300);

    // Small corpora run out of merges before the default budget.
    const auto capped = train_vocab(corpus, 32000);
    CHECK(capped.size() <= 32000);
    CHECK(capped.size() > 300);
    const auto again = train_vocab(corpus, capped.size() + 100);
    CHECK(again.tokens() == capped.tokens());

    CHECK_THROWS_AS(train_vocab(corpus, minimum_vocab_size(corpus) - 1), ConfigError);
    CHECK_NOTHROW(train_vocab(corpus, minimum_vocab_size(corpus)));
    CHECK_THROWS_AS(train_vocab({}, 100), DataError);

    const auto tiny = train_vocab({"a"}, 100);
    CHECK(tiny.contains("a"));
    CHECK(tiny.contains(std::string(kWordMarker) + "a"));
}

TEST_CASE("merged tokens shorten encodings") {
    const auto corpus = processed_corpus(120);
    const auto chars = character_vocab(corpus);
    const auto bpe = train_vocab(corpus, 600);
    std::size_t n_chars = 0, n_bpe = 0;
    for (const auto& t : corpus) {
        n_chars += encode(chars, t, 100000).ids.size();
        n_bpe += encode(bpe, t, 100000).ids.size();
    }
    CHECK(n_bpe * 2 < n_chars);
}

TEST_CASE("decode inverts encode on descriptions") {
    const auto corpus = processed_corpus(120);
    const auto tok = train_vocab(corpus, 500);
    for (const auto& id : testing::table_ids()) {
        const std::string raw = testing::golden(id + ".raw.txt");
        const auto t2 = train_vocab({raw}, 200);
        CHECK(decode(t2, encode(t2, raw, 100000).ids) == normalize_space(raw));
    }
    for (const auto& text : corpus) {
        const auto ids = encode(tok, text, 100000).ids;
        CHECK(encode(tok, decode(tok, ids), 100000).ids == ids);
    }
}

TEST_CASE("no pad id where the mask is set") {
    const auto corpus = processed_corpus(60);
    const auto tok = train_vocab(corpus, 400);
    std::vector<TokenizedExample> ex;
    for (const auto& t : corpus) ex.push_back(encode(tok, t));
    std::size_t longest = 0;
    for (const auto& e : ex) longest = std::max(longest, e.ids.size());
    const auto b = pad_batch(ex, longest, tok.special().pad);
    for (Eigen::Index i = 0; i < b.ids.size(); ++i)
        if (b.mask.data()[i]) CHECK(b.ids.data()[i] != tok.special().pad);
}

TEST_CASE("vocabulary serialization round trip") {
    auto tok = TokenizerBundle::from_tokens({"#", "#x", "a\xC3\x85", "b"}, 123);
    CHECK(tok.size() == 9);
    const auto back = TokenizerBundle::deserialize(tok.serialize());
    CHECK(back.tokens() == tok.tokens());
    CHECK(back.max_length() == 123);
    CHECK(back.hash() == tok.hash());
    CHECK(back.id_of("#") == 0);

    testing::ScratchDir dir("tokenizer_io");
    const auto trained = train_vocab(processed_corpus(30), 250);
    trained.save(dir.file("vocab.tsv"));
    CHECK(TokenizerBundle::load(dir.file("vocab.tsv")).tokens() == trained.tokens());

    CHECK_THROWS_AS(TokenizerBundle::deserialize("a\t0\nb\t2\n"), DataError);
    CHECK_THROWS_AS(TokenizerBundle::deserialize("a 0\n"), DataError);
    CHECK_THROWS_AS(TokenizerBundle::from_tokens({"a", "a"}), ConfigError);
}
