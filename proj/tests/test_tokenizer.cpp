#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "varitab/rng.hpp"
#include "varitab/tokenizer.hpp"

using namespace varitab;

TEST_CASE("tokenize") {
    CHECK(tokenize("Smoking History") == std::vector<std::string>{"smoking", "history"});
    CHECK(tokenize("age>=65") == std::vector<std::string>{"age", "65"});
    CHECK(tokenize("") == std::vector<std::string>{});
    CHECK(tokenize("  weird--cases_here 12.5 ") ==
          std::vector<std::string>{"weird", "cases", "here", "12", "5"});
}

TEST_CASE("tokenize is idempotent on its own joined output") {
    Rng rng(40);
    const std::string alphabet = "aB9 ,.-_#\t(\"x)!Z";
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        const size_t len = rng.bounded(30);
        for (size_t i = 0; i < len; ++i) text += alphabet[rng.bounded(alphabet.size())];
        auto first = tokenize(text);
        std::string joined;
        for (const auto& w : first) {
            if (!joined.empty()) joined += ' ';
            joined += w;
        }
        CHECK(tokenize(joined) == first);
    }
}

TEST_CASE("vocabulary reserved ids") {
    Vocabulary vocab;
    CHECK(vocab.size() == 2);
    CHECK(vocab.token(Vocabulary::kPadId) == "[pad]");
    CHECK(vocab.token(Vocabulary::kClsId) == "[cls]");
}

TEST_CASE("encode lookup and growth") {
    Vocabulary vocab;
    vocab.add("gender");
    auto seq = encode({"gender"}, vocab, false);
    CHECK(seq.ids == std::vector<int64_t>{2});

    Vocabulary fresh;
    auto grown = encode({"new"}, fresh, true);
    CHECK(fresh.size() == 3);
    CHECK(grown.ids == std::vector<int64_t>{2});
}

TEST_CASE("unknown tokens map into the overflow bucket range deterministically") {
    Vocabulary vocab;
    vocab.add("known");
    const int64_t size = vocab.size();
    auto a = encode({"never-seen"}, vocab, false);
    auto b = encode({"never-seen"}, vocab, false);
    REQUIRE(a.ids.size() == 1);
    CHECK(a.ids == b.ids);
    CHECK(a.ids[0] >= size);
    CHECK(a.ids[0] < size + Vocabulary::kOverflowSize);
    CHECK(vocab.size() == size);  // no growth happened

    vocab.set_frozen(true);
    auto c = encode({"also-new"}, vocab, true);  // frozen wins over allow_grow
    CHECK(c.ids[0] >= size);
    CHECK(vocab.size() == size);
}

TEST_CASE("growth is prefix-stable") {
    Vocabulary vocab;
    auto first = encode(tokenize("systolic blood pressure"), vocab, true);
    const auto snapshot = first.ids;
    encode(tokenize("entirely different words arriving later"), vocab, true);
    auto again = encode(tokenize("systolic blood pressure"), vocab, true);
    CHECK(again.ids == snapshot);
}

TEST_CASE("encode of tokenize is deterministic on a frozen vocabulary") {
    Vocabulary vocab;
    encode(tokenize("age weight gender"), vocab, true);
    vocab.set_frozen(true);
    const std::string text = "Weight and AGE with novel-word";
    auto a = encode(tokenize(text), vocab, false);
    auto b = encode(tokenize(text), vocab, false);
    CHECK(a.ids == b.ids);
}

TEST_CASE("vocabulary serialization round trip") {
    Vocabulary vocab;
    encode(tokenize("alpha beta gamma 42"), vocab, true);
    const std::string text = vocab.serialize();
    CHECK(text.substr(0, 12) == "[pad]\n[cls]\n");
    auto back = Vocabulary::deserialize(text);
    CHECK(back == vocab);

    CHECK_THROWS(Vocabulary::deserialize("[cls]\n[pad]\n"));
    CHECK_THROWS(Vocabulary::deserialize(""));
}

TEST_CASE("frozen vocabulary rejects direct adds") {
    Vocabulary vocab;
    vocab.set_frozen(true);
    CHECK_THROWS(vocab.add("nope"));
}
