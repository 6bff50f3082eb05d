#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "varitab/featurizer.hpp"
#include "varitab/ops.hpp"
#include "varitab/rng.hpp"

using namespace varitab;

namespace {

EmbeddingTables tables_for(Vocabulary& vocab, int64_t dim, uint64_t seed = 9) {
    Rng rng(seed);
    return EmbeddingTables::create(dim, vocab.size(), rng);
}

// random schema/row pair exercising every column kind and missing cells
struct RandomRowCase {
    std::vector<ColumnSchema> schema;
    Row row;
};

RandomRowCase random_row_case(Rng& rng) {
    RandomRowCase out;
    const std::vector<std::string> words = {"age",   "weight", "gender", "male",  "female",
                                            "score", "smoker", "city",   "tokyo", "oslo"};
    const size_t cols = 2 + rng.bounded(5);
    for (size_t c = 0; c < cols; ++c) {
        ColumnSchema col;
        col.name = words[rng.bounded(words.size())] + " " + std::to_string(c);
        const auto kind = rng.bounded(3);
        col.kind = kind == 0 ? ColumnKind::categorical
                             : (kind == 1 ? ColumnKind::binary : ColumnKind::numerical);
        out.schema.push_back(col);
        if (rng.uniform01() < 0.15) {
            out.row[col.name] = std::monostate{};
            continue;
        }
        switch (col.kind) {
            case ColumnKind::categorical:
                out.row[col.name] = words[rng.bounded(words.size())];
                break;
            case ColumnKind::binary:
                out.row[col.name] = rng.uniform01() < 0.5;
                break;
            case ColumnKind::numerical:
                out.row[col.name] = rng.uniform01();
                break;
        }
    }
    // guarantee at least one token source
    out.schema.push_back({.name = "anchor value", .kind = ColumnKind::numerical});
    out.row["anchor value"] = 0.5;
    return out;
}

}  // namespace

TEST_CASE("featurize_row per kind") {
    Vocabulary vocab;
    std::vector<ColumnSchema> schema = {{.name = "gender", .kind = ColumnKind::categorical},
                                        {.name = "smoking history", .kind = ColumnKind::binary},
                                        {.name = "weight", .kind = ColumnKind::numerical}};
    Row row{{"gender", std::string("male")}, {"smoking history", false}, {"weight", 0.6}};
    auto fr = featurize_row(row, schema, vocab, true);

    // categorical: column name ++ cell text
    REQUIRE(fr.cat_ids.size() == 2);
    CHECK(vocab.token(fr.cat_ids[0]) == "gender");
    CHECK(vocab.token(fr.cat_ids[1]) == "male");
    // binary zero: elided entirely
    CHECK(fr.bin_ids.empty());
    // numerical: name tokens plus the value
    REQUIRE(fr.num_col_ids.size() == 1);
    CHECK(vocab.token(fr.num_col_ids[0][0]) == "weight");
    CHECK(fr.num_values == std::vector<double>{0.6});
    CHECK(fr.token_count() == 2 + 0 + 1 + 1);

    Row row_on = row;
    row_on["smoking history"] = true;
    auto fr_on = featurize_row(row_on, schema, vocab, true);
    REQUIRE(fr_on.bin_ids.size() == 2);
    CHECK(vocab.token(fr_on.bin_ids[0]) == "smoking");
    CHECK(vocab.token(fr_on.bin_ids[1]) == "history");
}

TEST_CASE("all-missing row is an explicit error naming the row") {
    Vocabulary vocab;
    std::vector<ColumnSchema> schema = {{.name = "flag", .kind = ColumnKind::binary}};
    Row row{{"flag", false}};
    try {
        featurize_row(row, schema, vocab, true, 17);
        FAIL("expected empty-row error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("17") != std::string::npos);
    }
}

TEST_CASE("binary-zero and missing-cell elision equivalence, bitwise") {
    Rng rng(123);
    for (int trial = 0; trial < 60; ++trial) {
        auto c = random_row_case(rng);
        // append one binary column, once valued 0 and once deleted
        std::vector<ColumnSchema> with = c.schema;
        with.push_back({.name = "extra flag", .kind = ColumnKind::binary});
        Row row_zero = c.row;
        row_zero["extra flag"] = false;
        Row row_missing = c.row;
        row_missing["extra flag"] = std::monostate{};

        Vocabulary va, vb, vc;
        auto fr_zero = featurize_row(row_zero, with, va, true);
        auto fr_missing = featurize_row(row_missing, with, vb, true);
        auto fr_deleted = featurize_row(c.row, c.schema, vc, true);
        CHECK(fr_zero == fr_deleted);
        CHECK(fr_missing == fr_deleted);

        auto t = tables_for(va, 16, 9);
        // grow all three vocabularies identically, so tables are shared
        REQUIRE(va.size() == vc.size());
        Tensor e_zero = embed_row(fr_zero, t);
        Tensor e_deleted = embed_row(fr_deleted, t);
        CHECK(e_zero.values() == e_deleted.values());
    }
}

TEST_CASE("numeric block scales linearly before layer norm") {
    Vocabulary vocab;
    std::vector<ColumnSchema> schema = {{.name = "weight kg", .kind = ColumnKind::numerical}};
    Row row{{"weight kg", 0.37}};
    auto fr = featurize_row(row, schema, vocab, true);
    auto t = tables_for(vocab, 8);

    auto blocks = embed_feature_blocks(fr, t);
    REQUIRE(blocks.num.defined());

    // x = 0 gives the zero block
    auto fr0 = fr;
    fr0.num_values = {0.0};
    auto b0 = embed_feature_blocks(fr0, t);
    for (double v : b0.num.values()) CHECK(v == 0.0);

    // x = 1 reproduces the raw column embedding
    auto fr1 = fr;
    fr1.num_values = {1.0};
    auto b1 = embed_feature_blocks(fr1, t);
    Tensor raw = embed_rows(t.token_embedding, t.overflow_embedding, fr.num_col_ids[0]);
    CHECK(b1.num.values() == raw.values());

    // doubling x doubles the block
    auto fr2 = fr;
    fr2.num_values = {2.0 * 0.37};
    auto b2 = embed_feature_blocks(fr2, t);
    for (size_t i = 0; i < b2.num.values().size(); ++i) {
        CHECK(std::fabs(b2.num.values()[i] - 2.0 * blocks.num.values()[i]) < 1e-12);
    }
}

TEST_CASE("token count accounting") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        auto c = random_row_case(rng);
        Vocabulary vocab;
        auto fr = featurize_row(c.row, c.schema, vocab, true);
        int64_t expected = static_cast<int64_t>(fr.cat_ids.size() + fr.bin_ids.size());
        for (const auto& ids : fr.num_col_ids) expected += static_cast<int64_t>(ids.size());
        CHECK(fr.token_count() == expected + 1);

        auto t = tables_for(vocab, 8, trial + 1);
        Tensor e = embed_row(fr, t);
        CHECK(e.extent(0) == fr.token_count());
        CHECK(e.extent(1) == 8);
    }
}

TEST_CASE("embed_row is deterministic") {
    Rng rng(77);
    auto c = random_row_case(rng);
    Vocabulary vocab;
    auto fr = featurize_row(c.row, c.schema, vocab, true);
    auto t = tables_for(vocab, 12);
    CHECK(embed_row(fr, t).values() == embed_row(fr, t).values());
}

TEST_CASE("shared words map to shared ids across different tables") {
    Vocabulary vocab;  // one vocabulary serving two schemas
    std::vector<ColumnSchema> schema_a = {{.name = "smoking history", .kind = ColumnKind::binary}};
    std::vector<ColumnSchema> schema_b = {
        {.name = "previously smoked history", .kind = ColumnKind::binary}};
    Row row_a{{"smoking history", true}};
    Row row_b{{"previously smoked history", true}};
    auto fa = featurize_row(row_a, schema_a, vocab, true);
    auto fb = featurize_row(row_b, schema_b, vocab, true);
    const int64_t history_id = *vocab.lookup("history");
    CHECK(std::count(fa.bin_ids.begin(), fa.bin_ids.end(), history_id) == 1);
    CHECK(std::count(fb.bin_ids.begin(), fb.bin_ids.end(), history_id) == 1);
}

TEST_CASE("pad_batch shapes, mask, and per-row prefixes") {
    Vocabulary vocab;
    std::vector<ColumnSchema> schema = {{.name = "alpha beta", .kind = ColumnKind::categorical},
                                        {.name = "gamma", .kind = ColumnKind::numerical}};
    Row short_row{{"alpha beta", std::monostate{}}, {"gamma", 0.5}};   // 1 + cls = 2 tokens
    Row long_row{{"alpha beta", std::string("delta epsilon zeta")},    // 5 + 1 + cls = 7
                 {"gamma", 0.25}};
    auto fr_short = featurize_row(short_row, schema, vocab, true);
    auto fr_long = featurize_row(long_row, schema, vocab, true);
    auto t = tables_for(vocab, 8);

    auto single = pad_batch({fr_short}, t);
    CHECK(single.embeddings.shape() == Shape{1, fr_short.token_count(), 8});
    for (double v : single.mask.values()) CHECK(v == 1.0);

    auto batch = pad_batch({fr_short, fr_long}, t);
    const int64_t n_max = fr_long.token_count();
    CHECK(batch.embeddings.shape() == Shape{2, n_max, 8});
    for (int64_t i = 0; i < n_max; ++i) {
        CHECK(batch.mask.values()[i] == (i < fr_short.token_count() ? 1.0 : 0.0));
        CHECK(batch.mask.values()[n_max + i] == 1.0);
    }

    // row prefixes equal the standalone embeddings; padding rows are zero
    Tensor alone = embed_row(fr_short, t);
    for (int64_t i = 0; i < fr_short.token_count() * 8; ++i) {
        CHECK(batch.embeddings.values()[i] == alone.values()[i]);
    }
    for (int64_t i = fr_short.token_count() * 8; i < n_max * 8; ++i) {
        CHECK(batch.embeddings.values()[i] == 0.0);
    }

    CHECK_THROWS(pad_batch({}, t));
}

TEST_CASE("embedding table growth keeps existing rows and extends adam-sized grads") {
    Vocabulary vocab;
    Rng rng(5);
    auto t = EmbeddingTables::create(8, vocab.size(), rng);
    encode(tokenize("one two three"), vocab, true);
    const auto before = t.token_embedding.values();
    t.grow_to(vocab.size(), rng);
    CHECK(t.token_embedding.extent(0) == vocab.size());
    for (size_t i = 0; i < before.size(); ++i) {
        CHECK(t.token_embedding.values()[i] == before[i]);
    }
}
