#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "varitab/csv.hpp"
#include "varitab/preprocess.hpp"
#include "varitab/rng.hpp"

using namespace varitab;

namespace {

std::filesystem::path scratch_dir() {
    auto dir = std::filesystem::temp_directory_path() / "varitab_tabular_test";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string write_file(const std::string& name, const std::string& content) {
    const auto path = scratch_dir() / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path.string();
}

bool datasets_equal(const TableDataset& a, const TableDataset& b) {
    if (a.schema.size() != b.schema.size() || a.rows.size() != b.rows.size()) return false;
    for (size_t c = 0; c < a.schema.size(); ++c) {
        if (a.schema[c].name != b.schema[c].name || a.schema[c].kind != b.schema[c].kind)
            return false;
    }
    for (size_t r = 0; r < a.rows.size(); ++r) {
        if (a.rows[r] != b.rows[r]) return false;
    }
    return a.labels == b.labels;
}

std::set<std::string> column_names(const TableDataset& ds) {
    std::set<std::string> names;
    for (const auto& c : ds.schema) names.insert(c.name);
    return names;
}

}  // namespace

TEST_CASE("load_csv basics") {
    const auto path = write_file("basic.csv", "gender\nmale\n");
    auto ds = load_csv(path, {{.name = "gender", .kind = ColumnKind::categorical}}, true);
    REQUIRE(ds.rows.size() == 1);
    CHECK(std::get<std::string>(ds.rows[0].at("gender")) == "male");
}

TEST_CASE("empty numerical cell loads as missing, row retained") {
    const auto path = write_file("missing.csv", "age\n\n41\n");
    auto ds = load_csv(path, {{.name = "age", .kind = ColumnKind::numerical}}, true);
    REQUIRE(ds.rows.size() == 2);
    CHECK(cell_missing(ds.rows[0].at("age")));
    CHECK(std::get<double>(ds.rows[1].at("age")) == 41.0);
}

TEST_CASE("bad binary cell is a parse error naming row and column") {
    const auto path = write_file("badbin.csv", "smoker\nmaybe\n");
    try {
        load_csv(path, {{.name = "smoker", .kind = ColumnKind::binary}}, true);
        FAIL("expected parse error");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 1") != std::string::npos);
        CHECK(msg.find("smoker") != std::string::npos);
    }
}

TEST_CASE("binary spellings") {
    const auto path = write_file("bins.csv", "flag\nTRUE\nno\nYes\n0\n");
    auto ds = load_csv(path, {{.name = "flag", .kind = ColumnKind::binary}}, true);
    REQUIRE(ds.rows.size() == 4);
    CHECK(std::get<bool>(ds.rows[0].at("flag")));
    CHECK_FALSE(std::get<bool>(ds.rows[1].at("flag")));
    CHECK(std::get<bool>(ds.rows[2].at("flag")));
    CHECK_FALSE(std::get<bool>(ds.rows[3].at("flag")));
}

TEST_CASE("missing file and missing header column") {
    CHECK_THROWS(load_csv("/nonexistent/nowhere.csv",
                          {{.name = "x", .kind = ColumnKind::numerical}}, true));
    const auto path = write_file("header.csv", "a,b\n1,2\n");
    CHECK_THROWS(load_csv(path, {{.name = "c", .kind = ColumnKind::numerical}}, true));
}

TEST_CASE("quoted fields round-trip") {
    const auto records = parse_csv("a,\"b,c\",\"say \"\"hi\"\"\"\r\nd,,f\n");
    REQUIRE(records.size() == 2);
    CHECK(records[0][1] == "b,c");
    CHECK(records[0][2] == "say \"hi\"");
    CHECK(records[1][1] == "");
}

TEST_CASE("label column extraction") {
    const auto path = write_file("labeled.csv", "x,label\n0.5,1\n0.25,0\n");
    auto ds = load_csv(path, {{.name = "x", .kind = ColumnKind::numerical}}, true, "label");
    REQUIRE(ds.labels.has_value());
    CHECK(*ds.labels == std::vector<int>{1, 0});
    CHECK_THROWS(load_csv(path, {{.name = "x", .kind = ColumnKind::numerical}}, true, "target"));
}

TEST_CASE("fit_normalization") {
    TableDataset ds;
    ds.schema = {{.name = "v", .kind = ColumnKind::numerical}};
    for (double x : {10.0, 20.0, 30.0}) ds.rows.push_back({{"v", x}});
    auto normed = fit_normalization(ds);
    CHECK(std::get<double>(normed.rows[0].at("v")) == 0.0);
    CHECK(std::get<double>(normed.rows[1].at("v")) == 0.5);
    CHECK(std::get<double>(normed.rows[2].at("v")) == 1.0);
    CHECK(normed.schema[0].observed_min == 10.0);
    CHECK(normed.schema[0].observed_max == 30.0);

    // constant column maps to zero
    TableDataset flat;
    flat.schema = ds.schema;
    flat.rows = {{{"v", 5.0}}, {{"v", 5.0}}};
    auto fn = fit_normalization(flat);
    CHECK(std::get<double>(fn.rows[0].at("v")) == 0.0);
    CHECK(std::get<double>(fn.rows[1].at("v")) == 0.0);

    // inference values clamp into [0, 1]
    TableDataset infer;
    infer.schema = ds.schema;
    infer.rows = {{{"v", 40.0}}, {{"v", 5.0}}};
    auto clamped = normalize_with_schema(infer, normed.schema);
    CHECK(std::get<double>(clamped.rows[0].at("v")) == 1.0);
    CHECK(std::get<double>(clamped.rows[1].at("v")) == 0.0);
}

TEST_CASE("normalized training cells stay in [0,1]") {
    Rng rng(99);
    TableDataset ds;
    for (int c = 0; c < 4; ++c) {
        ds.schema.push_back({.name = "c" + std::to_string(c), .kind = ColumnKind::numerical});
    }
    for (int r = 0; r < 50; ++r) {
        Row row;
        for (const auto& col : ds.schema) {
            if (rng.uniform01() < 0.1) {
                row[col.name] = std::monostate{};
            } else {
                row[col.name] = rng.uniform(-100.0, 100.0);
            }
        }
        ds.rows.push_back(std::move(row));
    }
    auto normed = fit_normalization(ds);
    for (const auto& row : normed.rows) {
        for (const auto& [name, cell] : row) {
            if (cell_missing(cell)) continue;
            const double v = std::get<double>(cell);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("apply_codebook") {
    TableDataset ds;
    ColumnSchema gender{.name = "gender", .kind = ColumnKind::categorical};
    gender.codebook = {{"1", "female"}, {"0", "male"}};
    ds.schema = {gender, {.name = "color", .kind = ColumnKind::categorical}};
    ds.rows = {{{"gender", std::string("1")}, {"color", std::string("red")}},
               {{"gender", std::string("unknown-code")}, {"color", std::string("blue")}}};
    auto mapped = apply_codebook(ds);
    CHECK(std::get<std::string>(mapped.rows[0].at("gender")) == "female");
    CHECK(std::get<std::string>(mapped.rows[1].at("gender")) == "unknown-code");
    CHECK(std::get<std::string>(mapped.rows[0].at("color")) == "red");
}

namespace {

TableDataset numbered_dataset(size_t cols, size_t rows, bool labels = false) {
    TableDataset ds;
    ds.name = "numbered";
    for (size_t c = 0; c < cols; ++c) {
        ds.schema.push_back({.name = "c" + std::to_string(c), .kind = ColumnKind::numerical});
    }
    std::vector<int> ys;
    for (size_t r = 0; r < rows; ++r) {
        Row row;
        for (const auto& col : ds.schema) row[col.name] = static_cast<double>(r);
        ds.rows.push_back(std::move(row));
        ys.push_back(static_cast<int>(r % 2));
    }
    if (labels) ds.labels = ys;
    return ds;
}

}  // namespace

TEST_CASE("split_columns zeroshot: disjoint thirds") {
    auto ds = numbered_dataset(6, 9);
    auto sets = split_columns(ds, {.mode = SplitMode::zeroshot, .seed = 3});
    REQUIRE(sets.size() == 3);
    for (const auto& s : sets) CHECK(s.column_count() == 2);
    auto n1 = column_names(sets[0]), n2 = column_names(sets[1]), n3 = column_names(sets[2]);
    for (const auto& n : n1) {
        CHECK(n2.count(n) == 0);
        CHECK(n3.count(n) == 0);
    }
    for (const auto& n : n2) CHECK(n3.count(n) == 0);
}

TEST_CASE("split_columns transfer: sizes and overlap from the ratio") {
    auto ds = numbered_dataset(4, 10);
    auto sets = split_columns(ds, {.mode = SplitMode::transfer, .seed = 1, .overlap_ratio = 0.5});
    REQUIRE(sets.size() == 2);
    CHECK(sets[0].column_count() == 3);
    CHECK(sets[1].column_count() == 3);
    auto n1 = column_names(sets[0]), n2 = column_names(sets[1]);
    size_t shared = 0;
    for (const auto& n : n1) shared += n2.count(n);
    CHECK(shared == 2);
}

TEST_CASE("split_columns incremental: nested column sets") {
    auto ds = numbered_dataset(3, 9);
    auto sets = split_columns(ds, {.mode = SplitMode::incremental, .seed = 5});
    REQUIRE(sets.size() == 3);
    CHECK(sets[0].column_count() == 1);
    CHECK(sets[1].column_count() == 2);
    CHECK(sets[2].column_count() == 3);
    auto n1 = column_names(sets[0]), n2 = column_names(sets[1]), n3 = column_names(sets[2]);
    for (const auto& n : n1) CHECK(n2.count(n) == 1);
    for (const auto& n : n2) CHECK(n3.count(n) == 1);
}

TEST_CASE("split_columns guards") {
    auto tiny = numbered_dataset(2, 4);
    CHECK_THROWS(split_columns(tiny, {.mode = SplitMode::zeroshot, .seed = 0}));
    CHECK_THROWS(split_columns(tiny, {.mode = SplitMode::incremental, .seed = 0}));
    CHECK_NOTHROW(split_columns(tiny, {.mode = SplitMode::transfer, .seed = 0}));
}

TEST_CASE("split_columns rows partition the table and splits are deterministic") {
    auto ds = numbered_dataset(5, 23, true);
    for (SplitMode mode : {SplitMode::incremental, SplitMode::transfer, SplitMode::zeroshot}) {
        SplitSpec spec{.mode = mode, .seed = 17, .overlap_ratio = 0.4};
        auto sets = split_columns(ds, spec);
        // rows are identified by their value (constant across the row)
        std::multiset<double> seen;
        size_t total = 0;
        for (const auto& s : sets) {
            total += s.row_count();
            for (const auto& row : s.rows) {
                seen.insert(std::get<double>(row.begin()->second));
            }
        }
        CHECK(total == ds.row_count());
        CHECK(seen.size() == ds.row_count());
        for (size_t r = 0; r < ds.row_count(); ++r) {
            CHECK(seen.count(static_cast<double>(r)) == 1);
        }

        auto again = split_columns(ds, spec);
        REQUIRE(again.size() == sets.size());
        for (size_t i = 0; i < sets.size(); ++i) CHECK(datasets_equal(sets[i], again[i]));
    }
}

TEST_CASE("csv round trip preserves the dataset") {
    Rng rng(31);
    TableDataset ds;
    ds.schema = {{.name = "city", .kind = ColumnKind::categorical},
                 {.name = "smoker", .kind = ColumnKind::binary},
                 {.name = "weight", .kind = ColumnKind::numerical}};
    std::vector<int> labels;
    const std::vector<std::string> cities = {"new york", "oslo, east", "tokyo \"west\"", ""};
    for (int r = 0; r < 40; ++r) {
        Row row;
        const auto& city = cities[rng.bounded(cities.size())];
        if (!city.empty()) row["city"] = city;
        else row["city"] = std::monostate{};
        if (rng.uniform01() < 0.8) row["smoker"] = rng.uniform01() < 0.5;
        else row["smoker"] = std::monostate{};
        if (rng.uniform01() < 0.9) row["weight"] = rng.uniform(-10.0, 500.0);
        else row["weight"] = std::monostate{};
        ds.rows.push_back(std::move(row));
        labels.push_back(static_cast<int>(rng.bounded(2)));
    }
    ds.labels = labels;

    const auto path = (scratch_dir() / "roundtrip.csv").string();
    save_csv(ds, path, "label");
    auto back = load_csv(path, ds.schema, true, "label");
    CHECK(datasets_equal(ds, back));

    // serialize the reloaded dataset again: files must be identical
    const auto path2 = (scratch_dir() / "roundtrip2.csv").string();
    save_csv(back, path2, "label");
    std::ifstream f1(path), f2(path2);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
}

TEST_CASE("schema manifest round trip") {
    std::vector<ColumnSchema> schema = {{.name = "gender", .kind = ColumnKind::categorical},
                                        {.name = "smoker", .kind = ColumnKind::binary},
                                        {.name = "age", .kind = ColumnKind::numerical}};
    schema[0].codebook = {{"0", "male"}, {"1", "female"}};
    const auto path = (scratch_dir() / "manifest.schema").string();
    save_schema_manifest(schema, path);
    auto back = load_schema_manifest(path);
    REQUIRE(back.size() == 3);
    CHECK(back[0].name == "gender");
    CHECK(back[0].kind == ColumnKind::categorical);
    CHECK(back[0].codebook.at("1") == "female");
    CHECK(back[1].kind == ColumnKind::binary);
    CHECK(back[2].kind == ColumnKind::numerical);

    // lenient whitespace and short kind names parse too
    const auto loose = write_file("loose.schema", "  age \tnum\nname\tcat\t1=a;2=b\n");
    auto cols = load_schema_manifest(loose);
    CHECK(cols[0].name == "age");
    CHECK(cols[0].kind == ColumnKind::numerical);
    CHECK(cols[1].codebook.size() == 2);

    CHECK_THROWS(load_schema_manifest(write_file("dup.schema", "a\tcat\t1=x;1=y\n")));
}

TEST_CASE("dataset validation") {
    TableDataset ds;
    ds.schema = {{.name = "x", .kind = ColumnKind::numerical}};
    ds.rows = {{{"x", 1.0}}, {{"x", 2.0}}};
    ds.labels = std::vector<int>{1};  // shorter than rows
    CHECK_THROWS(ds.validate());
    ds.labels = std::vector<int>{1, 0};
    CHECK_NOTHROW(ds.validate());
}
