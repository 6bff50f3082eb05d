#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "support/grad_check.hpp"
#include "support/oracles.hpp"
#include "varitab/ops.hpp"
#include "varitab/rng.hpp"
#include "varitab/vpcl.hpp"

using namespace varitab;

namespace {

std::vector<ColumnSchema> columns(int n) {
    std::vector<ColumnSchema> out;
    for (int i = 0; i < n; ++i) {
        out.push_back({.name = "c" + std::to_string(i + 1), .kind = ColumnKind::numerical});
    }
    return out;
}

std::vector<std::string> names(const std::vector<ColumnSchema>& cols) {
    std::vector<std::string> out;
    for (const auto& c : cols) out.push_back(c.name);
    return out;
}

// nested views [sample][view][dim] flattened row-major into a ContrastBatch
ContrastBatch batch_from(const std::vector<std::vector<std::vector<double>>>& projections,
                         std::optional<std::vector<int>> labels = std::nullopt) {
    ContrastBatch batch;
    batch.batch_size = static_cast<int64_t>(projections.size());
    batch.views = static_cast<int64_t>(projections.front().size());
    const int64_t d = static_cast<int64_t>(projections.front().front().size());
    std::vector<double> flat;
    for (const auto& sample : projections)
        for (const auto& view : sample) flat.insert(flat.end(), view.begin(), view.end());
    batch.projections = Tensor::from({batch.batch_size * batch.views, d}, std::move(flat));
    batch.labels = std::move(labels);
    return batch;
}

std::vector<std::vector<std::vector<double>>> random_projections(Rng& rng, size_t B, size_t K,
                                                                 size_t d) {
    std::vector<std::vector<std::vector<double>>> out(B);
    for (auto& sample : out) {
        sample.resize(K);
        for (auto& view : sample) {
            view.resize(d);
            for (auto& x : view) x = rng.uniform(-2.0, 2.0);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("partition_columns slices and overlaps") {
    auto c4 = columns(4);
    auto plain = partition_columns(c4, {.partitions = 2, .overlap_ratio = 0.0});
    REQUIRE(plain.size() == 2);
    CHECK(names(plain[0]) == std::vector<std::string>{"c1", "c2"});
    CHECK(names(plain[1]) == std::vector<std::string>{"c3", "c4"});

    auto one = partition_columns(c4, {.partitions = 1});
    REQUIRE(one.size() == 1);
    CHECK(one[0].size() == 4);

    auto lapped = partition_columns(c4, {.partitions = 2, .overlap_ratio = 0.5});
    CHECK(names(lapped[0]) == std::vector<std::string>{"c1", "c2"});
    CHECK(names(lapped[1]) == std::vector<std::string>{"c2", "c3", "c4"});

    CHECK_THROWS(partition_columns(c4, {.partitions = 5}));
    CHECK_THROWS(partition_columns(c4, {.partitions = 0}));
}

TEST_CASE("partitions jointly cover all columns") {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const int C = 1 + static_cast<int>(rng.bounded(12));
        const int K = 1 + static_cast<int>(rng.bounded(static_cast<uint64_t>(C)));
        PartitionSpec spec{.partitions = K, .overlap_ratio = rng.uniform01() * 0.9};
        auto parts = partition_columns(columns(C), spec);
        REQUIRE(static_cast<int>(parts.size()) == K);
        std::map<std::string, int> counts;
        for (const auto& p : parts) {
            CHECK(!p.empty());
            for (const auto& col : p) counts[col.name]++;
        }
        CHECK(static_cast<int>(counts.size()) == C);
    }
}

TEST_CASE("sample_partition_pair") {
    CHECK(sample_partition_pair(2, 123) == std::pair<int64_t, int64_t>{0, 1});
    CHECK_THROWS(sample_partition_pair(1, 0));

    auto fixed = sample_partition_pair(3, 99);
    CHECK(fixed == sample_partition_pair(3, 99));
    CHECK(fixed.first != fixed.second);
    CHECK(fixed.first >= 0);
    CHECK(fixed.first < 3);
    CHECK(fixed.second >= 0);
    CHECK(fixed.second < 3);

    // unordered pair frequencies near uniform over 10k draws
    std::map<std::pair<int64_t, int64_t>, int> freq;
    for (uint64_t s = 0; s < 10000; ++s) {
        auto [a, b] = sample_partition_pair(3, s * 2654435761ull + 17);
        freq[{std::min(a, b), std::max(a, b)}]++;
    }
    REQUIRE(freq.size() == 3);
    for (const auto& [pair, count] : freq) {
        CHECK(count > 10000 / 3.0 - 500);
        CHECK(count < 10000 / 3.0 + 500);
    }
}

TEST_CASE("cosine similarity") {
    CHECK(cosine_sim({1.0, 2.0, -3.0}, {1.0, 2.0, -3.0}) == doctest::Approx(1.0));
    CHECK(cosine_sim({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(0.0));
    CHECK(cosine_sim({1.0, 2.0}, {-1.0, -2.0}) == doctest::Approx(-1.0));
    CHECK_THROWS(cosine_sim({0.0, 0.0}, {1.0, 0.0}));
    CHECK_THROWS(cosine_sim({1.0}, {1.0, 2.0}));
}

TEST_CASE("self loss on the two hand-checked batches") {
    // identical views: every anchor term is log 2
    auto same = batch_from({{{0.3, 0.4}, {0.3, 0.4}}});
    CHECK(self_vpcl_loss(same).item() == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

    // orthogonal views: each anchor contributes log(1 + e)
    auto ortho = batch_from({{{1.0, 0.0}, {0.0, 1.0}}});
    const double expected = 2.0 * std::log(1.0 + std::exp(1.0));
    CHECK(self_vpcl_loss(ortho).item() == doctest::Approx(expected).epsilon(1e-12));
    CHECK(testing::self_vpcl_oracle({{{1.0, 0.0}, {0.0, 1.0}}}) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("self loss equals the brute-force oracle") {
    Rng rng(5);
    for (int trial = 0; trial < 120; ++trial) {
        const size_t B = 1 + rng.bounded(4);
        const size_t K = 2 + rng.bounded(2);
        auto proj = random_projections(rng, B, K, 3 + rng.bounded(3));
        const bool exclude = rng.uniform01() < 0.3;
        auto batch = batch_from(proj);
        const double got = self_vpcl_loss(batch, {.exclude_self = exclude}).item();
        const double want = testing::self_vpcl_oracle(proj, exclude);
        CHECK(std::fabs(got - want) < 1e-6);
    }
}

TEST_CASE("supervised loss on the hand-checked batch") {
    // two orthogonal single-view samples of different classes: loss is -2
    auto batch = batch_from({{{1.0, 0.0}}, {{0.0, 1.0}}}, std::vector<int>{0, 1});
    CHECK(sup_vpcl_loss(batch).item() == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("supervised loss equals the brute-force oracle") {
    Rng rng(6);
    for (int trial = 0; trial < 120; ++trial) {
        const size_t B = 2 + rng.bounded(3);
        const size_t K = 1 + rng.bounded(2);
        auto proj = random_projections(rng, B, K, 3 + rng.bounded(3));
        std::vector<int> labels(B);
        labels[0] = 0;
        labels[1] = 1;  // both classes always present
        for (size_t i = 2; i < B; ++i) labels[i] = static_cast<int>(rng.bounded(2));
        const bool exclude = rng.uniform01() < 0.3;
        auto batch = batch_from(proj, labels);
        const double got = sup_vpcl_loss(batch, {.exclude_self = exclude}).item();
        const double want = testing::sup_vpcl_oracle(proj, labels, exclude);
        CHECK(std::fabs(got - want) < 1e-6);
    }
}

TEST_CASE("degenerate batches are rejected") {
    Rng rng7(7);
    auto single_class = batch_from(random_projections(rng7, 3, 2, 4), std::vector<int>{1, 1, 1});
    CHECK_THROWS_AS(sup_vpcl_loss(single_class), std::domain_error);

    auto one_view = batch_from({{{1.0, 0.0}}, {{0.0, 1.0}}});
    CHECK_THROWS(self_vpcl_loss(one_view));

    auto zero_norm = batch_from({{{0.0, 0.0}, {1.0, 0.0}}});
    CHECK_THROWS_AS(self_vpcl_loss(zero_norm), std::domain_error);
}

TEST_CASE("losses are invariant to uniform scaling and orthogonal maps") {
    Rng rng(8);
    auto proj = random_projections(rng, 3, 2, 4);
    std::vector<int> labels = {0, 1, 1};
    const double self_base = self_vpcl_loss(batch_from(proj)).item();
    const double sup_base = sup_vpcl_loss(batch_from(proj, labels)).item();

    auto scaled = proj;
    for (auto& s : scaled)
        for (auto& v : s)
            for (auto& x : v) x *= 37.5;
    CHECK(std::fabs(self_vpcl_loss(batch_from(scaled)).item() - self_base) < 1e-6);
    CHECK(std::fabs(sup_vpcl_loss(batch_from(scaled, labels)).item() - sup_base) < 1e-6);

    // Householder reflection H = I - 2 vv^T / |v|^2 is exactly orthogonal
    std::vector<double> h = {0.3, -1.2, 0.8, 0.5};
    double hh = 0;
    for (double x : h) hh += x * x;
    auto reflect = [&](const std::vector<double>& x) {
        double dot = 0;
        for (size_t i = 0; i < x.size(); ++i) dot += x[i] * h[i];
        std::vector<double> out(x);
        for (size_t i = 0; i < x.size(); ++i) out[i] -= 2.0 * dot * h[i] / hh;
        return out;
    };
    auto rotated = proj;
    for (auto& s : rotated)
        for (auto& v : s) v = reflect(v);
    CHECK(std::fabs(self_vpcl_loss(batch_from(rotated)).item() - self_base) < 1e-6);
    CHECK(std::fabs(sup_vpcl_loss(batch_from(rotated, labels)).item() - sup_base) < 1e-6);
}

TEST_CASE("loss gradients flow to the projections") {
    Rng rng(9);
    auto proj = random_projections(rng, 2, 2, 3);
    auto batch = batch_from(proj, std::vector<int>{0, 1});
    batch.projections.set_requires_grad(true);

    auto self_fn = [&]() { return self_vpcl_loss(batch); };
    auto self_check = testing::check_gradients({{"proj", batch.projections}}, self_fn);
    INFO("self worst " << self_check.worst_param << " rel " << self_check.worst_rel);
    CHECK(self_check.ok);

    auto sup_fn = [&]() { return sup_vpcl_loss(batch); };
    auto sup_check = testing::check_gradients({{"proj", batch.projections}}, sup_fn);
    INFO("sup worst " << sup_check.worst_param << " rel " << sup_check.worst_rel);
    CHECK(sup_check.ok);
}
