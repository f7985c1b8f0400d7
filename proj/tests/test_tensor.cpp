#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>

#include "lowra/error.hpp"
#include "lowra/tensor.hpp"

using namespace lowra;

namespace {

WeightMatrix make(std::size_t rows, std::size_t cols, std::vector<float> data) {
    return WeightMatrix{rows, cols, std::move(data)};
}

WeightMatrix random_matrix(std::mt19937& rng, std::size_t rows, std::size_t cols) {
    std::uniform_real_distribution<float> dist(-3.0f, 3.0f);
    WeightMatrix m{rows, cols, {}};
    m.data.resize(rows * cols);
    for (float& v : m.data) v = dist(rng);
    return m;
}

int ulp_distance(float a, float b) {
    if (a == b) return 0;
    const auto ia = std::bit_cast<std::int32_t>(a);
    const auto ib = std::bit_cast<std::int32_t>(b);
    return std::abs(ia - ib);
}

}  // namespace

TEST_CASE("block_normalize scales a partial block by its absmax") {
    const auto [normalized, state] = block_normalize(make(1, 3, {2.0f, -4.0f, 1.0f}), 64);
    CHECK(normalized.data == std::vector<float>{0.5f, -1.0f, 0.25f});
    CHECK(state.absmax == std::vector<float>{4.0f});
    CHECK(state.blocks_per_row() == 1);
}

TEST_CASE("block_normalize maps all-zero blocks to zeros with scale 0") {
    const auto [normalized, state] = block_normalize(make(1, 4, {0.0f, 0.0f, 0.0f, 0.0f}), 2);
    CHECK(normalized.data == std::vector<float>{0.0f, 0.0f, 0.0f, 0.0f});
    CHECK(state.absmax == std::vector<float>{0.0f, 0.0f});
}

TEST_CASE("block_normalize treats each 64-element block independently") {
    std::mt19937 rng(7);
    WeightMatrix m = random_matrix(rng, 1, 128);
    const auto [normalized, state] = block_normalize(m, 64);
    REQUIRE(state.blocks_per_row() == 2);
    for (std::size_t b = 0; b < 2; ++b) {
        float maxabs = 0.0f;
        for (std::size_t c = 64 * b; c < 64 * (b + 1); ++c) {
            maxabs = std::max(maxabs, std::fabs(normalized.at(0, c)));
        }
        CHECK(maxabs == 1.0f);
    }
}

TEST_CASE("block_normalize rejects non-finite input naming the block") {
    WeightMatrix m = make(2, 6, std::vector<float>(12, 1.0f));
    m.at(1, 5) = std::numeric_limits<float>::infinity();
    CHECK_THROWS_WITH_AS(block_normalize(m, 4), doctest::Contains("row 1, block 1"), DataError);
}

TEST_CASE("block_denormalize inverts the worked example") {
    AbsmaxState state;
    state.block_size = 64;
    state.rows = 1;
    state.cols = 3;
    state.absmax = {4.0f};
    const WeightMatrix back = block_denormalize(make(1, 3, {0.5f, -1.0f, 0.25f}), state);
    CHECK(back.data == std::vector<float>{2.0f, -4.0f, 1.0f});

    state.absmax = {0.0f};
    const WeightMatrix zeros = block_denormalize(make(1, 3, {0.0f, 0.0f, 0.0f}), state);
    CHECK(zeros.data == std::vector<float>{0.0f, 0.0f, 0.0f});
}

TEST_CASE("block_denormalize rejects shape mismatches") {
    AbsmaxState state;
    state.block_size = 2;
    state.rows = 2;
    state.cols = 2;
    state.absmax = {1.0f, 1.0f};
    CHECK_THROWS_AS(block_denormalize(make(1, 2, {1.0f, 2.0f}), state), ShapeError);
}

TEST_CASE("normalize/denormalize round trip is within 1 ulp") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 8; ++trial) {
        const WeightMatrix m = random_matrix(rng, 4, 256);
        const auto [normalized, state] = block_normalize(m, 64);
        const WeightMatrix back = block_denormalize(normalized, state);
        for (std::size_t i = 0; i < m.data.size(); ++i) {
            CHECK(ulp_distance(m.data[i], back.data[i]) <= 1);
        }
    }
}

TEST_CASE("normalization is idempotent once every block has absmax 1") {
    std::mt19937 rng(13);
    const WeightMatrix m = random_matrix(rng, 3, 96);
    const auto first = block_normalize(m, 32);
    const auto second = block_normalize(first.normalized, 32);
    CHECK(second.normalized.data == first.normalized.data);
    for (float a : second.state.absmax) CHECK(a == 1.0f);
}

TEST_CASE("channel_std_stats handles the constant-row example") {
    const StdReport r = channel_std_stats(make(2, 2, {1.0f, 1.0f, -1.0f, -1.0f}));
    CHECK(r.mean_std_out == doctest::Approx(0.0));
    CHECK(r.mean_std_in == doctest::Approx(1.0));
    CHECK(r.ratio == doctest::Approx(0.0));
}

TEST_CASE("channel_std_stats is symmetric on the identity") {
    const StdReport r = channel_std_stats(make(2, 2, {1.0f, 0.0f, 0.0f, 1.0f}));
    CHECK(r.mean_std_out == doctest::Approx(0.5));
    CHECK(r.mean_std_in == doctest::Approx(0.5));
    CHECK(r.ratio == doctest::Approx(1.0));
}

TEST_CASE("channel_std_stats sees row scaling in the ratio") {
    // Rows r * v for v with zero mean: row stds scale with |r| while column
    // stds stay put, so out/in exceeds 1 for spread-out factors.
    const std::vector<float> v = {1.0f, -1.0f, 2.0f, -2.0f};
    std::vector<float> data;
    const std::vector<float> factors = {0.1f, 1.0f, 5.0f, 10.0f};
    for (float f : factors) {
        for (float x : v) data.push_back(f * x);
    }
    const StdReport r = channel_std_stats(make(4, 4, data));

    // Direct recomputation.
    auto pop_std = [](const std::vector<double>& xs) {
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        return std::sqrt(var / static_cast<double>(xs.size()));
    };
    double out = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        std::vector<double> row;
        for (std::size_t j = 0; j < 4; ++j) row.push_back(data[i * 4 + j]);
        out += pop_std(row);
    }
    out /= 4.0;
    double in = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
        std::vector<double> col;
        for (std::size_t i = 0; i < 4; ++i) col.push_back(data[i * 4 + j]);
        in += pop_std(col);
    }
    in /= 4.0;
    CHECK(r.mean_std_out == doctest::Approx(out));
    CHECK(r.mean_std_in == doctest::Approx(in));
    CHECK(r.ratio > 1.0);
}

TEST_CASE("channel_std_stats is permutation-invariant per axis") {
    std::mt19937 rng(17);
    WeightMatrix m = random_matrix(rng, 5, 7);
    const StdReport base = channel_std_stats(m);

    WeightMatrix rows_swapped = m;
    for (std::size_t c = 0; c < m.cols; ++c) std::swap(rows_swapped.at(0, c), rows_swapped.at(3, c));
    CHECK(channel_std_stats(rows_swapped).mean_std_out == doctest::Approx(base.mean_std_out));

    WeightMatrix cols_swapped = m;
    for (std::size_t r = 0; r < m.rows; ++r) std::swap(cols_swapped.at(r, 1), cols_swapped.at(r, 6));
    CHECK(channel_std_stats(cols_swapped).mean_std_in == doctest::Approx(base.mean_std_in));
}

TEST_CASE("channel_std_stats reports +inf ratio for zero column spread") {
    const StdReport r = channel_std_stats(make(2, 2, {1.0f, 2.0f, 1.0f, 2.0f}));
    CHECK(r.mean_std_in == doctest::Approx(0.0));
    CHECK(std::isinf(r.ratio));
}

TEST_CASE("channel_std_stats enforces the shape precondition") {
    CHECK_THROWS_AS(channel_std_stats(make(2, 1, {1.0f, 2.0f})), ShapeError);
}
