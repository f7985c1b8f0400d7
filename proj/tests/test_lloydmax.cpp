#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "lowra/error.hpp"
#include "lowra/lloydmax.hpp"
#include "oracles.hpp"

using namespace lowra;

namespace {

WeightedSamples random_samples(std::mt19937& rng, std::size_t n) {
    std::uniform_real_distribution<float> vdist(-1.0f, 1.0f);
    std::uniform_real_distribution<double> wdist(0.05, 1.5);
    WeightedSamples s;
    s.values.resize(n);
    s.weights.resize(n);
    for (auto& v : s.values) v = vdist(rng);
    for (auto& w : s.weights) w = wdist(rng);
    return s;
}

}  // namespace

TEST_CASE("the M-step computes the weighted centroid") {
    // All samples forced into one bin by an off-scale init; the single
    // populated codepoint must land on the weighted mean (-1*1 + 1*3)/4.
    WeightedSamples s;
    s.values = {-1.0f, 1.0f};
    s.weights = {1.0, 3.0};
    Codebook init;
    init.precision = 1;
    init.mappings = {-2.0, 5.0};
    init.thresholds = {4.0};
    const FitResult fit = lloyd_fit_channel(s, init, 1);
    CHECK(fit.book.mappings[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("symmetric two-cluster fit lands on the textbook answer") {
    WeightedSamples s;
    s.values = {-1.0f, -0.5f, 0.5f, 1.0f};
    s.weights = {1.0, 1.0, 1.0, 1.0};
    const FitResult fit = lloyd_fit_channel(s, default_codebook(1), 10);
    CHECK(fit.book.mappings[0] == doctest::Approx(-0.75));
    CHECK(fit.book.mappings[1] == doctest::Approx(0.75));
    CHECK(fit.book.thresholds[0] == doctest::Approx(0.0));
    CHECK(fit.trace.converged);
    CHECK(fit.trace.mse.back() == doctest::Approx(0.0625));
}

TEST_CASE("a converged 2-bit fit is a fixed point and beats its init") {
    std::mt19937 rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        const WeightedSamples s = random_samples(rng, 64);
        const Codebook init = default_codebook(2);
        const FitResult fit = lloyd_fit_channel(s, init, 100);
        REQUIRE(fit.trace.converged);

        // Independent recomputation: bin by thresholds, weighted means,
        // midpoints.
        std::vector<double> wsum(4, 0.0), wxsum(4, 0.0);
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            const int j = bin_index(s.values[i], fit.book.thresholds);
            wsum[j] += s.weights[i];
            wxsum[j] += s.weights[i] * s.values[i];
        }
        for (std::size_t j = 0; j < 4; ++j) {
            if (wsum[j] > 0.0) {
                CHECK(fit.book.mappings[j] ==
                      doctest::Approx(wxsum[j] / wsum[j]).epsilon(1e-9));
            }
        }
        for (std::size_t j = 0; j + 1 < 4; ++j) {
            CHECK(fit.book.thresholds[j] ==
                  doctest::Approx(0.5 * (fit.book.mappings[j] + fit.book.mappings[j + 1]))
                      .epsilon(1e-12));
        }
        CHECK(fit.trace.mse.back() <= weighted_mse(s, init) + 1e-15);
    }
}

TEST_CASE("the fit trace never increases") {
    std::mt19937 rng(43);
    for (int trial = 0; trial < 20; ++trial) {
        const WeightedSamples s = random_samples(rng, 48);
        const FitResult fit = lloyd_fit_channel(s, default_codebook(4), 50);
        for (std::size_t i = 1; i < fit.trace.mse.size(); ++i) {
            CHECK(fit.trace.mse[i] <= fit.trace.mse[i - 1]);
        }
    }
}

TEST_CASE("fits are scale-equivariant and weight-scale-invariant") {
    std::mt19937 rng(47);
    const WeightedSamples s = random_samples(rng, 80);
    const FitResult base = lloyd_fit_channel(s, default_codebook(2), 2);

    for (const double scale : {0.5, 4.0}) {  // exact in float
        WeightedSamples scaled = s;
        for (auto& v : scaled.values) v = static_cast<float>(v * scale);
        Codebook init = default_codebook(2);
        for (auto& m : init.mappings) m *= scale;
        for (auto& t : init.thresholds) t *= scale;
        const FitResult fit = lloyd_fit_channel(scaled, init, 2);
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(fit.book.mappings[j] ==
                  doctest::Approx(base.book.mappings[j] * scale).epsilon(1e-9));
        }
        CHECK(fit.trace.mse.back() ==
              doctest::Approx(base.trace.mse.back() * scale * scale).epsilon(1e-9));
    }

    WeightedSamples reweighted = s;
    for (auto& w : reweighted.weights) w *= 3.7;
    const FitResult fit = lloyd_fit_channel(reweighted, default_codebook(2), 2);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(fit.book.mappings[j] == doctest::Approx(base.book.mappings[j]).epsilon(1e-9));
    }
    CHECK(fit.trace.mse.back() == doctest::Approx(base.trace.mse.back()).epsilon(1e-9));
}

TEST_CASE("1-bit fits reach the exhaustive optimum when the fixed point is unique") {
    std::mt19937 rng(53);
    std::uniform_int_distribution<int> ndist(2, 6);
    std::uniform_real_distribution<float> vdist(-1.0f, 1.0f);
    std::uniform_real_distribution<double> wdist(0.2, 2.0);
    int compared = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = ndist(rng);
        WeightedSamples s;
        std::vector<std::pair<float, double>> wv;
        for (int i = 0; i < n; ++i) {
            const float v = vdist(rng);
            const double w = wdist(rng);
            s.values.push_back(v);
            s.weights.push_back(w);
            wv.emplace_back(v, w);
        }
        const auto search = oracles::one_bit_exhaustive(wv);
        const FitResult fit = lloyd_fit_channel(s, default_codebook(1), 100);
        if (!fit.trace.converged || search.fixed_points != 1) continue;
        double total_w = 0.0;
        for (double w : s.weights) total_w += w;
        const double fitted_sse = fit.trace.mse.back() * total_w;
        CHECK(fitted_sse == doctest::Approx(search.best_sse).epsilon(1e-9));
        ++compared;
    }
    CHECK(compared > 50);  // the unique-fixed-point case must actually occur
}

TEST_CASE("lloyd_fit_channel rejects degenerate weights") {
    WeightedSamples s;
    s.values = {0.1f, 0.2f};
    s.weights = {0.0, 0.0};
    CHECK_THROWS_AS(lloyd_fit_channel(s, default_codebook(1), 2), DataError);
}

TEST_CASE("average_thresholds leaves identical converged channels unchanged") {
    std::mt19937 rng(59);
    const WeightedSamples s = random_samples(rng, 64);
    const FitResult fit = lloyd_fit_channel(s, default_codebook(2), 100);
    REQUIRE(fit.trace.converged);

    const AveragedBooks out = average_thresholds({fit.book, fit.book}, {s, s});
    CHECK(out.shared_thresholds == fit.book.thresholds);
    for (const Codebook& book : out.books) {
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(book.mappings[j] == doctest::Approx(fit.book.mappings[j]).epsilon(1e-12));
        }
    }
}

TEST_CASE("average_thresholds takes the elementwise mean") {
    WeightedSamples a;
    a.values = {-0.5f, 0.5f};
    a.weights = {1.0, 1.0};
    WeightedSamples b = a;

    Codebook ba;
    ba.precision = 1;
    ba.mappings = {-0.5, 0.5};
    ba.thresholds = {0.0};
    Codebook bb;
    bb.precision = 1;
    bb.mappings = {-0.4, 0.9};
    bb.thresholds = {0.2};

    const AveragedBooks out = average_thresholds({ba, bb}, {a, b});
    CHECK(out.shared_thresholds == std::vector<double>{0.1});
}

TEST_CASE("the refit after averaging never hurts a channel") {
    std::mt19937 rng(61);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<WeightedSamples> samples;
        std::vector<Codebook> books;
        for (int ch = 0; ch < 4; ++ch) {
            samples.push_back(random_samples(rng, 48));
            books.push_back(lloyd_fit_channel(samples.back(), default_codebook(2), 2).book);
        }
        const AveragedBooks out = average_thresholds(books, samples);

        auto wmse_under = [&](const WeightedSamples& s, const std::vector<double>& thresholds,
                              const std::vector<double>& mappings) {
            double err = 0.0, total = 0.0;
            for (std::size_t i = 0; i < s.values.size(); ++i) {
                const int j = bin_index(s.values[i], thresholds);
                const double d = s.values[i] - mappings[j];
                err += s.weights[i] * d * d;
                total += s.weights[i];
            }
            return err / total;
        };
        for (std::size_t ch = 0; ch < samples.size(); ++ch) {
            const double refit =
                wmse_under(samples[ch], out.shared_thresholds, out.books[ch].mappings);
            const double old =
                wmse_under(samples[ch], out.shared_thresholds, books[ch].mappings);
            CHECK(refit <= old + 1e-12);
        }
    }
}

TEST_CASE("average_thresholds rejects mixed precisions") {
    WeightedSamples s;
    s.values = {0.0f};
    s.weights = {1.0};
    CHECK_THROWS_AS(average_thresholds({default_codebook(1), default_codebook(2)}, {s, s}),
                    ShapeError);
}

TEST_CASE("exactly representable channels have zero MSE") {
    // Values are default 2-bit codepoints times a power-of-two scale, so
    // normalization reproduces the codepoints exactly.
    const Codebook two = default_codebook(2);
    WeightMatrix m;
    m.rows = 1;
    m.cols = 64;
    for (std::size_t i = 0; i < 64; ++i) {
        m.data.push_back(static_cast<float>(two.mappings[i % 4]) * 2.0f);
    }
    MseBuildOptions opts;
    opts.block_size = 64;
    opts.lloyd_iters = 2;
    const MseBuildResult out = build_mse_table(m, {1, 2, 4}, opts);
    CHECK(out.table.at(0, 1) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(out.table.at(0, 2) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("constant channels quantize exactly at every precision") {
    WeightMatrix m;
    m.rows = 1;
    m.cols = 128;
    m.data.assign(128, 0.7f);
    MseBuildOptions opts;
    const MseBuildResult out = build_mse_table(m, {1, 2, 4}, opts);
    for (std::size_t p = 0; p < 3; ++p) {
        CHECK(out.table.at(0, p) == doctest::Approx(0.0).epsilon(1e-14));
    }
}

TEST_CASE("MSE decreases with precision over random channels") {
    std::mt19937 rng(67);
    std::uniform_real_distribution<float> dist(-2.0f, 2.0f);
    WeightMatrix m;
    m.rows = 120;
    m.cols = 128;
    m.data.resize(m.rows * m.cols);
    for (float& v : m.data) v = dist(rng);

    MseBuildOptions opts;
    opts.lloyd_iters = 2;
    const MseBuildResult out = build_mse_table(m, {1, 2, 4}, opts);
    for (std::size_t ch = 0; ch < m.rows; ++ch) {
        CHECK(out.table.at(ch, 2) <= out.table.at(ch, 1));
        CHECK(out.table.at(ch, 1) <= out.table.at(ch, 0));
    }
}

TEST_CASE("all-zero channels fall back to the default book with zero error") {
    WeightMatrix m;
    m.rows = 2;
    m.cols = 8;
    m.data.assign(16, 0.0f);
    m.data[8] = 1.0f;  // second channel is non-degenerate
    MseBuildOptions opts;
    opts.block_size = 4;
    const MseBuildResult out = build_mse_table(m, {2}, opts);
    CHECK(out.table.at(0, 0) == doctest::Approx(0.0));
}
