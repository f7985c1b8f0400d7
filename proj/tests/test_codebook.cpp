#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>

#include "lowra/codebook.hpp"
#include "lowra/error.hpp"

using namespace lowra;

TEST_CASE("default 2-bit codebook matches the NormalFloat constants") {
    const Codebook book = default_codebook(2);
    REQUIRE(book.mappings.size() == 4);
    REQUIRE(book.thresholds.size() == 3);
    CHECK(book.mappings[0] == doctest::Approx(-1.0).epsilon(1e-7));
    CHECK(book.mappings[1] == doctest::Approx(0.0).epsilon(1e-7));
    CHECK(book.mappings[2] == doctest::Approx(0.33791524).epsilon(1e-7));
    CHECK(book.mappings[3] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(book.thresholds[0] == doctest::Approx(-0.5).epsilon(1e-7));
    CHECK(book.thresholds[1] == doctest::Approx(0.16895762).epsilon(1e-7));
    CHECK(book.thresholds[2] == doctest::Approx(0.66895762).epsilon(1e-7));
}

TEST_CASE("default 1-bit codebook is the symmetric pair") {
    const Codebook book = default_codebook(1);
    CHECK(book.mappings == std::vector<double>{-1.0, 1.0});
    CHECK(book.thresholds == std::vector<double>{0.0});
}

TEST_CASE("default 4-bit codebook is NF4 with midpoint thresholds") {
    const Codebook book = default_codebook(4);
    REQUIRE(book.mappings.size() == 16);
    REQUIRE(book.thresholds.size() == 15);
    CHECK(book.mappings.front() == doctest::Approx(-1.0));
    CHECK(book.mappings[1] == doctest::Approx(-0.6961928).epsilon(1e-7));
    CHECK(book.mappings[7] == doctest::Approx(0.0));
    CHECK(book.mappings[11] == doctest::Approx(0.33791524).epsilon(1e-7));
    CHECK(book.mappings.back() == doctest::Approx(1.0));
    CHECK(book.thresholds[0] == doctest::Approx(-0.8480964).epsilon(1e-7));
}

TEST_CASE("default thresholds are exact midpoints of consecutive mappings") {
    for (int bits : {1, 2, 4}) {
        const Codebook book = default_codebook(bits);
        for (std::size_t j = 0; j + 1 < book.mappings.size(); ++j) {
            CHECK(book.thresholds[j] ==
                  doctest::Approx(0.5 * (book.mappings[j] + book.mappings[j + 1]))
                      .epsilon(1e-12));
        }
    }
}

TEST_CASE("default_codebook rejects unsupported precisions") {
    CHECK_THROWS_AS(default_codebook(3), ConfigError);
    CHECK_THROWS_AS(default_codebook(8), ConfigError);
}

TEST_CASE("quantize_channel follows the half-open bin rule") {
    const Codebook two = default_codebook(2);
    const std::vector<float> values = {0.5f};
    CHECK(quantize_channel(values, two).codes == std::vector<std::uint8_t>{2});

    // Boundary x == threshold goes to the lower code.
    const Codebook one = default_codebook(1);
    const std::vector<float> boundary = {0.0f};
    CHECK(quantize_channel(boundary, one).codes == std::vector<std::uint8_t>{0});
}

TEST_CASE("mapping values quantize to their own code") {
    for (int bits : {1, 2, 4}) {
        const Codebook book = default_codebook(bits);
        std::vector<float> values(book.mappings.begin(), book.mappings.end());
        const CodeVector codes = quantize_channel(values, book);
        for (std::size_t j = 0; j < values.size(); ++j) {
            CHECK(codes.codes[j] == j);
        }
    }
}

TEST_CASE("quantize_channel rejects NaN") {
    const Codebook book = default_codebook(2);
    const std::vector<float> values = {std::numeric_limits<float>::quiet_NaN()};
    CHECK_THROWS_AS(quantize_channel(values, book), DataError);
}

TEST_CASE("dequantize_channel scales mappings by the block absmax") {
    const Codebook book = default_codebook(2);
    CodeVector codes;
    codes.precision = 2;
    codes.codes = {0, 1, 2, 3};
    const std::vector<float> absmax = {2.0f};
    const std::vector<float> out = dequantize_channel(codes, book, absmax, 64);
    CHECK(out[0] == doctest::Approx(-2.0));
    CHECK(out[1] == doctest::Approx(0.0));
    CHECK(out[2] == doctest::Approx(0.6758).epsilon(1e-4));
    CHECK(out[3] == doctest::Approx(2.0));
    CHECK(out[2] == static_cast<float>(book.mappings[2]) * 2.0f);

    const std::vector<float> zero = {0.0f};
    for (float v : dequantize_channel(codes, book, zero, 64)) CHECK(v == 0.0f);
}

TEST_CASE("dequantize_channel rejects out-of-range codes") {
    const Codebook book = default_codebook(1);
    CodeVector codes;
    codes.precision = 1;
    codes.codes = {2};
    const std::vector<float> absmax = {1.0f};
    CHECK_THROWS_AS(dequantize_channel(codes, book, absmax, 64), DataError);
}

TEST_CASE("quantize then dequantize is a fixed point on codes") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    const std::vector<float> absmax = {1.0f, 1.0f};
    for (int bits : {1, 2, 4}) {
        const Codebook book = default_codebook(bits);
        std::vector<float> values(100);
        for (float& v : values) v = dist(rng);
        const CodeVector codes = quantize_channel(values, book);
        const std::vector<float> recon = dequantize_channel(codes, book, absmax, 64);
        for (std::size_t i = 0; i < values.size(); ++i) {
            CHECK(recon[i] == static_cast<float>(book.mappings[codes.codes[i]]));
        }
        const CodeVector again = quantize_channel(recon, book);
        CHECK(again.codes == codes.codes);
    }
}

TEST_CASE("quantization is monotone in the input") {
    std::mt19937 rng(29);
    std::uniform_real_distribution<float> dist(-1.5f, 1.5f);
    for (int bits : {1, 2, 4}) {
        const Codebook book = default_codebook(bits);
        std::vector<float> values(200);
        for (float& v : values) v = dist(rng);
        std::sort(values.begin(), values.end());
        const CodeVector codes = quantize_channel(values, book);
        for (std::size_t i = 1; i < values.size(); ++i) {
            CHECK(codes.codes[i - 1] <= codes.codes[i]);
        }
    }
}

TEST_CASE("replacing mappings by weighted bin means never hurts") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    std::uniform_real_distribution<double> wdist(0.1, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Codebook book = default_codebook(2);
        std::vector<float> values(64);
        std::vector<double> weights(64);
        for (auto& v : values) v = dist(rng);
        for (auto& w : weights) w = wdist(rng);

        auto wsse = [&](const std::vector<double>& mappings) {
            double acc = 0.0;
            for (std::size_t i = 0; i < values.size(); ++i) {
                const int j = bin_index(values[i], book.thresholds);
                const double d = values[i] - mappings[j];
                acc += weights[i] * d * d;
            }
            return acc;
        };

        std::vector<double> means = book.mappings;
        std::vector<double> wsum(4, 0.0), wxsum(4, 0.0);
        for (std::size_t i = 0; i < values.size(); ++i) {
            const int j = bin_index(values[i], book.thresholds);
            wsum[j] += weights[i];
            wxsum[j] += weights[i] * values[i];
        }
        for (std::size_t j = 0; j < 4; ++j) {
            if (wsum[j] > 0.0) means[j] = wxsum[j] / wsum[j];
        }
        CHECK(wsse(means) <= wsse(book.mappings) + 1e-12);
    }
}

TEST_CASE("pack_codes matches the golden byte vectors") {
    CodeVector two;
    two.precision = 2;
    two.codes = {0, 1, 2, 3};
    CHECK(pack_codes(two).bytes == std::vector<std::uint8_t>{0xE4});

    CodeVector one;
    one.precision = 1;
    one.codes = {1, 0, 1, 1, 0, 0, 0, 1};
    CHECK(pack_codes(one).bytes == std::vector<std::uint8_t>{0x8D});

    CodeVector four;
    four.precision = 4;
    four.codes = {5, 10};
    CHECK(pack_codes(four).bytes == std::vector<std::uint8_t>{0xA5});
}

TEST_CASE("unpack_codes inverts the golden bytes") {
    PackedCodes p;
    p.precision = 2;
    p.element_count = 4;
    p.bytes = {0xE4};
    CHECK(unpack_codes(p).codes == std::vector<std::uint8_t>{0, 1, 2, 3});

    p.precision = 1;
    p.element_count = 8;
    p.bytes = {0x8D};
    CHECK(unpack_codes(p).codes == std::vector<std::uint8_t>{1, 0, 1, 1, 0, 0, 0, 1});
}

TEST_CASE("unpack_codes rejects bad payloads") {
    PackedCodes p;
    p.precision = 2;
    p.element_count = 4;
    p.bytes = {0xE4, 0x00};
    CHECK_THROWS_AS(unpack_codes(p), FormatError);

    // 3 2-bit codes leave the top 2 bits as padding; set one.
    p.element_count = 3;
    p.bytes = {static_cast<std::uint8_t>(0xE4)};
    CHECK_THROWS_AS(unpack_codes(p), FormatError);
}

TEST_CASE("pack/unpack round-trips every length from 1 to 257") {
    std::mt19937 rng(37);
    for (int bits : {1, 2, 4}) {
        std::uniform_int_distribution<int> cdist(0, (1 << bits) - 1);
        for (std::size_t n = 1; n <= 257; ++n) {
            CodeVector codes;
            codes.precision = bits;
            codes.codes.resize(n);
            for (auto& c : codes.codes) c = static_cast<std::uint8_t>(cdist(rng));
            const PackedCodes packed = pack_codes(codes);
            CHECK(packed.bytes.size() == (n * bits + 7) / 8);
            const CodeVector back = unpack_codes(packed);
            REQUIRE(back.codes == codes.codes);
        }
    }
}

TEST_CASE("codebook validation catches broken invariants") {
    Codebook book = default_codebook(2);
    book.mappings[2] = book.mappings[1];  // not strictly ascending
    CHECK_THROWS_AS(validate(book), DataError);

    book = default_codebook(2);
    book.thresholds[0] = 0.5;  // above mappings[1]
    CHECK_THROWS_AS(validate(book), DataError);

    book = default_codebook(2);
    book.mappings.pop_back();
    CHECK_THROWS_AS(validate(book), DataError);
}
