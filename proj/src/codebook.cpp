#include "lowra/codebook.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "lowra/error.hpp"

namespace lowra {

namespace {

// NormalFloat codepoints (float32 values, as used for NF4 tables).
constexpr std::array<float, 16> kNf4Mappings = {
    -1.0f,
    -0.6961928009986877f,
    -0.5250730514526367f,
    -0.39491748809814453f,
    -0.28444138169288635f,
    -0.18477343022823334f,
    -0.09105003625154495f,
    0.0f,
    0.07958029955625534f,
    0.16093020141124725f,
    0.24611230194568634f,
    0.33791524171829224f,
    0.4407098293304443f,
    0.562617063522339f,
    0.7229568362236023f,
    1.0f,
};

// The 2-bit set reuses the NF values {-1, 0, 0.33791524..., 1}; its listed
// thresholds are exactly the midpoints of these mappings.
constexpr std::array<float, 4> kNf2Mappings = {-1.0f, 0.0f, 0.33791524171829224f, 1.0f};

constexpr std::array<float, 2> kOneBitMappings = {-1.0f, 1.0f};

std::vector<double> midpoints(const std::vector<double>& mappings) {
    std::vector<double> t(mappings.size() - 1);
    for (std::size_t j = 0; j + 1 < mappings.size(); ++j) {
        t[j] = 0.5 * (mappings[j] + mappings[j + 1]);
    }
    return t;
}

}  // namespace

bool is_supported_precision(int bits) { return bits == 1 || bits == 2 || bits == 4; }

void validate(const Codebook& book) {
    if (!is_supported_precision(book.precision)) {
        throw ConfigError("Codebook: unsupported precision " + std::to_string(book.precision) +
                          " (supported: 1, 2, 4)");
    }
    const std::size_t levels = static_cast<std::size_t>(book.levels());
    if (book.mappings.size() != levels) {
        throw DataError("Codebook: expected " + std::to_string(levels) + " mappings, got " +
                        std::to_string(book.mappings.size()));
    }
    if (book.thresholds.size() != levels - 1) {
        throw DataError("Codebook: expected " + std::to_string(levels - 1) +
                        " thresholds, got " + std::to_string(book.thresholds.size()));
    }
    for (double m : book.mappings) {
        if (!std::isfinite(m)) throw DataError("Codebook: non-finite mapping");
    }
    for (double t : book.thresholds) {
        if (!std::isfinite(t)) throw DataError("Codebook: non-finite threshold");
    }
    for (std::size_t j = 0; j + 1 < levels; ++j) {
        if (!(book.mappings[j] < book.mappings[j + 1])) {
            throw DataError("Codebook: mappings not strictly ascending at index " +
                            std::to_string(j));
        }
        if (book.thresholds[j] < book.mappings[j] || book.thresholds[j] > book.mappings[j + 1]) {
            throw DataError("Codebook: threshold " + std::to_string(j) +
                            " does not separate its neighboring mappings");
        }
        if (j + 2 < levels && !(book.thresholds[j] < book.thresholds[j + 1])) {
            throw DataError("Codebook: thresholds not strictly ascending at index " +
                            std::to_string(j));
        }
    }
}

Codebook default_codebook(int precision) {
    Codebook book;
    book.precision = precision;
    switch (precision) {
        case 1:
            book.mappings.assign(kOneBitMappings.begin(), kOneBitMappings.end());
            break;
        case 2:
            book.mappings.assign(kNf2Mappings.begin(), kNf2Mappings.end());
            break;
        case 4:
            book.mappings.assign(kNf4Mappings.begin(), kNf4Mappings.end());
            break;
        default:
            throw ConfigError("default_codebook: unsupported precision " +
                              std::to_string(precision));
    }
    book.thresholds = midpoints(book.mappings);
    return book;
}

int bin_index(double x, std::span<const double> thresholds) {
    // Smallest j with x <= thresholds[j]; past-the-end means the top bin.
    const auto it = std::lower_bound(thresholds.begin(), thresholds.end(), x);
    return static_cast<int>(it - thresholds.begin());
}

CodeVector quantize_channel(std::span<const float> values, const Codebook& book) {
    validate(book);
    CodeVector out;
    out.precision = book.precision;
    out.codes.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (std::isnan(values[i])) {
            throw DataError("quantize_channel: NaN at element " + std::to_string(i));
        }
        out.codes[i] = static_cast<std::uint8_t>(bin_index(values[i], book.thresholds));
    }
    return out;
}

std::vector<float> dequantize_channel(const CodeVector& codes, const Codebook& book,
                                      std::span<const float> block_absmax,
                                      std::size_t block_size) {
    validate(book);
    if (codes.precision != book.precision) {
        throw ShapeError("dequantize_channel: code precision " +
                         std::to_string(codes.precision) + " != book precision " +
                         std::to_string(book.precision));
    }
    if (block_size == 0) throw ConfigError("dequantize_channel: block_size must be >= 1");
    const std::size_t needed = (codes.codes.size() + block_size - 1) / block_size;
    if (block_absmax.size() < needed) {
        throw ShapeError("dequantize_channel: " + std::to_string(block_absmax.size()) +
                         " absmax blocks cover fewer than " + std::to_string(needed) +
                         " required");
    }
    const int levels = book.levels();
    std::vector<float> out(codes.codes.size());
    for (std::size_t i = 0; i < codes.codes.size(); ++i) {
        if (codes.codes[i] >= levels) {
            throw DataError("dequantize_channel: code " + std::to_string(codes.codes[i]) +
                            " out of range at element " + std::to_string(i));
        }
        out[i] = static_cast<float>(book.mappings[codes.codes[i]]) *
                 block_absmax[i / block_size];
    }
    return out;
}

std::size_t packed_byte_count(int precision, std::size_t element_count) {
    return (element_count * static_cast<std::size_t>(precision) + 7) / 8;
}

PackedCodes pack_codes(const CodeVector& codes) {
    if (!is_supported_precision(codes.precision)) {
        throw ConfigError("pack_codes: unsupported precision " + std::to_string(codes.precision));
    }
    const int b = codes.precision;
    const std::size_t per_byte = 8 / static_cast<std::size_t>(b);
    const std::uint8_t mask = static_cast<std::uint8_t>((1u << b) - 1u);

    PackedCodes out;
    out.precision = b;
    out.element_count = codes.codes.size();
    out.bytes.assign(packed_byte_count(b, codes.codes.size()), 0);
    for (std::size_t e = 0; e < codes.codes.size(); ++e) {
        if (codes.codes[e] & ~mask) {
            throw DataError("pack_codes: code " + std::to_string(codes.codes[e]) +
                            " exceeds " + std::to_string(b) + " bits at element " +
                            std::to_string(e));
        }
        out.bytes[e / per_byte] |=
            static_cast<std::uint8_t>(codes.codes[e] << ((e % per_byte) * b));
    }
    return out;
}

CodeVector unpack_codes(const PackedCodes& packed) {
    if (!is_supported_precision(packed.precision)) {
        throw ConfigError("unpack_codes: unsupported precision " +
                          std::to_string(packed.precision));
    }
    const int b = packed.precision;
    const std::size_t per_byte = 8 / static_cast<std::size_t>(b);
    const std::size_t expected = packed_byte_count(b, packed.element_count);
    if (packed.bytes.size() != expected) {
        throw FormatError("unpack_codes: payload is " + std::to_string(packed.bytes.size()) +
                          " bytes, expected " + std::to_string(expected) + " for " +
                          std::to_string(packed.element_count) + " " + std::to_string(b) +
                          "-bit codes");
    }
    const std::uint8_t mask = static_cast<std::uint8_t>((1u << b) - 1u);

    CodeVector out;
    out.precision = b;
    out.codes.resize(packed.element_count);
    for (std::size_t e = 0; e < packed.element_count; ++e) {
        out.codes[e] =
            static_cast<std::uint8_t>((packed.bytes[e / per_byte] >> ((e % per_byte) * b)) & mask);
    }
    // Pad bits above the last element must be zero.
    if (!packed.bytes.empty()) {
        const std::size_t used_bits = packed.element_count * static_cast<std::size_t>(b);
        const std::size_t rem = used_bits % 8;
        if (rem != 0) {
            const std::uint8_t pad = static_cast<std::uint8_t>(packed.bytes.back() >> rem);
            if (pad != 0) {
                throw FormatError("unpack_codes: nonzero pad bits in final byte");
            }
        }
    }
    return out;
}

}  // namespace lowra
