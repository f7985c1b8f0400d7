#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace lowra {

/// One channel's quantization function: 2^b strictly ascending codepoints
/// (mappings) and the 2^b - 1 bin boundaries (thresholds) between them.
/// Outer boundaries are implicitly -inf / +inf; value x lands in bin j iff
/// thresholds[j-1] < x <= thresholds[j].
struct Codebook {
    int precision = 0;               // bits, one of {1, 2, 4}
    std::vector<double> mappings;    // 2^precision values
    std::vector<double> thresholds;  // 2^precision - 1 values

    int levels() const { return 1 << precision; }
};

bool is_supported_precision(int bits);

/// Throws ConfigError on unsupported precision, DataError when the
/// ascending/interleaving invariants do not hold.
void validate(const Codebook& book);

/// Initial codebooks: the symmetric 1-bit pair, the NormalFloat constants
/// for 2 and 4 bits, thresholds at midpoints of consecutive mappings.
Codebook default_codebook(int precision);

/// Bin index of x under the book's thresholds (half-open rule above).
int bin_index(double x, std::span<const double> thresholds);

struct CodeVector {
    int precision = 0;
    std::vector<std::uint8_t> codes;
};

/// Quantize one channel of (typically normalized) values. NaN input is a
/// DataError; any finite real is binnable through the implicit outer
/// boundaries.
CodeVector quantize_channel(std::span<const float> values, const Codebook& book);

/// Decode one channel: mappings[code] * absmax of the element's block, both
/// in 32-bit float arithmetic. block_absmax covers the channel's blocks in
/// order.
std::vector<float> dequantize_channel(const CodeVector& codes, const Codebook& book,
                                      std::span<const float> block_absmax,
                                      std::size_t block_size);

/// Packed layout contract: element e occupies bits
/// [(e mod per_byte)*b, (e mod per_byte)*b + b) of byte floor(e / per_byte),
/// least-significant-bit first, with per_byte = 8/b; the final byte is
/// zero-padded.
struct PackedCodes {
    int precision = 0;
    std::size_t element_count = 0;
    std::vector<std::uint8_t> bytes;
};

std::size_t packed_byte_count(int precision, std::size_t element_count);

PackedCodes pack_codes(const CodeVector& codes);

/// Exact inverse of pack_codes. Inconsistent payload length or nonzero pad
/// bits raise FormatError.
CodeVector unpack_codes(const PackedCodes& packed);

}  // namespace lowra
