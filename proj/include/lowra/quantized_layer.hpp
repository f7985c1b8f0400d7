#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lowra/codebook.hpp"
#include "lowra/tensor.hpp"

namespace lowra {

/// One channel's deployed quantization function: float32 codepoints and
/// thresholds as stored in the container.
struct ChannelCodebook {
    std::uint8_t precision = 0;
    std::vector<float> mappings;
    std::vector<float> thresholds;
};

/// The serializable quantized artifact: packed codes, per-block absmax,
/// per-channel codebooks, shapes, and optional low-rank factors. Each
/// channel's packed stream starts byte-aligned.
struct QuantizedLayer {
    std::string name;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::uint32_t block_size = 64;
    std::vector<ChannelCodebook> books;  // one per row
    std::vector<float> absmax;           // rows * blocks_per_row
    std::vector<std::uint8_t> packed;    // concatenated per-channel payloads

    std::uint32_t rank = 0;        // 0: no factors
    std::vector<float> l1;         // rows x rank
    std::vector<float> l2;         // rank x cols

    std::size_t blocks_per_row() const { return (cols + block_size - 1) / block_size; }
    std::size_t channel_payload_bytes(std::size_t channel) const;
    std::size_t channel_payload_offset(std::size_t channel) const;
};

void validate(const QuantizedLayer& layer);

/// Per-channel quantization scheme used to produce a QuantizedLayer:
/// fitted codebooks plus the normalization block size. Codebook values are
/// narrowed to float32 on use, so the in-memory layer and its serialized
/// form decode identically.
struct ChannelQuantizer {
    std::size_t block_size = 64;
    std::vector<Codebook> books;  // one per output channel
};

QuantizedLayer quantize_matrix(const WeightMatrix& w, const ChannelQuantizer& q,
                               const std::string& name);

WeightMatrix dequantize_layer(const QuantizedLayer& layer);

}  // namespace lowra
