#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lowra {

struct LayerDims {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
};

enum class MemoryMode { Inference, Finetune };

struct LayerMemory {
    std::string name;
    std::uint64_t packed_bytes = 0;
    std::uint64_t absmax_bytes = 0;
    std::uint64_t codebook_bytes = 0;
    std::uint64_t adapter_bytes = 0;
    // Finetune-only parts.
    std::uint64_t gradient_bytes = 0;
    std::uint64_t optimizer_bytes = 0;
    std::uint64_t activation_bytes = 0;

    std::uint64_t total() const {
        return packed_bytes + absmax_bytes + codebook_bytes + adapter_bytes +
               gradient_bytes + optimizer_bytes + activation_bytes;
    }
};

struct MemoryReport {
    MemoryMode mode = MemoryMode::Inference;
    std::vector<LayerMemory> layers;
    LayerMemory total;
    /// Base-weight storage (codes + absmax + codebooks) in bits per parameter.
    double effective_bits_per_param = 0.0;
};

/// Storage model: packed codes at ceil(omega * bits / 8) bytes per channel
/// (byte-aligned per channel, matching the container payload), 4-byte absmax
/// per 64-element block, float32 codebook tables of 2^b + 2^b - 1 entries per
/// channel, and 16-bit adapter factors of rank * (rows + cols) per layer.
/// Finetune mode adds a same-sized 16-bit adapter gradient, two 32-bit
/// optimizer moments, and a batch 1 x sequence 512 activation per layer
/// boundary at 2 bytes per element of the layer's output dimension.
///
/// bits_per_channel concatenates every layer's channels in dims order.
MemoryReport estimate_memory(const std::vector<LayerDims>& dims,
                             const std::vector<int>& bits_per_channel,
                             std::size_t block_size, std::size_t rank, MemoryMode mode);

std::string render_report(const MemoryReport& report);

}  // namespace lowra
