#include "lowra/memory.hpp"

#include <sstream>

#include "lowra/error.hpp"

namespace lowra {

namespace {

constexpr std::size_t kSequenceLength = 512;  // batch 1 x sequence 512

}  // namespace

MemoryReport estimate_memory(const std::vector<LayerDims>& dims,
                             const std::vector<int>& bits_per_channel,
                             std::size_t block_size, std::size_t rank, MemoryMode mode) {
    if (block_size == 0) throw ConfigError("estimate_memory: block_size must be >= 1");
    std::size_t channels = 0;
    for (const LayerDims& d : dims) {
        if (d.rows == 0 || d.cols == 0) {
            throw ShapeError("estimate_memory: layer '" + d.name + "' has an empty dimension");
        }
        channels += d.rows;
    }
    if (bits_per_channel.size() != channels) {
        throw ShapeError("estimate_memory: " + std::to_string(bits_per_channel.size()) +
                         " precisions for " + std::to_string(channels) + " channels");
    }

    MemoryReport report;
    report.mode = mode;
    report.total.name = "total";

    std::uint64_t total_params = 0;
    std::size_t ch = 0;
    for (const LayerDims& d : dims) {
        LayerMemory mem;
        mem.name = d.name;
        const std::uint64_t blocks_per_row = (d.cols + block_size - 1) / block_size;
        for (std::size_t r = 0; r < d.rows; ++r, ++ch) {
            const int bits = bits_per_channel[ch];
            mem.packed_bytes += (static_cast<std::uint64_t>(d.cols) * bits + 7) / 8;
            const std::uint64_t levels = 1ull << bits;
            mem.codebook_bytes += (levels + levels - 1) * 4;
        }
        mem.absmax_bytes = static_cast<std::uint64_t>(d.rows) * blocks_per_row * 4;
        if (rank > 0) {
            mem.adapter_bytes = static_cast<std::uint64_t>(rank) * (d.rows + d.cols) * 2;
        }
        if (mode == MemoryMode::Finetune) {
            mem.gradient_bytes = mem.adapter_bytes;
            mem.optimizer_bytes = 2 * static_cast<std::uint64_t>(rank) * (d.rows + d.cols) * 4;
            mem.activation_bytes = static_cast<std::uint64_t>(kSequenceLength) * d.rows * 2;
        }
        total_params += static_cast<std::uint64_t>(d.rows) * d.cols;

        report.total.packed_bytes += mem.packed_bytes;
        report.total.absmax_bytes += mem.absmax_bytes;
        report.total.codebook_bytes += mem.codebook_bytes;
        report.total.adapter_bytes += mem.adapter_bytes;
        report.total.gradient_bytes += mem.gradient_bytes;
        report.total.optimizer_bytes += mem.optimizer_bytes;
        report.total.activation_bytes += mem.activation_bytes;
        report.layers.push_back(std::move(mem));
    }

    const std::uint64_t base_bytes = report.total.packed_bytes + report.total.absmax_bytes +
                                     report.total.codebook_bytes;
    report.effective_bits_per_param =
        static_cast<double>(base_bytes) * 8.0 / static_cast<double>(total_params);
    return report;
}

std::string render_report(const MemoryReport& report) {
    std::ostringstream os;
    os << "memory estimate (" << (report.mode == MemoryMode::Inference ? "inference" : "finetune")
       << ", bytes)\n";
    auto line = [&os, &report](const LayerMemory& m) {
        os << "  " << m.name << ": total " << m.total() << "  packed " << m.packed_bytes
           << "  absmax " << m.absmax_bytes << "  codebooks " << m.codebook_bytes
           << "  adapters " << m.adapter_bytes;
        if (report.mode == MemoryMode::Finetune) {
            os << "  grads " << m.gradient_bytes << "  optimizer " << m.optimizer_bytes
               << "  activations " << m.activation_bytes;
        }
        os << "\n";
    };
    for (const LayerMemory& m : report.layers) line(m);
    line(report.total);
    os << "  effective base-weight bits/param: " << report.effective_bits_per_param << "\n";
    return os.str();
}

}  // namespace lowra
