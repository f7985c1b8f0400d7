#include "lowra/quantized_layer.hpp"

#include <cmath>
#include <string>

#include "lowra/error.hpp"

namespace lowra {

std::size_t QuantizedLayer::channel_payload_bytes(std::size_t channel) const {
    return packed_byte_count(books[channel].precision, cols);
}

std::size_t QuantizedLayer::channel_payload_offset(std::size_t channel) const {
    std::size_t off = 0;
    for (std::size_t c = 0; c < channel; ++c) off += channel_payload_bytes(c);
    return off;
}

void validate(const QuantizedLayer& layer) {
    if (layer.rows == 0 || layer.cols == 0) {
        throw ShapeError("QuantizedLayer '" + layer.name + "': empty shape");
    }
    if (layer.block_size == 0) {
        throw ShapeError("QuantizedLayer '" + layer.name + "': block_size must be >= 1");
    }
    if (layer.books.size() != layer.rows) {
        throw ShapeError("QuantizedLayer '" + layer.name + "': " +
                         std::to_string(layer.books.size()) + " codebooks for " +
                         std::to_string(layer.rows) + " channels");
    }
    std::size_t payload = 0;
    for (std::size_t ch = 0; ch < layer.rows; ++ch) {
        const ChannelCodebook& cb = layer.books[ch];
        if (!is_supported_precision(cb.precision)) {
            throw DataError("QuantizedLayer '" + layer.name + "': channel " +
                            std::to_string(ch) + " has unsupported precision " +
                            std::to_string(cb.precision));
        }
        const std::size_t levels = std::size_t{1} << cb.precision;
        if (cb.mappings.size() != levels || cb.thresholds.size() != levels - 1) {
            throw DataError("QuantizedLayer '" + layer.name + "': channel " +
                            std::to_string(ch) + " codebook has wrong arity");
        }
        Codebook wide;
        wide.precision = cb.precision;
        wide.mappings.assign(cb.mappings.begin(), cb.mappings.end());
        wide.thresholds.assign(cb.thresholds.begin(), cb.thresholds.end());
        validate(wide);
        payload += packed_byte_count(cb.precision, layer.cols);
    }
    if (layer.packed.size() != payload) {
        throw ShapeError("QuantizedLayer '" + layer.name + "': packed payload is " +
                         std::to_string(layer.packed.size()) + " bytes, expected " +
                         std::to_string(payload));
    }
    std::size_t offset = 0;
    for (std::size_t ch = 0; ch < layer.rows; ++ch) {
        const std::size_t nbytes = packed_byte_count(layer.books[ch].precision, layer.cols);
        const std::size_t rem =
            (static_cast<std::size_t>(layer.cols) * layer.books[ch].precision) % 8;
        if (rem != 0 && (layer.packed[offset + nbytes - 1] >> rem) != 0) {
            throw FormatError("QuantizedLayer '" + layer.name + "': nonzero pad bits in channel " +
                              std::to_string(ch));
        }
        offset += nbytes;
    }
    if (layer.absmax.size() != layer.rows * layer.blocks_per_row()) {
        throw ShapeError("QuantizedLayer '" + layer.name + "': absmax array has " +
                         std::to_string(layer.absmax.size()) + " entries, expected " +
                         std::to_string(layer.rows * layer.blocks_per_row()));
    }
    for (float a : layer.absmax) {
        if (!(a >= 0.0f) || !std::isfinite(a)) {
            throw DataError("QuantizedLayer '" + layer.name + "': invalid absmax value");
        }
    }
    if (layer.rank > 0) {
        if (layer.l1.size() != static_cast<std::size_t>(layer.rows) * layer.rank ||
            layer.l2.size() != static_cast<std::size_t>(layer.rank) * layer.cols) {
            throw ShapeError("QuantizedLayer '" + layer.name + "': factor shapes do not match rank " +
                             std::to_string(layer.rank));
        }
    } else if (!layer.l1.empty() || !layer.l2.empty()) {
        throw ShapeError("QuantizedLayer '" + layer.name + "': factors present but rank is 0");
    }
}

namespace {

// float32 image of a learner codebook; binning against these values matches
// the serialized form exactly.
ChannelCodebook narrow(const Codebook& book) {
    ChannelCodebook out;
    out.precision = static_cast<std::uint8_t>(book.precision);
    out.mappings.assign(book.mappings.begin(), book.mappings.end());
    out.thresholds.assign(book.thresholds.begin(), book.thresholds.end());
    return out;
}

}  // namespace

QuantizedLayer quantize_matrix(const WeightMatrix& w, const ChannelQuantizer& q,
                               const std::string& name) {
    validate(w);
    if (q.books.size() != w.rows) {
        throw ShapeError("quantize_matrix: " + std::to_string(q.books.size()) +
                         " codebooks for " + std::to_string(w.rows) + " channels");
    }

    const NormalizeResult norm = block_normalize(w, q.block_size);

    QuantizedLayer layer;
    layer.name = name;
    layer.rows = static_cast<std::uint32_t>(w.rows);
    layer.cols = static_cast<std::uint32_t>(w.cols);
    layer.block_size = static_cast<std::uint32_t>(q.block_size);
    layer.absmax = norm.state.absmax;
    layer.books.resize(w.rows);

    for (std::size_t ch = 0; ch < w.rows; ++ch) {
        layer.books[ch] = narrow(q.books[ch]);
        Codebook deployed;
        deployed.precision = layer.books[ch].precision;
        deployed.mappings.assign(layer.books[ch].mappings.begin(),
                                 layer.books[ch].mappings.end());
        deployed.thresholds.assign(layer.books[ch].thresholds.begin(),
                                   layer.books[ch].thresholds.end());
        const CodeVector codes = quantize_channel(norm.normalized.row(ch), deployed);
        const PackedCodes packed = pack_codes(codes);
        layer.packed.insert(layer.packed.end(), packed.bytes.begin(), packed.bytes.end());
    }
    return layer;
}

WeightMatrix dequantize_layer(const QuantizedLayer& layer) {
    validate(layer);

    WeightMatrix out;
    out.rows = layer.rows;
    out.cols = layer.cols;
    out.data.resize(static_cast<std::size_t>(layer.rows) * layer.cols);

    const std::size_t bpr = layer.blocks_per_row();
    std::size_t offset = 0;
    for (std::size_t ch = 0; ch < layer.rows; ++ch) {
        const ChannelCodebook& cb = layer.books[ch];
        PackedCodes packed;
        packed.precision = cb.precision;
        packed.element_count = layer.cols;
        const std::size_t nbytes = packed_byte_count(cb.precision, layer.cols);
        packed.bytes.assign(layer.packed.begin() + offset,
                            layer.packed.begin() + offset + nbytes);
        offset += nbytes;

        const CodeVector codes = unpack_codes(packed);
        for (std::size_t c = 0; c < layer.cols; ++c) {
            out.at(ch, c) =
                cb.mappings[codes.codes[c]] * layer.absmax[ch * bpr + c / layer.block_size];
        }
    }
    return out;
}

}  // namespace lowra
