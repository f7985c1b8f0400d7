#include "lowra/io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "lowra/error.hpp"

namespace lowra {

namespace {

constexpr std::array<char, 4> kTensorMagic = {'L', 'W', 'T', '1'};
constexpr std::array<char, 4> kContainerMagic = {'L', 'W', 'C', '1'};
constexpr std::uint16_t kContainerMajor = 1;
constexpr std::uint16_t kContainerMinor = 0;

class ByteWriter {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void raw(const void* data, std::size_t len) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        bytes_.insert(bytes_.end(), p, p + len);
    }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t len) : data_(data), len_(len) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return len_ - pos_; }

    void need(std::size_t n, const char* what) const {
        if (pos_ + n > len_) {
            throw FormatError(std::string("truncated file: needed ") + std::to_string(n) +
                              " bytes for " + what + " at offset " + std::to_string(pos_) +
                              ", only " + std::to_string(len_ - pos_) + " left");
        }
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return data_[pos_++];
    }
    std::uint16_t u16(const char* what) {
        need(2, what);
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(data_[pos_++]) << (8 * i);
        return v;
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
        return v;
    }
    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
    void raw(void* out, std::size_t n, const char* what) {
        need(n, what);
        std::memcpy(out, data_ + pos_, n);
        pos_ += n;
    }

private:
    const std::uint8_t* data_;
    std::size_t len_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "' for reading");
    in.seekg(0, std::ios::end);
    const auto len = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(len));
    if (len > 0) in.read(reinterpret_cast<char*>(bytes.data()), len);
    if (!in) throw FormatError("failed reading '" + path + "'");
    return bytes;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("failed writing '" + path + "'");
}

}  // namespace

std::uint32_t crc32(const std::uint8_t* data, std::size_t len) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int b = 0; b < 8; ++b) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) {
        crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    }
    return crc ^ 0xFFFFFFFFu;
}

void write_tensor(const std::string& path, const TensorData& tensor) {
    if (tensor.dims.empty()) throw ShapeError("write_tensor: no dimensions");
    std::uint64_t count = 1;
    for (std::uint64_t d : tensor.dims) {
        if (d == 0) throw ShapeError("write_tensor: zero dimension");
        count *= d;
    }
    if (tensor.data.size() != count) {
        throw ShapeError("write_tensor: payload has " + std::to_string(tensor.data.size()) +
                         " elements, dims imply " + std::to_string(count));
    }
    ByteWriter w;
    w.raw(kTensorMagic.data(), kTensorMagic.size());
    w.u8(0);  // dtype: real32
    w.u8(static_cast<std::uint8_t>(tensor.dims.size()));
    for (std::uint64_t d : tensor.dims) w.u64(d);
    for (float v : tensor.data) w.f32(v);
    write_file(path, w.take());
}

TensorData read_tensor(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    ByteReader r(bytes.data(), bytes.size());

    std::array<char, 4> magic{};
    r.raw(magic.data(), magic.size(), "magic");
    if (magic != kTensorMagic) {
        throw FormatError("'" + path + "': bad magic at offset 0 (expected LWT1)");
    }
    const std::uint8_t dtype = r.u8("dtype");
    if (dtype != 0) {
        throw FormatError("'" + path + "': unsupported dtype code " + std::to_string(dtype) +
                          " at offset 4");
    }
    const std::uint8_t ndim = r.u8("ndim");
    if (ndim == 0) throw FormatError("'" + path + "': ndim is 0 at offset 5");

    TensorData tensor;
    std::uint64_t count = 1;
    for (std::uint8_t i = 0; i < ndim; ++i) {
        const std::uint64_t d = r.u64("dimension");
        if (d == 0) throw FormatError("'" + path + "': zero dimension");
        tensor.dims.push_back(d);
        count *= d;
    }
    const std::size_t payload_offset = r.offset();
    if (r.remaining() != count * 4) {
        throw FormatError("'" + path + "': payload at offset " + std::to_string(payload_offset) +
                          " is " + std::to_string(r.remaining()) + " bytes, expected " +
                          std::to_string(count * 4));
    }
    tensor.data.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) tensor.data[i] = r.f32("payload");
    return tensor;
}

WeightMatrix to_matrix(const TensorData& tensor) {
    WeightMatrix m;
    if (tensor.dims.size() == 1) {
        m.rows = 1;
        m.cols = tensor.dims[0];
    } else if (tensor.dims.size() == 2) {
        m.rows = tensor.dims[0];
        m.cols = tensor.dims[1];
    } else {
        throw ShapeError("to_matrix: tensor has " + std::to_string(tensor.dims.size()) +
                         " dims, expected 1 or 2");
    }
    m.data = tensor.data;
    return m;
}

TensorData from_matrix(const WeightMatrix& matrix) {
    TensorData t;
    t.dims = {matrix.rows, matrix.cols};
    t.data = matrix.data;
    return t;
}

void write_matrix(const std::string& path, const WeightMatrix& matrix) {
    write_tensor(path, from_matrix(matrix));
}

WeightMatrix read_matrix(const std::string& path) { return to_matrix(read_tensor(path)); }

std::vector<std::uint8_t> serialize_container(const std::vector<QuantizedLayer>& layers) {
    for (const QuantizedLayer& layer : layers) validate(layer);

    ByteWriter w;
    w.raw(kContainerMagic.data(), kContainerMagic.size());
    w.u16(kContainerMajor);
    w.u16(kContainerMinor);
    w.u32(static_cast<std::uint32_t>(layers.size()));
    for (const QuantizedLayer& layer : layers) {
        w.u32(static_cast<std::uint32_t>(layer.name.size()));
        w.raw(layer.name.data(), layer.name.size());
        w.u32(layer.rows);
        w.u32(layer.cols);
        w.u32(layer.block_size);
        for (const ChannelCodebook& cb : layer.books) w.u8(cb.precision);
        for (const ChannelCodebook& cb : layer.books) {
            for (float m : cb.mappings) w.f32(m);
            for (float t : cb.thresholds) w.f32(t);
        }
        for (float a : layer.absmax) w.f32(a);
        w.raw(layer.packed.data(), layer.packed.size());
        w.u8(layer.rank > 0 ? 1 : 0);
        if (layer.rank > 0) {
            w.u32(layer.rank);
            for (float v : layer.l1) w.f32(v);
            for (float v : layer.l2) w.f32(v);
        }
    }
    std::vector<std::uint8_t> bytes = w.take();
    const std::uint32_t crc = crc32(bytes.data(), bytes.size());
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
    return bytes;
}

std::vector<QuantizedLayer> parse_container(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4) throw FormatError("container: file shorter than the checksum");
    const std::uint32_t stored = static_cast<std::uint32_t>(bytes[bytes.size() - 4]) |
                                 static_cast<std::uint32_t>(bytes[bytes.size() - 3]) << 8 |
                                 static_cast<std::uint32_t>(bytes[bytes.size() - 2]) << 16 |
                                 static_cast<std::uint32_t>(bytes[bytes.size() - 1]) << 24;
    const std::uint32_t actual = crc32(bytes.data(), bytes.size() - 4);
    if (stored != actual) {
        throw FormatError("container: checksum mismatch (stored " + std::to_string(stored) +
                          ", computed " + std::to_string(actual) + ")");
    }

    ByteReader r(bytes.data(), bytes.size() - 4);
    std::array<char, 4> magic{};
    r.raw(magic.data(), magic.size(), "magic");
    if (magic != kContainerMagic) throw FormatError("container: bad magic (expected LWC1)");
    const std::uint16_t major = r.u16("version major");
    r.u16("version minor");
    if (major > kContainerMajor) {
        throw FormatError("container: version major " + std::to_string(major) +
                          " is newer than supported " + std::to_string(kContainerMajor));
    }

    const std::uint32_t layer_count = r.u32("layer count");
    std::vector<QuantizedLayer> layers(layer_count);
    for (std::uint32_t li = 0; li < layer_count; ++li) {
        QuantizedLayer& layer = layers[li];
        const std::uint32_t name_len = r.u32("name length");
        layer.name.resize(name_len);
        if (name_len > 0) r.raw(layer.name.data(), name_len, "name");
        layer.rows = r.u32("rows");
        layer.cols = r.u32("cols");
        layer.block_size = r.u32("block size");
        if (layer.rows == 0 || layer.cols == 0 || layer.block_size == 0) {
            throw FormatError("container: layer '" + layer.name + "' has an empty dimension");
        }

        std::vector<std::uint8_t> precisions(layer.rows);
        r.raw(precisions.data(), precisions.size(), "precision array");
        layer.books.resize(layer.rows);
        std::size_t payload = 0;
        for (std::uint32_t ch = 0; ch < layer.rows; ++ch) {
            if (!is_supported_precision(precisions[ch])) {
                throw FormatError("container: channel " + std::to_string(ch) +
                                  " precision " + std::to_string(precisions[ch]) +
                                  " unsupported at offset " + std::to_string(r.offset()));
            }
            layer.books[ch].precision = precisions[ch];
            payload += packed_byte_count(precisions[ch], layer.cols);
        }
        for (std::uint32_t ch = 0; ch < layer.rows; ++ch) {
            ChannelCodebook& cb = layer.books[ch];
            const std::size_t levels = std::size_t{1} << cb.precision;
            cb.mappings.resize(levels);
            cb.thresholds.resize(levels - 1);
            for (float& m : cb.mappings) m = r.f32("mapping");
            for (float& t : cb.thresholds) t = r.f32("threshold");
        }
        layer.absmax.resize(static_cast<std::size_t>(layer.rows) * layer.blocks_per_row());
        for (float& a : layer.absmax) a = r.f32("absmax");
        layer.packed.resize(payload);
        r.raw(layer.packed.data(), payload, "packed payload");

        if (r.u8("factor flag") != 0) {
            layer.rank = r.u32("rank");
            if (layer.rank == 0) throw FormatError("container: factor flag set but rank is 0");
            layer.l1.resize(static_cast<std::size_t>(layer.rows) * layer.rank);
            layer.l2.resize(static_cast<std::size_t>(layer.rank) * layer.cols);
            for (float& v : layer.l1) v = r.f32("l1");
            for (float& v : layer.l2) v = r.f32("l2");
        }
        validate(layer);
    }
    if (r.remaining() != 0) {
        throw FormatError("container: " + std::to_string(r.remaining()) +
                          " unexpected trailing bytes at offset " + std::to_string(r.offset()));
    }
    return layers;
}

void write_container(const std::string& path, const std::vector<QuantizedLayer>& layers) {
    write_file(path, serialize_container(layers));
}

std::vector<QuantizedLayer> read_container(const std::string& path) {
    return parse_container(read_file(path));
}

namespace {

nlohmann::json codebook_to_json(const Codebook& book) {
    return {{"precision", book.precision},
            {"mappings", book.mappings},
            {"thresholds", book.thresholds}};
}

Codebook codebook_from_json(const nlohmann::json& j) {
    Codebook book;
    book.precision = j.at("precision").get<int>();
    book.mappings = j.at("mappings").get<std::vector<double>>();
    book.thresholds = j.at("thresholds").get<std::vector<double>>();
    validate(book);
    return book;
}

}  // namespace

nlohmann::json maps_to_json(const std::vector<LayerMaps>& layers, const MseBuildOptions& opts) {
    nlohmann::json doc;
    doc["format"] = "lowra-maps";
    doc["version"] = 1;
    doc["block_size"] = opts.block_size;
    doc["lloyd_iters"] = opts.lloyd_iters;
    doc["weight_mode"] = opts.weight_mode == WeightMode::Absmax ? "absmax" : "absmax_sq";
    doc["layers"] = nlohmann::json::array();
    for (const LayerMaps& layer : layers) {
        nlohmann::json jl;
        jl["name"] = layer.name;
        jl["rows"] = layer.rows;
        jl["cols"] = layer.cols;
        jl["precisions"] = layer.fit.table.precisions;
        jl["mse"] = layer.fit.table.mse;
        nlohmann::json books = nlohmann::json::array();
        for (const auto& per_precision : layer.fit.books) {
            nlohmann::json jb = nlohmann::json::array();
            for (const Codebook& book : per_precision) jb.push_back(codebook_to_json(book));
            books.push_back(std::move(jb));
        }
        jl["books"] = std::move(books);
        doc["layers"].push_back(std::move(jl));
    }
    return doc;
}

std::vector<LayerMaps> maps_from_json(const nlohmann::json& doc, MseBuildOptions* opts_out) {
    if (doc.value("format", "") != "lowra-maps") {
        throw FormatError("maps document: missing or wrong format tag");
    }
    if (doc.value("version", 0) > 1) {
        throw FormatError("maps document: version newer than supported");
    }
    if (opts_out != nullptr) {
        opts_out->block_size = doc.at("block_size").get<std::size_t>();
        opts_out->lloyd_iters = doc.at("lloyd_iters").get<int>();
        opts_out->weight_mode = doc.value("weight_mode", "absmax") == std::string("absmax_sq")
                                    ? WeightMode::AbsmaxSquared
                                    : WeightMode::Absmax;
    }
    std::vector<LayerMaps> layers;
    for (const auto& jl : doc.at("layers")) {
        LayerMaps layer;
        layer.name = jl.at("name").get<std::string>();
        layer.rows = jl.at("rows").get<std::size_t>();
        layer.cols = jl.at("cols").get<std::size_t>();
        layer.fit.table.precisions = jl.at("precisions").get<std::vector<int>>();
        layer.fit.table.channels = layer.rows;
        layer.fit.table.mse = jl.at("mse").get<std::vector<double>>();
        layer.fit.table.params_per_channel.assign(layer.rows, layer.cols);
        if (layer.fit.table.mse.size() != layer.rows * layer.fit.table.precisions.size()) {
            throw FormatError("maps document: MSE table size mismatch for layer '" +
                              layer.name + "'");
        }
        for (const auto& jb : jl.at("books")) {
            std::vector<Codebook> per_precision;
            for (const auto& jc : jb) per_precision.push_back(codebook_from_json(jc));
            if (per_precision.size() != layer.rows) {
                throw FormatError("maps document: codebook count mismatch for layer '" +
                                  layer.name + "'");
            }
            layer.fit.books.push_back(std::move(per_precision));
        }
        if (layer.fit.books.size() != layer.fit.table.precisions.size()) {
            throw FormatError("maps document: precision count mismatch for layer '" +
                              layer.name + "'");
        }
        layers.push_back(std::move(layer));
    }
    return layers;
}

nlohmann::json assignment_to_json(const AssignmentDoc& doc) {
    nlohmann::json j;
    j["format"] = "lowra-assign";
    j["version"] = 1;
    j["target_bpp"] = doc.target_bpp;
    j["allowed"] = doc.allowed;
    j["status"] = to_string(doc.assignment.status);
    j["total_sse"] = doc.assignment.total_sse;
    j["bits_used"] = doc.assignment.bits_used;
    j["budget_bits"] = doc.assignment.budget_bits;
    j["achieved_bpp"] = doc.assignment.achieved_bpp;
    j["layers"] = nlohmann::json::array();
    std::size_t offset = 0;
    for (std::size_t li = 0; li < doc.layer_names.size(); ++li) {
        nlohmann::json jl;
        jl["name"] = doc.layer_names[li];
        jl["bits"] = std::vector<int>(
            doc.assignment.bits_per_channel.begin() + static_cast<std::ptrdiff_t>(offset),
            doc.assignment.bits_per_channel.begin() +
                static_cast<std::ptrdiff_t>(offset + doc.layer_rows[li]));
        offset += doc.layer_rows[li];
        j["layers"].push_back(std::move(jl));
    }
    return j;
}

AssignmentDoc assignment_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "lowra-assign") {
        throw FormatError("assignment document: missing or wrong format tag");
    }
    if (j.value("version", 0) > 1) {
        throw FormatError("assignment document: version newer than supported");
    }
    AssignmentDoc doc;
    doc.target_bpp = j.at("target_bpp").get<double>();
    doc.allowed = j.at("allowed").get<std::vector<int>>();
    doc.assignment.total_sse = j.at("total_sse").get<double>();
    doc.assignment.bits_used = j.at("bits_used").get<std::uint64_t>();
    doc.assignment.budget_bits = j.at("budget_bits").get<std::uint64_t>();
    doc.assignment.achieved_bpp = j.at("achieved_bpp").get<double>();
    const std::string status = j.at("status").get<std::string>();
    doc.assignment.status = status == "OPTIMAL"
                                ? SolveStatus::Optimal
                                : (status == "FEASIBLE" ? SolveStatus::Feasible
                                                        : SolveStatus::Infeasible);
    for (const auto& jl : j.at("layers")) {
        doc.layer_names.push_back(jl.at("name").get<std::string>());
        const auto bits = jl.at("bits").get<std::vector<int>>();
        doc.layer_rows.push_back(bits.size());
        doc.assignment.bits_per_channel.insert(doc.assignment.bits_per_channel.end(),
                                               bits.begin(), bits.end());
    }
    return doc;
}

}  // namespace lowra
