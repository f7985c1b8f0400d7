#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "lowra/assigner.hpp"
#include "lowra/lloydmax.hpp"
#include "lowra/quantized_layer.hpp"
#include "lowra/tensor.hpp"

namespace lowra {

/// LWT1 tensor file: magic "LWT1", u8 dtype (0 = real32), u8 ndim,
/// ndim x u64 little-endian dims, then the row-major little-endian payload.
struct TensorData {
    std::vector<std::uint64_t> dims;
    std::vector<float> data;
};

void write_tensor(const std::string& path, const TensorData& tensor);
TensorData read_tensor(const std::string& path);

/// 1-D tensors load as a single row.
WeightMatrix to_matrix(const TensorData& tensor);
TensorData from_matrix(const WeightMatrix& matrix);

void write_matrix(const std::string& path, const WeightMatrix& matrix);
WeightMatrix read_matrix(const std::string& path);

/// LWC1 container: magic, u16 version major/minor, layer records, and a
/// trailing CRC-32 of everything before it. Readers reject newer majors and
/// validate every layer invariant.
void write_container(const std::string& path, const std::vector<QuantizedLayer>& layers);
std::vector<QuantizedLayer> read_container(const std::string& path);
std::vector<std::uint8_t> serialize_container(const std::vector<QuantizedLayer>& layers);
std::vector<QuantizedLayer> parse_container(const std::vector<std::uint8_t>& bytes);

std::uint32_t crc32(const std::uint8_t* data, std::size_t len);

/// Fitted maps for one layer, as produced by the map learner.
struct LayerMaps {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    MseBuildResult fit;
};

nlohmann::json maps_to_json(const std::vector<LayerMaps>& layers, const MseBuildOptions& opts);
std::vector<LayerMaps> maps_from_json(const nlohmann::json& doc, MseBuildOptions* opts_out);

/// Assignment interchange: per-layer channel precisions plus the solver
/// summary line.
struct AssignmentDoc {
    std::vector<std::string> layer_names;
    std::vector<std::size_t> layer_rows;
    double target_bpp = 0.0;
    std::vector<int> allowed;
    PrecisionAssignment assignment;
};

nlohmann::json assignment_to_json(const AssignmentDoc& doc);
AssignmentDoc assignment_from_json(const nlohmann::json& doc);

}  // namespace lowra
