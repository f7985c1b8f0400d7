#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "lowra/assigner.hpp"
#include "lowra/io.hpp"
#include "lowra/lowrank.hpp"
#include "lowra/memory.hpp"
#include "lowra/quantized_layer.hpp"

namespace lowra {

struct PipelineConfig {
    double target_bpp = 2.0;
    std::vector<int> precisions;  // empty -> default for the target bpp
    std::size_t block_size = 64;
    int lloyd_iters = 2;
    WeightMode weight_mode = WeightMode::Absmax;
    std::size_t clusters_per_group = 128;
    int kmeans_max_iter = 300;
    std::size_t rank = 0;  // 0: no low-rank factors
    int lowrank_steps = 5;
    std::string lowrank_method = "loftq";  // or "pissa"
    std::uint64_t seed = 0;
};

struct LayerInput {
    std::string name;
    WeightMatrix weights;
};

struct LayerSummary {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    double sse = 0.0;
    std::uint64_t bits_used = 0;
    double achieved_bpp = 0.0;
    std::vector<double> residual_norms;  // empty when rank == 0
};

struct PipelineResult {
    std::vector<QuantizedLayer> layers;
    PrecisionAssignment assignment;
    std::vector<LayerSummary> summaries;
    std::vector<LayerMaps> maps;
    MemoryReport memory_inference;
    MemoryReport memory_finetune;
};

/// Whole flow: per-layer codebook learning and threshold averaging, MSE
/// table, precision assignment, quantize/pack, optional low-rank init, and
/// the memory estimates. Deterministic for a fixed config and inputs.
PipelineResult run_pipeline(const std::vector<LayerInput>& inputs, const PipelineConfig& cfg);

std::string render_report(const PipelineResult& result, const PipelineConfig& cfg);
nlohmann::json summary_json(const PipelineResult& result, const PipelineConfig& cfg);

}  // namespace lowra
