#include "lowra/pipeline.hpp"

#include <algorithm>
#include <sstream>

#include "lowra/error.hpp"

namespace lowra {

namespace {

std::vector<int> effective_precisions(const PipelineConfig& cfg) {
    std::vector<int> p =
        cfg.precisions.empty() ? default_allowed_precisions(cfg.target_bpp) : cfg.precisions;
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    return p;
}

}  // namespace

PipelineResult run_pipeline(const std::vector<LayerInput>& inputs, const PipelineConfig& cfg) {
    if (inputs.empty()) throw ShapeError("run_pipeline: no input layers");
    if (cfg.lowrank_method != "loftq" && cfg.lowrank_method != "pissa") {
        throw ConfigError("run_pipeline: unknown low-rank method '" + cfg.lowrank_method + "'");
    }
    const std::vector<int> precisions = effective_precisions(cfg);

    PipelineResult result;

    // Stage 1: per-layer map learning and the MSE table.
    MseBuildOptions mse_opts;
    mse_opts.block_size = cfg.block_size;
    mse_opts.lloyd_iters = cfg.lloyd_iters;
    mse_opts.weight_mode = cfg.weight_mode;

    MseTable global;
    global.precisions = precisions;
    std::vector<std::size_t> layer_offset(inputs.size());
    for (std::size_t li = 0; li < inputs.size(); ++li) {
        LayerMaps maps;
        maps.name = inputs[li].name;
        maps.rows = inputs[li].weights.rows;
        maps.cols = inputs[li].weights.cols;
        try {
            maps.fit = build_mse_table(inputs[li].weights, precisions, mse_opts);
        } catch (const Error& e) {
            throw Error("stage fit-maps, layer '" + inputs[li].name + "': " + e.what());
        }
        layer_offset[li] = global.channels;
        global.channels += maps.rows;
        global.mse.insert(global.mse.end(), maps.fit.table.mse.begin(),
                          maps.fit.table.mse.end());
        global.params_per_channel.insert(global.params_per_channel.end(),
                                         maps.fit.table.params_per_channel.begin(),
                                         maps.fit.table.params_per_channel.end());
        result.maps.push_back(std::move(maps));
    }

    // Stage 2: precision assignment across all layers.
    AssignOptions assign_opts;
    assign_opts.target_bpp = cfg.target_bpp;
    assign_opts.allowed = precisions;
    assign_opts.clusters_per_group = cfg.clusters_per_group;
    assign_opts.kmeans_max_iter = cfg.kmeans_max_iter;
    assign_opts.seed = cfg.seed;
    try {
        result.assignment = assign_precisions(global, assign_opts);
    } catch (const InfeasibleError&) {
        throw;
    } catch (const Error& e) {
        throw Error(std::string("stage assign: ") + e.what());
    }

    // Stages 3-4: quantize/pack each layer, with optional low-rank init.
    for (std::size_t li = 0; li < inputs.size(); ++li) {
        const LayerMaps& maps = result.maps[li];
        ChannelQuantizer quantizer;
        quantizer.block_size = cfg.block_size;
        quantizer.books.resize(maps.rows);
        LayerSummary summary;
        summary.name = maps.name;
        summary.rows = maps.rows;
        summary.cols = maps.cols;
        for (std::size_t ch = 0; ch < maps.rows; ++ch) {
            const int bits = result.assignment.bits_per_channel[layer_offset[li] + ch];
            const auto it = std::find(precisions.begin(), precisions.end(), bits);
            const std::size_t pi = static_cast<std::size_t>(it - precisions.begin());
            quantizer.books[ch] = maps.fit.books[pi][ch];
            summary.sse += maps.fit.table.at(ch, pi) * static_cast<double>(maps.cols);
            summary.bits_used += static_cast<std::uint64_t>(bits) * maps.cols;
        }
        summary.achieved_bpp = static_cast<double>(summary.bits_used) /
                               static_cast<double>(maps.rows * maps.cols);

        try {
            if (cfg.rank > 0) {
                LowRankInit init =
                    cfg.lowrank_method == "loftq"
                        ? loftq_init(inputs[li].weights, quantizer, cfg.rank,
                                     cfg.lowrank_steps, maps.name)
                        : pissa_init(inputs[li].weights, quantizer, cfg.rank, maps.name);
                summary.residual_norms = init.report.residual_norms;
                result.layers.push_back(std::move(init.layer));
            } else {
                result.layers.push_back(
                    quantize_matrix(inputs[li].weights, quantizer, maps.name));
            }
        } catch (const Error& e) {
            throw Error("stage quantize, layer '" + maps.name + "': " + e.what());
        }
        result.summaries.push_back(std::move(summary));
    }

    // Memory estimates over the actual assignment.
    std::vector<LayerDims> dims;
    for (const LayerInput& input : inputs) {
        dims.push_back({input.name, input.weights.rows, input.weights.cols});
    }
    result.memory_inference = estimate_memory(dims, result.assignment.bits_per_channel,
                                              cfg.block_size, cfg.rank, MemoryMode::Inference);
    result.memory_finetune = estimate_memory(dims, result.assignment.bits_per_channel,
                                             cfg.block_size, cfg.rank, MemoryMode::Finetune);
    return result;
}

std::string render_report(const PipelineResult& result, const PipelineConfig& cfg) {
    std::ostringstream os;
    os << "lowra pipeline report\n";
    os << "  target bpp: " << cfg.target_bpp << "\n";
    os << "  achieved bpp: " << result.assignment.achieved_bpp << " (" << result.assignment.bits_used
       << " of " << result.assignment.budget_bits << " budget bits)\n";
    os << "  solver status: " << to_string(result.assignment.status) << "\n";
    os << "  total SSE: " << result.assignment.total_sse << "\n";
    for (const LayerSummary& s : result.summaries) {
        os << "  layer " << s.name << " (" << s.rows << "x" << s.cols << "): SSE " << s.sse
           << ", bpp " << s.achieved_bpp;
        if (!s.residual_norms.empty()) {
            os << ", residual";
            for (double r : s.residual_norms) os << " " << r;
        }
        os << "\n";
    }
    os << render_report(result.memory_inference);
    os << render_report(result.memory_finetune);
    return os.str();
}

nlohmann::json summary_json(const PipelineResult& result, const PipelineConfig& cfg) {
    nlohmann::json j;
    j["target_bpp"] = cfg.target_bpp;
    j["achieved_bpp"] = result.assignment.achieved_bpp;
    j["bits_used"] = result.assignment.bits_used;
    j["budget_bits"] = result.assignment.budget_bits;
    j["status"] = to_string(result.assignment.status);
    j["total_sse"] = result.assignment.total_sse;
    j["layers"] = nlohmann::json::array();
    for (const LayerSummary& s : result.summaries) {
        j["layers"].push_back({{"name", s.name},
                               {"rows", s.rows},
                               {"cols", s.cols},
                               {"sse", s.sse},
                               {"bits_used", s.bits_used},
                               {"achieved_bpp", s.achieved_bpp},
                               {"residual_norms", s.residual_norms}});
    }
    j["memory"] = {{"inference_total_bytes", result.memory_inference.total.total()},
                   {"finetune_total_bytes", result.memory_finetune.total.total()},
                   {"effective_bits_per_param",
                    result.memory_inference.effective_bits_per_param}};
    return j;
}

}  // namespace lowra
