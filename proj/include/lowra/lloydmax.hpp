#pragma once

#include <cstddef>
#include <vector>

#include "lowra/codebook.hpp"
#include "lowra/tensor.hpp"

namespace lowra {

/// One channel's normalized values with a positive weight per element
/// (the absmax of the element's block under the groupwise scheme).
struct WeightedSamples {
    std::vector<float> values;
    std::vector<double> weights;
};

/// Throws on length mismatch, negative weights, or all-zero weights.
void validate(const WeightedSamples& s);

/// Weighted mean squared error of quantizing the samples with the book:
/// sum_i w_i (x_i - m_bin(x_i))^2 / sum_i w_i.
double weighted_mse(const WeightedSamples& samples, const Codebook& book);

struct FitTrace {
    /// Weighted MSE of the initial book followed by each adopted iteration.
    /// Non-increasing by construction.
    std::vector<double> mse;
    /// True when the fit reached a fixed point (a further iteration would
    /// leave the codebook unchanged) or the MSE stopped decreasing; false
    /// when the iteration cap ended the fit.
    bool converged = false;
    int iterations_run = 0;
};

struct FitResult {
    Codebook book;
    FitTrace trace;
};

/// Weighted Lloyd-Max on one channel. Each iteration bins the samples with
/// the current thresholds, replaces every nonempty bin's codepoint by its
/// weighted centroid (empty bins keep their previous codepoint), and moves
/// the thresholds to the midpoints of consecutive codepoints. Stops at
/// max_iters or when the weighted MSE stops going down; returns the
/// last-computed codebook.
FitResult lloyd_fit_channel(const WeightedSamples& samples, const Codebook& init,
                            int max_iters);

struct AveragedBooks {
    std::vector<double> shared_thresholds;
    std::vector<Codebook> books;
};

/// Replace every channel's thresholds by their elementwise mean across the
/// layer, then refit each channel's mappings with one weighted M-step under
/// the shared thresholds. Bins left empty keep their prior mapping (clamped
/// into the new bin when needed to preserve interleaving).
AveragedBooks average_thresholds(const std::vector<Codebook>& books,
                                 const std::vector<WeightedSamples>& samples);

/// Per-channel reconstruction error at each candidate precision, measured in
/// the original (denormalized) scale. Input to the precision assigner.
struct MseTable {
    std::vector<int> precisions;  // ascending
    std::size_t channels = 0;
    std::vector<double> mse;  // channels x precisions, row-major
    std::vector<std::size_t> params_per_channel;

    double at(std::size_t channel, std::size_t precision_idx) const {
        return mse[channel * precisions.size() + precision_idx];
    }
    double& at(std::size_t channel, std::size_t precision_idx) {
        return mse[channel * precisions.size() + precision_idx];
    }
};

enum class WeightMode {
    Absmax,         // w_i = absmax of the element's block
    AbsmaxSquared,  // w_i = absmax^2; models the denormalized squared error exactly
};

struct MseBuildOptions {
    std::size_t block_size = 64;
    int lloyd_iters = 2;
    WeightMode weight_mode = WeightMode::Absmax;
};

struct MseBuildResult {
    MseTable table;
    /// books[precision_idx][channel]: fitted codebook after the layer-wide
    /// threshold averaging for that precision.
    std::vector<std::vector<Codebook>> books;
};

/// Fits per-channel codebooks at every requested precision (Lloyd-Max from
/// the default initialization, then layer-wide threshold averaging) and
/// tabulates each channel's denormalized MSE.
MseBuildResult build_mse_table(const WeightMatrix& matrix, const std::vector<int>& precisions,
                               const MseBuildOptions& opts);

/// Weights for one channel under the given mode.
std::vector<double> channel_weights(const AbsmaxState& state, std::size_t row, WeightMode mode);

}  // namespace lowra
