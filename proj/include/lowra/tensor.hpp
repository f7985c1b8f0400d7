#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lowra {

/// 2-D row-major weight tensor. Rows are output channels, the unit of
/// per-channel quantization; cols is the per-channel parameter count.
struct WeightMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;  // rows * cols, row-major

    float at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    float& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    std::span<const float> row(std::size_t r) const {
        return {data.data() + r * cols, cols};
    }
    std::span<float> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::size_t size() const { return rows * cols; }
};

/// Throws ShapeError on inconsistent dimensions, DataError on non-finite
/// values (the message names the first offending element).
void validate(const WeightMatrix& m);

/// Per-block absmax scales recorded by block_normalize. Blocks are contiguous
/// runs of block_size elements within a row; the trailing block of a row may
/// be shorter. Blocks never span two rows.
struct AbsmaxState {
    std::size_t block_size = 64;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> absmax;  // rows * blocks_per_row, row-major

    std::size_t blocks_per_row() const {
        return (cols + block_size - 1) / block_size;
    }
    /// Scale of the block containing column c of row r.
    float block_scale(std::size_t r, std::size_t c) const {
        return absmax[r * blocks_per_row() + c / block_size];
    }
    std::span<const float> row_scales(std::size_t r) const {
        return {absmax.data() + r * blocks_per_row(), blocks_per_row()};
    }
};

struct NormalizeResult {
    WeightMatrix normalized;
    AbsmaxState state;
};

/// Groupwise absmax normalization: each block is divided by its maximum
/// absolute value, so every output lies in [-1, 1] and the absmax element
/// maps to exactly +/-1. All-zero blocks map to zeros with scale 0.
NormalizeResult block_normalize(const WeightMatrix& matrix, std::size_t block_size);

/// Inverse of block_normalize: multiply each block by its recorded scale.
WeightMatrix block_denormalize(const WeightMatrix& normalized, const AbsmaxState& state);

/// Mean per-channel population standard deviations along both axes.
struct StdReport {
    double mean_std_out = 0.0;  // mean over rows of per-row std
    double mean_std_in = 0.0;   // mean over columns of per-column std
    double ratio = 0.0;         // mean_std_out / mean_std_in; +inf when mean_std_in == 0
};

StdReport channel_std_stats(const WeightMatrix& matrix);

}  // namespace lowra
