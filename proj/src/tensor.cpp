#include "lowra/tensor.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "lowra/error.hpp"

namespace lowra {

void validate(const WeightMatrix& m) {
    if (m.rows == 0 || m.cols == 0) {
        throw ShapeError("WeightMatrix: rows and cols must be >= 1, got " +
                         std::to_string(m.rows) + "x" + std::to_string(m.cols));
    }
    if (m.data.size() != m.rows * m.cols) {
        throw ShapeError("WeightMatrix: data length " + std::to_string(m.data.size()) +
                         " does not match " + std::to_string(m.rows) + "x" +
                         std::to_string(m.cols));
    }
    for (std::size_t i = 0; i < m.data.size(); ++i) {
        if (!std::isfinite(m.data[i])) {
            throw DataError("WeightMatrix: non-finite value at row " +
                            std::to_string(i / m.cols) + ", col " +
                            std::to_string(i % m.cols));
        }
    }
}

NormalizeResult block_normalize(const WeightMatrix& matrix, std::size_t block_size) {
    if (block_size == 0) {
        throw ConfigError("block_normalize: block_size must be >= 1");
    }
    if (matrix.rows == 0 || matrix.cols == 0 || matrix.data.size() != matrix.rows * matrix.cols) {
        throw ShapeError("block_normalize: inconsistent matrix shape");
    }

    NormalizeResult out;
    out.normalized.rows = matrix.rows;
    out.normalized.cols = matrix.cols;
    out.normalized.data.resize(matrix.data.size());
    out.state.block_size = block_size;
    out.state.rows = matrix.rows;
    out.state.cols = matrix.cols;

    const std::size_t bpr = out.state.blocks_per_row();
    out.state.absmax.resize(matrix.rows * bpr);

    for (std::size_t r = 0; r < matrix.rows; ++r) {
        for (std::size_t b = 0; b < bpr; ++b) {
            const std::size_t begin = b * block_size;
            const std::size_t end = std::min(begin + block_size, matrix.cols);
            float scale = 0.0f;
            for (std::size_t c = begin; c < end; ++c) {
                const float v = std::fabs(matrix.at(r, c));
                if (!std::isfinite(v)) {
                    throw DataError("block_normalize: non-finite value in row " +
                                    std::to_string(r) + ", block " + std::to_string(b));
                }
                if (v > scale) scale = v;
            }
            out.state.absmax[r * bpr + b] = scale;
            for (std::size_t c = begin; c < end; ++c) {
                out.normalized.at(r, c) = scale > 0.0f ? matrix.at(r, c) / scale : 0.0f;
            }
        }
    }
    return out;
}

WeightMatrix block_denormalize(const WeightMatrix& normalized, const AbsmaxState& state) {
    if (normalized.rows != state.rows || normalized.cols != state.cols) {
        throw ShapeError("block_denormalize: matrix is " + std::to_string(normalized.rows) +
                         "x" + std::to_string(normalized.cols) + " but state records " +
                         std::to_string(state.rows) + "x" + std::to_string(state.cols));
    }
    if (state.absmax.size() != state.rows * state.blocks_per_row()) {
        throw ShapeError("block_denormalize: absmax array has " +
                         std::to_string(state.absmax.size()) + " entries, expected " +
                         std::to_string(state.rows * state.blocks_per_row()));
    }
    WeightMatrix out;
    out.rows = normalized.rows;
    out.cols = normalized.cols;
    out.data.resize(normalized.data.size());
    for (std::size_t r = 0; r < out.rows; ++r) {
        for (std::size_t c = 0; c < out.cols; ++c) {
            out.at(r, c) = normalized.at(r, c) * state.block_scale(r, c);
        }
    }
    return out;
}

namespace {

double population_std(const double sum, const double sum_sq, const std::size_t n) {
    const double mean = sum / static_cast<double>(n);
    double var = sum_sq / static_cast<double>(n) - mean * mean;
    if (var < 0.0) var = 0.0;  // rounding guard
    return std::sqrt(var);
}

}  // namespace

StdReport channel_std_stats(const WeightMatrix& matrix) {
    validate(matrix);
    if (matrix.cols < 2) {
        throw ShapeError("channel_std_stats: need cols >= 2, got " +
                         std::to_string(matrix.cols));
    }

    StdReport report;

    double acc_out = 0.0;
    for (std::size_t r = 0; r < matrix.rows; ++r) {
        double s = 0.0, sq = 0.0;
        for (std::size_t c = 0; c < matrix.cols; ++c) {
            const double v = matrix.at(r, c);
            s += v;
            sq += v * v;
        }
        acc_out += population_std(s, sq, matrix.cols);
    }
    report.mean_std_out = acc_out / static_cast<double>(matrix.rows);

    double acc_in = 0.0;
    for (std::size_t c = 0; c < matrix.cols; ++c) {
        double s = 0.0, sq = 0.0;
        for (std::size_t r = 0; r < matrix.rows; ++r) {
            const double v = matrix.at(r, c);
            s += v;
            sq += v * v;
        }
        acc_in += population_std(s, sq, matrix.rows);
    }
    report.mean_std_in = acc_in / static_cast<double>(matrix.cols);

    report.ratio = report.mean_std_in > 0.0
                       ? report.mean_std_out / report.mean_std_in
                       : std::numeric_limits<double>::infinity();
    return report;
}

}  // namespace lowra
