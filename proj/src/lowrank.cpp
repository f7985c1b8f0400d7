#include "lowra/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lowra/error.hpp"

namespace lowra {

namespace {

constexpr double kOrthogonalityTol = 1e-14;
constexpr int kMaxSweeps = 100;

struct ColumnMatrix {
    std::size_t rows = 0;
    std::vector<std::vector<double>> cols;
};

// One-sided Jacobi (Hestenes): orthogonalize the columns of B while
// accumulating the rotations in V. On exit B = U * diag(sigma), V holds the
// right singular vectors.
void jacobi_orthogonalize(ColumnMatrix& b, ColumnMatrix& v) {
    const std::size_t n = b.cols.size();
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < b.rows; ++i) {
                    alpha += b.cols[p][i] * b.cols[p][i];
                    beta += b.cols[q][i] * b.cols[q][i];
                    gamma += b.cols[p][i] * b.cols[q][i];
                }
                if (gamma == 0.0 || std::fabs(gamma) <= kOrthogonalityTol * std::sqrt(alpha * beta)) {
                    continue;
                }
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t =
                    (zeta >= 0.0 ? 1.0 : -1.0) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < b.rows; ++i) {
                    const double bp = b.cols[p][i];
                    const double bq = b.cols[q][i];
                    b.cols[p][i] = c * bp - s * bq;
                    b.cols[q][i] = s * bp + c * bq;
                }
                for (std::size_t i = 0; i < v.rows; ++i) {
                    const double vp = v.cols[p][i];
                    const double vq = v.cols[q][i];
                    v.cols[p][i] = c * vp - s * vq;
                    v.cols[q][i] = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }
}

}  // namespace

LowRankFactors truncated_svd(const WeightMatrix& matrix, std::size_t rank) {
    validate(matrix);
    if (rank == 0) throw ConfigError("truncated_svd: rank must be >= 1");

    LowRankFactors out;
    out.rows = matrix.rows;
    out.cols = matrix.cols;
    const std::size_t max_rank = std::min(matrix.rows, matrix.cols);
    out.rank = std::min(rank, max_rank);
    out.rank_clamped = rank > max_rank;

    // Orthogonalize the smaller dimension's columns.
    const bool transposed = matrix.rows < matrix.cols;
    const std::size_t m = transposed ? matrix.cols : matrix.rows;
    const std::size_t n = transposed ? matrix.rows : matrix.cols;

    ColumnMatrix b;
    b.rows = m;
    b.cols.assign(n, std::vector<double>(m, 0.0));
    for (std::size_t r = 0; r < matrix.rows; ++r) {
        for (std::size_t c = 0; c < matrix.cols; ++c) {
            const double v = matrix.at(r, c);
            if (transposed) {
                b.cols[r][c] = v;
            } else {
                b.cols[c][r] = v;
            }
        }
    }
    ColumnMatrix v;
    v.rows = n;
    v.cols.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) v.cols[j][j] = 1.0;

    jacobi_orthogonalize(b, v);

    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j) {
        double norm2 = 0.0;
        for (double x : b.cols[j]) norm2 += x * x;
        sigma[j] = std::sqrt(norm2);
    }
    std::vector<std::size_t> by_sigma(n);
    std::iota(by_sigma.begin(), by_sigma.end(), 0);
    std::stable_sort(by_sigma.begin(), by_sigma.end(),
                     [&](std::size_t a, std::size_t c) { return sigma[a] > sigma[c]; });

    // In the non-transposed orientation: L1 column j is b's j-th singular
    // column (= u_j sigma_j), L2 row j is v_j^T. Transposition swaps the roles.
    out.l1.assign(out.rows * out.rank, 0.0);
    out.l2.assign(out.rank * out.cols, 0.0);
    for (std::size_t j = 0; j < out.rank; ++j) {
        const std::size_t src = by_sigma[j];
        if (!transposed) {
            for (std::size_t r = 0; r < out.rows; ++r) out.l1[r * out.rank + j] = b.cols[src][r];
            for (std::size_t c = 0; c < out.cols; ++c) out.l2[j * out.cols + c] = v.cols[src][c];
        } else {
            // matrix = v * diag(sigma) * u^T, so the scale lands on v.
            for (std::size_t r = 0; r < out.rows; ++r) {
                out.l1[r * out.rank + j] = v.cols[src][r] * sigma[src];
            }
            if (sigma[src] > 0.0) {
                for (std::size_t c = 0; c < out.cols; ++c) {
                    out.l2[j * out.cols + c] = b.cols[src][c] / sigma[src];
                }
            }
        }
    }
    return out;
}

double residual_fro_norm(const WeightMatrix& w, const WeightMatrix& dequantized,
                         const LowRankFactors& factors) {
    if (w.rows != dequantized.rows || w.cols != dequantized.cols ||
        w.rows != factors.rows || w.cols != factors.cols) {
        throw ShapeError("residual_fro_norm: shape mismatch");
    }
    double acc = 0.0;
    for (std::size_t r = 0; r < w.rows; ++r) {
        for (std::size_t c = 0; c < w.cols; ++c) {
            double lowrank = 0.0;
            for (std::size_t j = 0; j < factors.rank; ++j) {
                lowrank += factors.l1[r * factors.rank + j] * factors.l2[j * factors.cols + c];
            }
            const double d =
                static_cast<double>(w.at(r, c)) - dequantized.at(r, c) - lowrank;
            acc += d * d;
        }
    }
    return std::sqrt(acc);
}

namespace {

WeightMatrix subtract_lowrank(const WeightMatrix& w, const LowRankFactors& factors) {
    WeightMatrix out;
    out.rows = w.rows;
    out.cols = w.cols;
    out.data.resize(w.data.size());
    for (std::size_t r = 0; r < w.rows; ++r) {
        for (std::size_t c = 0; c < w.cols; ++c) {
            double lowrank = 0.0;
            for (std::size_t j = 0; j < factors.rank; ++j) {
                lowrank += factors.l1[r * factors.rank + j] * factors.l2[j * factors.cols + c];
            }
            out.at(r, c) = static_cast<float>(static_cast<double>(w.at(r, c)) - lowrank);
        }
    }
    return out;
}

LowRankFactors zero_factors(const WeightMatrix& w, std::size_t rank) {
    LowRankFactors f;
    f.rows = w.rows;
    f.cols = w.cols;
    f.rank = std::min(rank, std::min(w.rows, w.cols));
    f.l1.assign(f.rows * f.rank, 0.0);
    f.l2.assign(f.rank * f.cols, 0.0);
    return f;
}

void attach_factors(QuantizedLayer& layer, const LowRankFactors& f) {
    layer.rank = static_cast<std::uint32_t>(f.rank);
    layer.l1.assign(f.l1.begin(), f.l1.end());
    layer.l2.assign(f.l2.begin(), f.l2.end());
}

}  // namespace

LowRankInit loftq_init(const WeightMatrix& w, const ChannelQuantizer& quantizer,
                       std::size_t rank, int steps, const std::string& name) {
    if (steps < 1) throw ConfigError("loftq_init: steps must be >= 1");
    if (rank == 0) throw ConfigError("loftq_init: rank must be >= 1");

    LowRankInit out;
    out.report.method = "loftq";
    out.report.rank_clamped = rank > std::min(w.rows, w.cols);

    LowRankFactors factors = zero_factors(w, rank);
    for (int t = 0; t < steps; ++t) {
        const WeightMatrix residual = subtract_lowrank(w, factors);
        out.layer = quantize_matrix(residual, quantizer, name);
        const WeightMatrix deq = dequantize_layer(out.layer);

        WeightMatrix error;
        error.rows = w.rows;
        error.cols = w.cols;
        error.data.resize(w.data.size());
        for (std::size_t i = 0; i < w.data.size(); ++i) {
            error.data[i] = w.data[i] - deq.data[i];
        }
        factors = truncated_svd(error, factors.rank);
        out.report.residual_norms.push_back(residual_fro_norm(w, deq, factors));
        out.report.steps_run = t + 1;
    }
    attach_factors(out.layer, factors);
    out.factors = std::move(factors);
    return out;
}

LowRankInit pissa_init(const WeightMatrix& w, const ChannelQuantizer& quantizer,
                       std::size_t rank, const std::string& name) {
    if (rank == 0) throw ConfigError("pissa_init: rank must be >= 1");

    LowRankInit out;
    out.report.method = "pissa";
    out.report.rank_clamped = rank > std::min(w.rows, w.cols);

    LowRankFactors factors = truncated_svd(w, rank);
    const WeightMatrix residual = subtract_lowrank(w, factors);
    out.layer = quantize_matrix(residual, quantizer, name);
    const WeightMatrix deq = dequantize_layer(out.layer);
    out.report.residual_norms.push_back(residual_fro_norm(w, deq, factors));
    out.report.steps_run = 1;

    attach_factors(out.layer, factors);
    out.factors = std::move(factors);
    return out;
}

}  // namespace lowra
