#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lowra/quantized_layer.hpp"
#include "lowra/tensor.hpp"

namespace lowra {

/// Rank-r factors with all singular-value scale in l1: l1 = U_r * Sigma_r
/// (rows x r), l2 = V_r^T (r x cols).
struct LowRankFactors {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t rank = 0;
    std::vector<double> l1;
    std::vector<double> l2;
    bool rank_clamped = false;  // requested rank exceeded min(rows, cols)
};

/// Best rank-r approximation in Frobenius norm via one-sided Jacobi SVD.
/// A request above min(rows, cols) is clamped (flagged on the result).
LowRankFactors truncated_svd(const WeightMatrix& matrix, std::size_t rank);

/// W approx= dequant(layer) + l1 l2 reconstruction error in Frobenius norm.
double residual_fro_norm(const WeightMatrix& w, const WeightMatrix& dequantized,
                         const LowRankFactors& factors);

struct InitReport {
    std::string method;                  // "loftq" | "pissa"
    std::vector<double> residual_norms;  // ||W - deq(Q_t) - L1 L2||_F per step
    int steps_run = 0;
    bool rank_clamped = false;
};

struct LowRankInit {
    QuantizedLayer layer;
    LowRankFactors factors;
    InitReport report;
};

/// LoftQ alternation starting from zero factors: quantize the current
/// residual W - L1 L2, then refresh the factors with a truncated SVD of the
/// quantization error. Returns the last iterate, not the best one.
LowRankInit loftq_init(const WeightMatrix& w, const ChannelQuantizer& quantizer,
                       std::size_t rank, int steps, const std::string& name = "");

/// PiSSA: truncated SVD of the unquantized weight first, then one-shot
/// quantization of the remaining residual.
LowRankInit pissa_init(const WeightMatrix& w, const ChannelQuantizer& quantizer,
                       std::size_t rank, const std::string& name = "");

}  // namespace lowra
