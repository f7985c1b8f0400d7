#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace lowra {

/// Partition of the elements under a fixed set of thresholds. The partition
/// never changes during codepoint refinement.
struct BinMembership {
    std::vector<std::uint32_t> bin_of;                 // per element
    std::vector<std::vector<std::uint32_t>> members;   // per bin
};

BinMembership bin_membership(std::span<const float> values,
                             std::span<const double> thresholds);

/// Caller-supplied task loss: reconstructed values -> (loss, dL/dQ(x_i)).
/// Must be deterministic for fixed inputs.
using LossOracle =
    std::function<std::pair<double, std::vector<double>>(std::span<const double> recon)>;

/// Straight-through codepoint gradient: dL/dm_j = sum of the element
/// gradients over bin j's members.
std::vector<double> codepoint_gradient(const BinMembership& membership,
                                       std::span<const double> elem_grads,
                                       std::size_t bin_count);

struct RefineResult {
    std::vector<double> mappings;
    std::vector<double> loss_trace;  // loss before each step, then final
    int steps_run = 0;
    bool aborted = false;       // non-finite loss encountered
    bool out_of_order = false;  // final mappings clamped back into their bins
};

/// Plain gradient descent on the codepoints with the thresholds (and hence
/// the bin structure) fixed. If the final mappings violate interleaving with
/// the thresholds they are clamped into their bins and the result is flagged.
RefineResult refine_codepoints(std::span<const float> values,
                               std::span<const double> thresholds,
                               std::vector<double> init_mappings, const LossOracle& oracle,
                               double step_size, int steps);

/// L = (1/n) sum (recon_i - target_i)^2.
LossOracle make_mse_oracle(std::vector<float> targets);

/// L = sum w_i (recon_i - target_i)^2 / sum w_i.
LossOracle make_weighted_mse_oracle(std::vector<float> targets, std::vector<double> weights);

/// Apply externally computed per-element gradients for one descent step.
std::vector<double> apply_gradient_step(const BinMembership& membership,
                                        std::span<const double> elem_grads,
                                        std::span<const double> mappings, double step_size);

/// Largest step size with guaranteed per-step loss decrease for the MSE
/// oracle: the reciprocal of the steepest per-bin curvature 2|B_j|/n.
double mse_safe_step(const BinMembership& membership, std::size_t n);

/// Weighted-MSE counterpart; curvature per bin is 2 * sum_j w / sum w.
double weighted_mse_safe_step(const BinMembership& membership,
                              std::span<const double> weights);

}  // namespace lowra
