#include "lowra/taskadapt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lowra/codebook.hpp"
#include "lowra/error.hpp"

namespace lowra {

BinMembership bin_membership(std::span<const float> values,
                             std::span<const double> thresholds) {
    BinMembership m;
    m.bin_of.resize(values.size());
    m.members.resize(thresholds.size() + 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (std::isnan(values[i])) {
            throw DataError("bin_membership: NaN at element " + std::to_string(i));
        }
        const int j = bin_index(values[i], thresholds);
        m.bin_of[i] = static_cast<std::uint32_t>(j);
        m.members[j].push_back(static_cast<std::uint32_t>(i));
    }
    return m;
}

std::vector<double> codepoint_gradient(const BinMembership& membership,
                                       std::span<const double> elem_grads,
                                       std::size_t bin_count) {
    if (elem_grads.size() != membership.bin_of.size()) {
        throw ShapeError("codepoint_gradient: " + std::to_string(elem_grads.size()) +
                         " gradients for " + std::to_string(membership.bin_of.size()) +
                         " elements");
    }
    std::vector<double> grad(bin_count, 0.0);
    for (std::size_t i = 0; i < elem_grads.size(); ++i) {
        if (!std::isfinite(elem_grads[i])) {
            throw DataError("codepoint_gradient: non-finite gradient at element " +
                            std::to_string(i));
        }
        grad[membership.bin_of[i]] += elem_grads[i];
    }
    return grad;
}

std::vector<double> apply_gradient_step(const BinMembership& membership,
                                        std::span<const double> elem_grads,
                                        std::span<const double> mappings, double step_size) {
    const std::vector<double> grad =
        codepoint_gradient(membership, elem_grads, mappings.size());
    std::vector<double> next(mappings.begin(), mappings.end());
    for (std::size_t j = 0; j < next.size(); ++j) next[j] -= step_size * grad[j];
    return next;
}

RefineResult refine_codepoints(std::span<const float> values,
                               std::span<const double> thresholds,
                               std::vector<double> init_mappings, const LossOracle& oracle,
                               double step_size, int steps) {
    if (steps < 1) throw ConfigError("refine_codepoints: steps must be >= 1");
    if (!(step_size > 0.0)) throw ConfigError("refine_codepoints: step_size must be > 0");
    if (init_mappings.size() != thresholds.size() + 1) {
        throw ShapeError("refine_codepoints: " + std::to_string(init_mappings.size()) +
                         " mappings for " + std::to_string(thresholds.size()) + " thresholds");
    }

    const BinMembership membership = bin_membership(values, thresholds);

    RefineResult result;
    result.mappings = std::move(init_mappings);

    std::vector<double> recon(values.size());
    for (int step = 0; step < steps; ++step) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            recon[i] = result.mappings[membership.bin_of[i]];
        }
        auto [loss, grads] = oracle(recon);
        if (!std::isfinite(loss)) {
            result.aborted = true;
            return result;
        }
        result.loss_trace.push_back(loss);
        const std::vector<double> bin_grad =
            codepoint_gradient(membership, grads, result.mappings.size());
        for (std::size_t j = 0; j < result.mappings.size(); ++j) {
            result.mappings[j] -= step_size * bin_grad[j];
        }
        result.steps_run = step + 1;
    }
    {
        for (std::size_t i = 0; i < values.size(); ++i) {
            recon[i] = result.mappings[membership.bin_of[i]];
        }
        auto [loss, grads] = oracle(recon);
        (void)grads;
        if (!std::isfinite(loss)) {
            result.aborted = true;
            return result;
        }
        result.loss_trace.push_back(loss);
    }

    // Codepoints that drifted across their bin boundaries would break decode
    // monotonicity; clamp them back and flag the run.
    const std::size_t bins = result.mappings.size();
    for (std::size_t j = 0; j < bins; ++j) {
        const double lo =
            j == 0 ? -std::numeric_limits<double>::infinity() : thresholds[j - 1];
        const double hi =
            j + 1 == bins ? std::numeric_limits<double>::infinity() : thresholds[j];
        if (result.mappings[j] < lo || result.mappings[j] > hi) {
            result.out_of_order = true;
            result.mappings[j] = std::clamp(result.mappings[j], lo, hi);
        }
    }
    if (result.out_of_order) {
        for (std::size_t j = 1; j < bins; ++j) {
            if (!(result.mappings[j] > result.mappings[j - 1])) {
                result.mappings[j] = std::nextafter(result.mappings[j - 1],
                                                    std::numeric_limits<double>::infinity());
            }
        }
    }
    return result;
}

LossOracle make_mse_oracle(std::vector<float> targets) {
    return [targets = std::move(targets)](std::span<const double> recon) {
        if (recon.size() != targets.size()) {
            throw ShapeError("mse oracle: reconstruction length mismatch");
        }
        const double n = static_cast<double>(targets.size());
        double loss = 0.0;
        std::vector<double> grads(recon.size());
        for (std::size_t i = 0; i < recon.size(); ++i) {
            const double d = recon[i] - static_cast<double>(targets[i]);
            loss += d * d;
            grads[i] = 2.0 * d / n;
        }
        return std::make_pair(loss / n, std::move(grads));
    };
}

LossOracle make_weighted_mse_oracle(std::vector<float> targets, std::vector<double> weights) {
    if (targets.size() != weights.size()) {
        throw ShapeError("weighted mse oracle: targets/weights length mismatch");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw DataError("weighted mse oracle: negative weight");
        total += w;
    }
    if (total <= 0.0) throw DataError("weighted mse oracle: all weights are zero");
    return [targets = std::move(targets), weights = std::move(weights),
            total](std::span<const double> recon) {
        if (recon.size() != targets.size()) {
            throw ShapeError("weighted mse oracle: reconstruction length mismatch");
        }
        double loss = 0.0;
        std::vector<double> grads(recon.size());
        for (std::size_t i = 0; i < recon.size(); ++i) {
            const double d = recon[i] - static_cast<double>(targets[i]);
            loss += weights[i] * d * d;
            grads[i] = 2.0 * weights[i] * d / total;
        }
        return std::make_pair(loss / total, std::move(grads));
    };
}

double mse_safe_step(const BinMembership& membership, std::size_t n) {
    std::size_t largest = 1;
    for (const auto& bin : membership.members) largest = std::max(largest, bin.size());
    return static_cast<double>(n) / (2.0 * static_cast<double>(largest));
}

double weighted_mse_safe_step(const BinMembership& membership,
                              std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double heaviest = 0.0;
    for (const auto& bin : membership.members) {
        double mass = 0.0;
        for (std::uint32_t i : bin) mass += weights[i];
        heaviest = std::max(heaviest, mass);
    }
    if (heaviest <= 0.0) return 1.0;
    return total / (2.0 * heaviest);
}

}  // namespace lowra
