#pragma once

// Independent brute-force references used by the test suites. Everything here
// enumerates or recomputes from first principles and must stay decoupled from
// the implementation paths it checks.

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace oracles {

// Best total cost of the cluster-level quota problem by enumerating every
// per-cluster composition. costs[c][p] is the per-channel cost.
struct QuotaOptimum {
    double cost = std::numeric_limits<double>::infinity();
    std::uint64_t bits = 0;
    bool feasible = false;
};

inline void enumerate_quota(const std::vector<std::vector<double>>& costs,
                            const std::vector<std::uint32_t>& sizes,
                            const std::vector<std::uint64_t>& omegas,
                            const std::vector<int>& precisions, std::uint64_t budget,
                            std::size_t cluster, double cost_so_far, std::uint64_t bits_so_far,
                            std::vector<std::uint32_t>& counts, QuotaOptimum& best) {
    if (bits_so_far > budget) return;
    if (cluster == costs.size()) {
        if (cost_so_far < best.cost ||
            (cost_so_far == best.cost && bits_so_far < best.bits)) {
            best.cost = cost_so_far;
            best.bits = bits_so_far;
            best.feasible = true;
        }
        return;
    }
    const std::size_t nprec = precisions.size();
    // Compositions of sizes[cluster] into nprec nonnegative parts.
    std::vector<std::uint32_t> comp(nprec, 0);
    comp[0] = sizes[cluster];
    while (true) {
        double cost = cost_so_far;
        std::uint64_t bits = bits_so_far;
        for (std::size_t p = 0; p < nprec; ++p) {
            cost += comp[p] * costs[cluster][p];
            bits += static_cast<std::uint64_t>(comp[p]) * precisions[p] * omegas[cluster];
        }
        enumerate_quota(costs, sizes, omegas, precisions, budget, cluster + 1, cost, bits,
                        counts, best);
        // Next composition in colex order.
        std::size_t i = 0;
        while (i + 1 < nprec && comp[i] == 0) ++i;
        if (i + 1 == nprec) break;
        const std::uint32_t head = comp[i];
        comp[i] = 0;
        comp[0] = head - 1;
        ++comp[i + 1];
    }
}

inline QuotaOptimum quota_optimum(const std::vector<std::vector<double>>& costs,
                                  const std::vector<std::uint32_t>& sizes,
                                  const std::vector<std::uint64_t>& omegas,
                                  const std::vector<int>& precisions, std::uint64_t budget) {
    QuotaOptimum best;
    std::vector<std::uint32_t> counts;
    enumerate_quota(costs, sizes, omegas, precisions, budget, 0, 0.0, 0, counts, best);
    return best;
}

// Minimum summed MSE over every placement of channels matching the quota,
// by recursion over channels with running per-precision counts.
inline void enumerate_placements(const std::vector<std::vector<double>>& mse_rows,
                                 std::vector<std::uint32_t>& remaining, std::size_t channel,
                                 double cost_so_far, double& best) {
    if (channel == mse_rows.size()) {
        best = std::min(best, cost_so_far);
        return;
    }
    for (std::size_t p = 0; p < remaining.size(); ++p) {
        if (remaining[p] == 0) continue;
        --remaining[p];
        enumerate_placements(mse_rows, remaining, channel + 1,
                             cost_so_far + mse_rows[channel][p], best);
        ++remaining[p];
    }
}

inline double placement_optimum(const std::vector<std::vector<double>>& mse_rows,
                                const std::vector<std::uint32_t>& quota) {
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::uint32_t> remaining = quota;
    enumerate_placements(mse_rows, remaining, 0, 0.0, best);
    return best;
}

// Exact minimum of sum_i mse[i][b_i] * omega[i] over all per-channel
// precision assignments with sum beta(b_i) * omega[i] <= budget.
inline void enumerate_channel_bits(const std::vector<std::vector<double>>& mse,
                                   const std::vector<std::uint64_t>& omegas,
                                   const std::vector<int>& precisions, std::uint64_t budget,
                                   std::size_t channel, double cost_so_far,
                                   std::uint64_t bits_so_far, double& best) {
    if (bits_so_far > budget) return;
    if (channel == mse.size()) {
        best = std::min(best, cost_so_far);
        return;
    }
    for (std::size_t p = 0; p < precisions.size(); ++p) {
        enumerate_channel_bits(
            mse, omegas, precisions, budget, channel + 1,
            cost_so_far + mse[channel][p] * static_cast<double>(omegas[channel]),
            bits_so_far + static_cast<std::uint64_t>(precisions[p]) * omegas[channel], best);
    }
}

inline double per_channel_optimum(const std::vector<std::vector<double>>& mse,
                                  const std::vector<std::uint64_t>& omegas,
                                  const std::vector<int>& precisions, std::uint64_t budget) {
    double best = std::numeric_limits<double>::infinity();
    enumerate_channel_bits(mse, omegas, precisions, budget, 0, 0.0, 0, best);
    return best;
}

// Weighted SSE of the best 1-bit quantizer found by scanning every
// contiguous split of the sorted values; centroids are the weighted means of
// the two sides. Returns the optimum and how many splits are Lloyd fixed
// points under the (-inf, t] / (t, +inf) binning rule.
struct OneBitSearch {
    double best_sse = std::numeric_limits<double>::infinity();
    int fixed_points = 0;
};

inline OneBitSearch one_bit_exhaustive(std::vector<std::pair<float, double>> weighted_values) {
    std::sort(weighted_values.begin(), weighted_values.end());
    const std::size_t n = weighted_values.size();
    OneBitSearch out;
    for (std::size_t split = 1; split < n; ++split) {
        double wl = 0.0, wxl = 0.0, wr = 0.0, wxr = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = weighted_values[i].second;
            const double x = weighted_values[i].first;
            if (i < split) {
                wl += w;
                wxl += w * x;
            } else {
                wr += w;
                wxr += w * x;
            }
        }
        if (wl <= 0.0 || wr <= 0.0) continue;
        const double ml = wxl / wl;
        const double mr = wxr / wr;
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = weighted_values[i].first - (i < split ? ml : mr);
            sse += weighted_values[i].second * d * d;
        }
        out.best_sse = std::min(out.best_sse, sse);
        const double mid = 0.5 * (ml + mr);
        if (weighted_values[split - 1].first <= mid && weighted_values[split].first > mid) {
            ++out.fixed_points;
        }
    }
    return out;
}

inline std::vector<float> random_floats(std::mt19937& rng, std::size_t n, float lo, float hi) {
    std::uniform_real_distribution<float> dist(lo, hi);
    std::vector<float> v(n);
    for (float& x : v) x = dist(rng);
    return v;
}

}  // namespace oracles
