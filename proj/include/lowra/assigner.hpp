#pragma once

#include <cstdint>
#include <vector>

#include "lowra/lloydmax.hpp"

namespace lowra {

/// Channels sharing one parameter count, with the group's proportional share
/// of the bit budget.
struct ChannelGroup {
    std::size_t omega = 0;             // parameters per channel, uniform in the group
    std::vector<std::size_t> members;  // channel indices
    std::uint64_t weight = 0;          // W_k = |members| * omega
    std::uint64_t budget_bits = 0;     // B_k
};

/// Group channels by distinct parameter count and split the total budget
/// proportionally to each group's parameter mass. Shares are floored to
/// integer bits; leftover bits go to the group with the largest mass.
/// Throws InfeasibleError when the budget cannot cover min_precision
/// everywhere.
std::vector<ChannelGroup> split_and_budget(const std::vector<std::size_t>& params_per_channel,
                                           std::uint64_t total_budget_bits,
                                           int min_precision);

struct ClusterModel {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> centroids;  // k x dim
    std::vector<std::size_t> assignment;         // one cluster id per input point
    int iterations = 0;
};

/// Deterministic Lloyd K-Means with a seeded kmeans++-style initialization
/// applied to points pre-sorted by feature lexicographic order, so the
/// clustering is invariant to input permutation for a fixed seed.
ClusterModel kmeans_cluster(const std::vector<std::vector<double>>& features, std::size_t k,
                            int max_iter, std::uint64_t seed);

enum class SolveStatus { Optimal, Feasible, Infeasible };

const char* to_string(SolveStatus s);

/// y_{c,p}: how many channels of cluster c receive precision p.
struct ClusterQuota {
    std::vector<std::vector<std::uint32_t>> counts;  // clusters x precisions
    double cost = 0.0;
    std::uint64_t bits_used = 0;
    SolveStatus status = SolveStatus::Optimal;
};

/// Cluster-level ILP: minimize sum_c sum_p cost[c][p] * y_{c,p} subject to
/// sum_p y_{c,p} = sizes[c] and sum beta(p) * omega[c] * y_{c,p} <= budget.
/// Solved exactly by budget-scaled dynamic programming (status Optimal);
/// instances beyond the DP size guard fall back to a greedy incumbent with
/// status Feasible. Equal-cost ties break toward fewer bits, then toward the
/// lower precision. cost[c][p] is the per-channel cost (the caller scales
/// the cluster's mean MSE by omega).
ClusterQuota solve_cluster_ilp(const std::vector<std::vector<double>>& costs,
                               const std::vector<std::uint32_t>& sizes,
                               const std::vector<std::uint64_t>& omegas,
                               const std::vector<int>& precisions, std::uint64_t budget_bits);

/// Intra-cluster ILP: place each channel at exactly one precision so the
/// per-precision counts match the quota and the summed MSE is minimal.
/// The transportation structure is solved exactly with successive shortest
/// paths. Returns the precision index chosen for each row of mse_rows.
std::vector<std::size_t> assign_within_cluster(const std::vector<std::vector<double>>& mse_rows,
                                               const std::vector<std::uint32_t>& quota);

struct PrecisionAssignment {
    std::vector<int> bits_per_channel;
    double total_sse = 0.0;
    std::uint64_t bits_used = 0;
    std::uint64_t budget_bits = 0;
    double achieved_bpp = 0.0;
    SolveStatus status = SolveStatus::Optimal;  // worst status across groups
};

struct AssignOptions {
    double target_bpp = 2.0;
    /// Allowed precisions; empty selects {2,4} for target_bpp >= 2 and
    /// {1,2,4} below.
    std::vector<int> allowed;
    std::size_t clusters_per_group = 128;
    int kmeans_max_iter = 300;
    std::uint64_t seed = 0;
};

std::vector<int> default_allowed_precisions(double target_bpp);

/// Algorithm: budget = floor(target_bpp * total params); group channels by
/// parameter count; split the budget; per group, K-Means on the MSE feature
/// vectors, cluster-level ILP for per-cluster precision counts, intra-cluster
/// assignment of concrete channels; concatenate.
PrecisionAssignment assign_precisions(const MseTable& table, const AssignOptions& opts);

}  // namespace lowra
