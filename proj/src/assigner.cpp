#include "lowra/assigner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <string>

#include "lowra/error.hpp"

namespace lowra {

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "OPTIMAL";
        case SolveStatus::Feasible: return "FEASIBLE";
        case SolveStatus::Infeasible: return "INFEASIBLE";
    }
    return "UNKNOWN";
}

std::vector<ChannelGroup> split_and_budget(const std::vector<std::size_t>& params_per_channel,
                                           std::uint64_t total_budget_bits,
                                           int min_precision) {
    if (params_per_channel.empty()) throw ShapeError("split_and_budget: no channels");

    std::map<std::size_t, ChannelGroup> by_omega;
    std::uint64_t total_params = 0;
    for (std::size_t i = 0; i < params_per_channel.size(); ++i) {
        const std::size_t omega = params_per_channel[i];
        if (omega == 0) throw ShapeError("split_and_budget: channel with zero parameters");
        ChannelGroup& g = by_omega[omega];
        g.omega = omega;
        g.members.push_back(i);
        total_params += omega;
    }

    const std::uint64_t min_bits =
        total_params * static_cast<std::uint64_t>(min_precision);
    if (total_budget_bits < min_bits) {
        const double min_bpp = static_cast<double>(min_precision);
        throw InfeasibleError(
            "split_and_budget: budget " + std::to_string(total_budget_bits) +
                " bits is below the " + std::to_string(min_bits) +
                " needed at uniform " + std::to_string(min_precision) +
                "-bit; minimum achievable bpp is " + std::to_string(min_bpp),
            min_bpp);
    }

    std::vector<ChannelGroup> groups;
    groups.reserve(by_omega.size());
    for (auto& [omega, g] : by_omega) {
        g.weight = static_cast<std::uint64_t>(g.members.size()) * omega;
        groups.push_back(std::move(g));
    }

    std::uint64_t assigned = 0;
    for (ChannelGroup& g : groups) {
        // Floor of total * W_k / W_sum in integer arithmetic.
        g.budget_bits = static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(total_budget_bits) * g.weight) / total_params);
        assigned += g.budget_bits;
    }
    // Leftover bits (< number of groups) go to the heaviest group.
    std::size_t heaviest = 0;
    for (std::size_t k = 1; k < groups.size(); ++k) {
        if (groups[k].weight > groups[heaviest].weight) heaviest = k;
    }
    groups[heaviest].budget_bits += total_budget_bits - assigned;
    return groups;
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

// Uniform double in [0, 1) from the top 53 bits of the generator.
double unit_real(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

ClusterModel kmeans_cluster(const std::vector<std::vector<double>>& features, std::size_t k,
                            int max_iter, std::uint64_t seed) {
    const std::size_t n = features.size();
    if (n == 0) throw ShapeError("kmeans_cluster: no points");
    const std::size_t dim = features.front().size();
    for (const auto& f : features) {
        if (f.size() != dim) throw ShapeError("kmeans_cluster: ragged feature vectors");
        for (double v : f) {
            if (!std::isfinite(v)) throw DataError("kmeans_cluster: non-finite feature");
        }
    }
    if (k == 0) throw ConfigError("kmeans_cluster: k must be >= 1");
    k = std::min(k, n);

    // Work on points sorted by feature value so the result does not depend
    // on the input order.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return features[a] < features[b];
    });

    std::mt19937_64 rng(seed);
    ClusterModel model;
    model.k = k;
    model.seed = seed;
    model.centroids.reserve(k);

    // kmeans++-style seeding on the sorted points.
    model.centroids.push_back(features[order[rng() % n]]);
    std::vector<double> d2(n);
    while (model.centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = sq_dist(features[order[i]], model.centroids[0]);
            for (std::size_t c = 1; c < model.centroids.size(); ++c) {
                best = std::min(best, sq_dist(features[order[i]], model.centroids[c]));
            }
            d2[i] = best;
            total += best;
        }
        std::size_t pick;
        if (total > 0.0) {
            const double target = unit_real(rng) * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng() % n;  // all points coincide with a centroid
        }
        model.centroids.push_back(features[order[pick]]);
    }

    std::vector<std::size_t> assign_sorted(n, 0);
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = iter == 0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = sq_dist(features[order[i]], model.centroids[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = sq_dist(features[order[i]], model.centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign_sorted[i] != best) changed = true;
            assign_sorted[i] = best;
        }
        model.iterations = iter + 1;
        if (!changed) break;

        std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& f = features[order[i]];
            for (std::size_t d = 0; d < dim; ++d) sums[assign_sorted[i]][d] += f[d];
            ++counts[assign_sorted[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;  // empty cluster keeps its centroid
            for (std::size_t d = 0; d < dim; ++d) {
                model.centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
            }
        }
    }

    model.assignment.resize(n);
    for (std::size_t i = 0; i < n; ++i) model.assignment[order[i]] = assign_sorted[i];
    return model;
}

namespace {

constexpr std::size_t kMaxDpCells = 512ull * 1000 * 1000;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct IlpInstance {
    std::size_t clusters;
    std::size_t nprec;
    std::vector<std::uint64_t> unit_bits;  // clusters x nprec, per-channel bit cost
    std::uint64_t min_bits = 0;
    std::uint64_t max_bits = 0;
    std::uint64_t total_channel_params = 0;
};

// Greedy incumbent for instances beyond the exact DP's size guard: start
// everyone at the cheapest-bits precision, then apply the best
// cost-reduction-per-bit upgrades that still fit.
ClusterQuota greedy_quota(const std::vector<std::vector<double>>& costs,
                          const std::vector<std::uint32_t>& sizes, const IlpInstance& inst,
                          std::uint64_t budget_bits) {
    ClusterQuota quota;
    quota.status = SolveStatus::Feasible;
    quota.counts.assign(inst.clusters, std::vector<std::uint32_t>(inst.nprec, 0));

    std::uint64_t bits = 0;
    double cost = 0.0;
    std::vector<std::size_t> level(inst.clusters, 0);
    for (std::size_t c = 0; c < inst.clusters; ++c) {
        quota.counts[c][0] = sizes[c];
        bits += static_cast<std::uint64_t>(sizes[c]) * inst.unit_bits[c * inst.nprec];
        cost += sizes[c] * costs[c][0];
    }

    while (true) {
        double best_ratio = 0.0;
        std::size_t best_c = inst.clusters, best_from = 0, best_to = 0;
        for (std::size_t c = 0; c < inst.clusters; ++c) {
            for (std::size_t from = 0; from < inst.nprec; ++from) {
                if (quota.counts[c][from] == 0) continue;
                for (std::size_t to = 0; to < inst.nprec; ++to) {
                    if (to == from) continue;
                    const double dcost = costs[c][to] - costs[c][from];
                    if (dcost >= 0.0) continue;
                    const std::uint64_t ub_from = inst.unit_bits[c * inst.nprec + from];
                    const std::uint64_t ub_to = inst.unit_bits[c * inst.nprec + to];
                    const std::uint64_t new_bits = bits - ub_from + ub_to;
                    if (new_bits > budget_bits) continue;
                    const double dbits =
                        ub_to > ub_from ? static_cast<double>(ub_to - ub_from) : 1.0;
                    const double ratio = -dcost / dbits;
                    if (ratio > best_ratio) {
                        best_ratio = ratio;
                        best_c = c;
                        best_from = from;
                        best_to = to;
                    }
                }
            }
        }
        if (best_c == inst.clusters) break;
        --quota.counts[best_c][best_from];
        ++quota.counts[best_c][best_to];
        bits -= inst.unit_bits[best_c * inst.nprec + best_from];
        bits += inst.unit_bits[best_c * inst.nprec + best_to];
        cost += costs[best_c][best_to] - costs[best_c][best_from];
    }

    quota.cost = cost;
    quota.bits_used = bits;
    return quota;
}

}  // namespace

ClusterQuota solve_cluster_ilp(const std::vector<std::vector<double>>& costs,
                               const std::vector<std::uint32_t>& sizes,
                               const std::vector<std::uint64_t>& omegas,
                               const std::vector<int>& precisions, std::uint64_t budget_bits) {
    const std::size_t C = costs.size();
    if (C == 0) throw ShapeError("solve_cluster_ilp: no clusters");
    if (sizes.size() != C || omegas.size() != C) {
        throw ShapeError("solve_cluster_ilp: costs, sizes and omegas must align");
    }
    const std::size_t P = precisions.size();
    if (P == 0) throw ConfigError("solve_cluster_ilp: empty precision set");
    if (!std::is_sorted(precisions.begin(), precisions.end())) {
        throw ConfigError("solve_cluster_ilp: precisions must be ascending");
    }

    IlpInstance inst;
    inst.clusters = C;
    inst.nprec = P;
    inst.unit_bits.resize(C * P);
    for (std::size_t c = 0; c < C; ++c) {
        if (costs[c].size() != P) throw ShapeError("solve_cluster_ilp: ragged cost matrix");
        if (sizes[c] == 0) throw ShapeError("solve_cluster_ilp: empty cluster");
        if (omegas[c] == 0) throw ShapeError("solve_cluster_ilp: zero omega");
        for (std::size_t p = 0; p < P; ++p) {
            if (!std::isfinite(costs[c][p])) {
                throw DataError("solve_cluster_ilp: non-finite cost");
            }
            inst.unit_bits[c * P + p] =
                static_cast<std::uint64_t>(precisions[p]) * omegas[c];
        }
        inst.min_bits += static_cast<std::uint64_t>(sizes[c]) * inst.unit_bits[c * P];
        inst.max_bits += static_cast<std::uint64_t>(sizes[c]) * inst.unit_bits[c * P + P - 1];
        inst.total_channel_params += static_cast<std::uint64_t>(sizes[c]) * omegas[c];
    }

    if (inst.min_bits > budget_bits) {
        const double min_bpp = static_cast<double>(inst.min_bits) /
                               static_cast<double>(inst.total_channel_params);
        throw InfeasibleError("solve_cluster_ilp: budget " + std::to_string(budget_bits) +
                                  " bits below minimum " + std::to_string(inst.min_bits) +
                                  "; minimum achievable bpp is " + std::to_string(min_bpp),
                              min_bpp);
    }

    ClusterQuota quota;
    quota.counts.assign(C, std::vector<std::uint32_t>(P, 0));

    // Non-binding budget: each channel independently takes its cheapest
    // precision (ties toward fewer bits).
    if (budget_bits >= inst.max_bits) {
        for (std::size_t c = 0; c < C; ++c) {
            std::size_t best = 0;
            for (std::size_t p = 1; p < P; ++p) {
                if (costs[c][p] < costs[c][best]) best = p;
            }
            quota.counts[c][best] = sizes[c];
            quota.cost += sizes[c] * costs[c][best];
            quota.bits_used +=
                static_cast<std::uint64_t>(sizes[c]) * inst.unit_bits[c * P + best];
        }
        quota.status = SolveStatus::Optimal;
        return quota;
    }

    std::uint64_t g = 0;
    for (std::uint64_t u : inst.unit_bits) g = std::gcd(g, u);
    const std::uint64_t capacity = std::min(budget_bits, inst.max_bits) / g;

    std::size_t total_slots = 0;
    for (std::uint32_t s : sizes) total_slots += s;

    if (total_slots * (capacity + 1) > kMaxDpCells) {
        return greedy_quota(costs, sizes, inst, budget_bits);
    }

    // Exact DP over scaled bit usage; one slot per channel, clusters in
    // sequence. choice[slot][b] records the argmin precision.
    std::vector<double> dp(capacity + 1, kInf), next(capacity + 1, kInf);
    dp[0] = 0.0;
    std::vector<std::uint8_t> choice(total_slots * (capacity + 1), 0xFF);

    std::size_t slot = 0;
    for (std::size_t c = 0; c < C; ++c) {
        std::vector<std::uint64_t> units(P);
        for (std::size_t p = 0; p < P; ++p) units[p] = inst.unit_bits[c * P + p] / g;
        for (std::uint32_t s = 0; s < sizes[c]; ++s, ++slot) {
            std::fill(next.begin(), next.end(), kInf);
            std::uint8_t* row = choice.data() + slot * (capacity + 1);
            for (std::uint64_t b = 0; b <= capacity; ++b) {
                for (std::size_t p = 0; p < P; ++p) {
                    if (b < units[p] || dp[b - units[p]] == kInf) continue;
                    const double cand = dp[b - units[p]] + costs[c][p];
                    if (cand < next[b]) {
                        next[b] = cand;
                        row[b] = static_cast<std::uint8_t>(p);
                    }
                }
            }
            dp.swap(next);
        }
    }

    std::uint64_t best_b = 0;
    double best_cost = kInf;
    for (std::uint64_t b = 0; b <= capacity; ++b) {
        if (dp[b] < best_cost) {
            best_cost = dp[b];
            best_b = b;
        }
    }
    if (best_cost == kInf) {
        // Unreachable given the feasibility check above.
        throw InfeasibleError("solve_cluster_ilp: no feasible composition", 0.0);
    }

    std::uint64_t b = best_b;
    slot = total_slots;
    for (std::size_t c = C; c-- > 0;) {
        for (std::uint32_t s = 0; s < sizes[c]; ++s) {
            --slot;
            const std::uint8_t p = choice[slot * (capacity + 1) + b];
            ++quota.counts[c][p];
            b -= inst.unit_bits[c * P + p] / g;
        }
    }

    quota.cost = best_cost;
    quota.bits_used = best_b * g;
    quota.status = SolveStatus::Optimal;
    return quota;
}

namespace {

// Minimal successive-shortest-path min-cost flow (nonnegative costs).
class MinCostFlow {
public:
    explicit MinCostFlow(std::size_t nodes)
        : head_(nodes, -1), potential_(nodes, 0.0), dist_(nodes), prev_edge_(nodes) {}

    void add_edge(std::size_t from, std::size_t to, std::int64_t cap, double cost) {
        edges_.push_back({static_cast<int>(to), head_[from], cap, cost});
        head_[from] = static_cast<int>(edges_.size()) - 1;
        edges_.push_back({static_cast<int>(from), head_[to], 0, -cost});
        head_[to] = static_cast<int>(edges_.size()) - 1;
    }

    // Sends up to max_flow units; returns the amount actually sent.
    std::int64_t solve(std::size_t source, std::size_t sink, std::int64_t max_flow) {
        std::int64_t sent = 0;
        while (sent < max_flow && dijkstra(source, sink)) {
            std::int64_t push = max_flow - sent;
            for (int v = static_cast<int>(sink); v != static_cast<int>(source);) {
                const Edge& e = edges_[prev_edge_[v]];
                push = std::min(push, e.cap);
                v = edges_[prev_edge_[v] ^ 1].to;
            }
            for (int v = static_cast<int>(sink); v != static_cast<int>(source);) {
                edges_[prev_edge_[v]].cap -= push;
                edges_[prev_edge_[v] ^ 1].cap += push;
                v = edges_[prev_edge_[v] ^ 1].to;
            }
            sent += push;
        }
        return sent;
    }

    std::int64_t flow_on(std::size_t edge_index) const {
        return edges_[edge_index * 2 + 1].cap;  // reverse capacity == flow
    }

private:
    struct Edge {
        int to;
        int next;
        std::int64_t cap;
        double cost;
    };

    bool dijkstra(std::size_t source, std::size_t sink) {
        const double inf = std::numeric_limits<double>::infinity();
        std::fill(dist_.begin(), dist_.end(), inf);
        dist_[source] = 0.0;
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        pq.push({0.0, static_cast<int>(source)});
        while (!pq.empty()) {
            auto [d, u] = pq.top();
            pq.pop();
            if (d > dist_[u]) continue;
            for (int e = head_[u]; e != -1; e = edges_[e].next) {
                if (edges_[e].cap <= 0) continue;
                const int v = edges_[e].to;
                const double nd = d + edges_[e].cost + potential_[u] - potential_[v];
                if (nd < dist_[v]) {
                    dist_[v] = nd;
                    prev_edge_[v] = e;
                    pq.push({nd, v});
                }
            }
        }
        if (dist_[sink] == inf) return false;
        for (std::size_t v = 0; v < potential_.size(); ++v) {
            if (dist_[v] < inf) potential_[v] += dist_[v];
        }
        return true;
    }

    std::vector<Edge> edges_;
    std::vector<int> head_;
    std::vector<double> potential_;
    std::vector<double> dist_;
    std::vector<int> prev_edge_;
};

}  // namespace

std::vector<std::size_t> assign_within_cluster(const std::vector<std::vector<double>>& mse_rows,
                                               const std::vector<std::uint32_t>& quota) {
    const std::size_t n = mse_rows.size();
    if (n == 0) throw ShapeError("assign_within_cluster: no channels");
    const std::size_t P = quota.size();
    std::uint64_t quota_sum = 0;
    for (std::uint32_t q : quota) quota_sum += q;
    if (quota_sum != n) {
        throw ShapeError("assign_within_cluster: quota totals " + std::to_string(quota_sum) +
                         " but cluster has " + std::to_string(n) + " channels");
    }
    for (const auto& row : mse_rows) {
        if (row.size() != P) throw ShapeError("assign_within_cluster: ragged MSE rows");
        for (double v : row) {
            if (!(v >= 0.0)) throw DataError("assign_within_cluster: negative or NaN MSE");
        }
    }

    // source -> channel (cap 1) -> precision (cap quota) -> sink.
    const std::size_t source = 0, sink = n + P + 1;
    MinCostFlow flow(n + P + 2);
    std::vector<std::size_t> channel_edges(n * P);
    for (std::size_t i = 0; i < n; ++i) flow.add_edge(source, 1 + i, 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < P; ++p) {
            channel_edges[i * P + p] = (n + i * P + p);
            flow.add_edge(1 + i, 1 + n + p, 1, mse_rows[i][p]);
        }
    }
    for (std::size_t p = 0; p < P; ++p) flow.add_edge(1 + n + p, sink, quota[p], 0.0);

    const std::int64_t sent = flow.solve(source, sink, static_cast<std::int64_t>(n));
    if (sent != static_cast<std::int64_t>(n)) {
        throw ShapeError("assign_within_cluster: transportation instance not saturable");
    }

    std::vector<std::size_t> result(n, P);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < P; ++p) {
            if (flow.flow_on(channel_edges[i * P + p]) > 0) {
                result[i] = p;
                break;
            }
        }
    }
    return result;
}

std::vector<int> default_allowed_precisions(double target_bpp) {
    if (target_bpp >= 2.0) return {2, 4};
    return {1, 2, 4};
}

PrecisionAssignment assign_precisions(const MseTable& table, const AssignOptions& opts) {
    if (table.channels == 0) throw ShapeError("assign_precisions: empty MSE table");
    if (table.mse.size() != table.channels * table.precisions.size() ||
        table.params_per_channel.size() != table.channels) {
        throw ShapeError("assign_precisions: inconsistent MSE table");
    }

    std::vector<int> allowed =
        opts.allowed.empty() ? default_allowed_precisions(opts.target_bpp) : opts.allowed;
    std::sort(allowed.begin(), allowed.end());
    allowed.erase(std::unique(allowed.begin(), allowed.end()), allowed.end());

    // Column index of each allowed precision in the table.
    std::vector<std::size_t> col(allowed.size());
    for (std::size_t p = 0; p < allowed.size(); ++p) {
        const auto it =
            std::find(table.precisions.begin(), table.precisions.end(), allowed[p]);
        if (it == table.precisions.end()) {
            throw ConfigError("assign_precisions: precision " + std::to_string(allowed[p]) +
                              " not present in the MSE table");
        }
        col[p] = static_cast<std::size_t>(it - table.precisions.begin());
    }

    if (opts.target_bpp < static_cast<double>(allowed.front())) {
        throw InfeasibleError("assign_precisions: target " + std::to_string(opts.target_bpp) +
                                  " bpp below minimum allowed precision " +
                                  std::to_string(allowed.front()),
                              static_cast<double>(allowed.front()));
    }

    std::uint64_t total_params = 0;
    for (std::size_t w : table.params_per_channel) total_params += w;
    const std::uint64_t budget = static_cast<std::uint64_t>(
        std::floor(opts.target_bpp * static_cast<double>(total_params)));

    std::vector<ChannelGroup> groups =
        split_and_budget(table.params_per_channel, budget, allowed.front());

    PrecisionAssignment result;
    result.bits_per_channel.assign(table.channels, 0);
    result.budget_bits = budget;

    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const ChannelGroup& group = groups[gi];

        std::vector<std::vector<double>> features(group.members.size());
        for (std::size_t m = 0; m < group.members.size(); ++m) {
            features[m].resize(allowed.size());
            for (std::size_t p = 0; p < allowed.size(); ++p) {
                features[m][p] = table.at(group.members[m], col[p]);
            }
        }

        const std::size_t k = std::min(opts.clusters_per_group, group.members.size());
        const ClusterModel model =
            kmeans_cluster(features, k, opts.kmeans_max_iter, opts.seed + gi);

        // Iterate members in feature order so sums are independent of the
        // caller's channel order.
        std::vector<std::size_t> order(group.members.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return features[a] < features[b];
        });

        std::vector<std::vector<std::size_t>> cluster_members(model.k);
        for (std::size_t i : order) cluster_members[model.assignment[i]].push_back(i);

        // Compact away empty clusters.
        std::vector<std::vector<std::size_t>> live;
        for (auto& members : cluster_members) {
            if (!members.empty()) live.push_back(std::move(members));
        }

        std::vector<std::vector<double>> costs(live.size());
        std::vector<std::uint32_t> sizes(live.size());
        std::vector<std::uint64_t> omegas(live.size(),
                                          static_cast<std::uint64_t>(group.omega));
        for (std::size_t c = 0; c < live.size(); ++c) {
            sizes[c] = static_cast<std::uint32_t>(live[c].size());
            costs[c].assign(allowed.size(), 0.0);
            for (std::size_t i : live[c]) {
                for (std::size_t p = 0; p < allowed.size(); ++p) {
                    costs[c][p] += features[i][p];
                }
            }
            for (std::size_t p = 0; p < allowed.size(); ++p) {
                costs[c][p] = costs[c][p] / static_cast<double>(sizes[c]) *
                              static_cast<double>(group.omega);
            }
        }

        const ClusterQuota quota =
            solve_cluster_ilp(costs, sizes, omegas, allowed, group.budget_bits);
        if (quota.status == SolveStatus::Feasible) result.status = SolveStatus::Feasible;

        for (std::size_t c = 0; c < live.size(); ++c) {
            std::vector<std::vector<double>> rows(live[c].size());
            for (std::size_t i = 0; i < live[c].size(); ++i) rows[i] = features[live[c][i]];
            const std::vector<std::size_t> placed = assign_within_cluster(rows, quota.counts[c]);
            for (std::size_t i = 0; i < live[c].size(); ++i) {
                result.bits_per_channel[group.members[live[c][i]]] = allowed[placed[i]];
            }
        }
    }

    for (std::size_t i = 0; i < table.channels; ++i) {
        const int bits = result.bits_per_channel[i];
        const auto it = std::find(allowed.begin(), allowed.end(), bits);
        const std::size_t p = static_cast<std::size_t>(it - allowed.begin());
        result.bits_used += static_cast<std::uint64_t>(bits) * table.params_per_channel[i];
        result.total_sse +=
            table.at(i, col[p]) * static_cast<double>(table.params_per_channel[i]);
    }
    result.achieved_bpp =
        static_cast<double>(result.bits_used) / static_cast<double>(total_params);
    return result;
}

}  // namespace lowra
