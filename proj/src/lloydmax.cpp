#include "lowra/lloydmax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lowra/error.hpp"

namespace lowra {

void validate(const WeightedSamples& s) {
    if (s.values.size() != s.weights.size()) {
        throw ShapeError("WeightedSamples: " + std::to_string(s.values.size()) +
                         " values vs " + std::to_string(s.weights.size()) + " weights");
    }
    if (s.values.empty()) throw ShapeError("WeightedSamples: empty");
    double total = 0.0;
    for (std::size_t i = 0; i < s.weights.size(); ++i) {
        if (!(s.weights[i] >= 0.0)) {
            throw DataError("WeightedSamples: negative or NaN weight at " + std::to_string(i));
        }
        if (!std::isfinite(s.values[i])) {
            throw DataError("WeightedSamples: non-finite value at " + std::to_string(i));
        }
        total += s.weights[i];
    }
    if (total <= 0.0) throw DataError("WeightedSamples: all weights are zero");
}

namespace {

std::vector<int> assign_bins(const std::vector<float>& values,
                             const std::vector<double>& thresholds) {
    std::vector<int> bins(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        bins[i] = bin_index(values[i], thresholds);
    }
    return bins;
}

// Weighted centroid per bin; empty bins keep the previous codepoint.
// Thresholds move to the midpoints of the new codepoints.
Codebook m_step(const WeightedSamples& samples, const std::vector<int>& bins,
                const Codebook& prev) {
    const std::size_t levels = prev.mappings.size();
    std::vector<double> wsum(levels, 0.0), wxsum(levels, 0.0);
    for (std::size_t i = 0; i < samples.values.size(); ++i) {
        wsum[bins[i]] += samples.weights[i];
        wxsum[bins[i]] += samples.weights[i] * static_cast<double>(samples.values[i]);
    }

    Codebook next;
    next.precision = prev.precision;
    next.mappings.resize(levels);
    for (std::size_t j = 0; j < levels; ++j) {
        next.mappings[j] = wsum[j] > 0.0 ? wxsum[j] / wsum[j] : prev.mappings[j];
    }
    // Retained codepoints of empty bins can collide with a neighboring
    // centroid in degenerate inputs; nudge to keep strict ascent.
    for (std::size_t j = 1; j < levels; ++j) {
        if (!(next.mappings[j] > next.mappings[j - 1])) {
            next.mappings[j] = std::nextafter(next.mappings[j - 1],
                                              std::numeric_limits<double>::infinity());
        }
    }
    next.thresholds.resize(levels - 1);
    for (std::size_t j = 0; j + 1 < levels; ++j) {
        next.thresholds[j] = 0.5 * (next.mappings[j] + next.mappings[j + 1]);
    }
    return next;
}

double wmse_with_bins(const WeightedSamples& samples, const std::vector<int>& bins,
                      const Codebook& book) {
    double err = 0.0, total = 0.0;
    for (std::size_t i = 0; i < samples.values.size(); ++i) {
        const double d = static_cast<double>(samples.values[i]) - book.mappings[bins[i]];
        err += samples.weights[i] * d * d;
        total += samples.weights[i];
    }
    return err / total;
}

}  // namespace

double weighted_mse(const WeightedSamples& samples, const Codebook& book) {
    validate(samples);
    validate(book);
    return wmse_with_bins(samples, assign_bins(samples.values, book.thresholds), book);
}

FitResult lloyd_fit_channel(const WeightedSamples& samples, const Codebook& init,
                            int max_iters) {
    validate(samples);
    validate(init);
    if (max_iters < 1) throw ConfigError("lloyd_fit_channel: max_iters must be >= 1");

    FitResult result;
    result.book = init;
    result.trace.mse.push_back(weighted_mse(samples, init));

    for (int iter = 1; iter <= max_iters; ++iter) {
        const std::vector<int> bins = assign_bins(samples.values, result.book.thresholds);
        const Codebook candidate = m_step(samples, bins, result.book);

        if (candidate.mappings == result.book.mappings &&
            candidate.thresholds == result.book.thresholds) {
            result.trace.converged = true;  // fixed point
            break;
        }

        const double mse = wmse_with_bins(samples, assign_bins(samples.values, candidate.thresholds),
                                          candidate);
        if (mse > result.trace.mse.back()) {
            // Only reachable through rounding noise; keep the previous book.
            result.trace.converged = true;
            break;
        }
        const bool plateau = mse == result.trace.mse.back();
        result.book = candidate;
        result.trace.mse.push_back(mse);
        result.trace.iterations_run = iter;
        if (plateau) {
            result.trace.converged = true;
            break;
        }
    }
    return result;
}

AveragedBooks average_thresholds(const std::vector<Codebook>& books,
                                 const std::vector<WeightedSamples>& samples) {
    if (books.empty()) throw ShapeError("average_thresholds: no channels");
    if (books.size() != samples.size()) {
        throw ShapeError("average_thresholds: " + std::to_string(books.size()) +
                         " books vs " + std::to_string(samples.size()) + " sample sets");
    }
    const int precision = books.front().precision;
    for (const Codebook& b : books) {
        validate(b);
        if (b.precision != precision) {
            throw ShapeError("average_thresholds: mixed precisions " +
                             std::to_string(precision) + " and " + std::to_string(b.precision));
        }
    }

    const std::size_t tcount = books.front().thresholds.size();
    AveragedBooks out;
    out.shared_thresholds.assign(tcount, 0.0);
    for (const Codebook& b : books) {
        for (std::size_t j = 0; j < tcount; ++j) out.shared_thresholds[j] += b.thresholds[j];
    }
    for (double& t : out.shared_thresholds) t /= static_cast<double>(books.size());

    out.books.resize(books.size());
    for (std::size_t ch = 0; ch < books.size(); ++ch) {
        Codebook refit = books[ch];
        refit.thresholds = out.shared_thresholds;

        const std::size_t levels = refit.mappings.size();
        std::vector<double> wsum(levels, 0.0), wxsum(levels, 0.0);
        for (std::size_t i = 0; i < samples[ch].values.size(); ++i) {
            const int j = bin_index(samples[ch].values[i], out.shared_thresholds);
            wsum[j] += samples[ch].weights[i];
            wxsum[j] += samples[ch].weights[i] * static_cast<double>(samples[ch].values[i]);
        }
        for (std::size_t j = 0; j < levels; ++j) {
            if (wsum[j] > 0.0) {
                refit.mappings[j] = wxsum[j] / wsum[j];
            } else {
                // Prior mapping, clamped into the new bin.
                double lo = j == 0 ? -std::numeric_limits<double>::infinity()
                                   : out.shared_thresholds[j - 1];
                double hi = j + 1 == levels ? std::numeric_limits<double>::infinity()
                                            : out.shared_thresholds[j];
                refit.mappings[j] = std::clamp(books[ch].mappings[j], lo, hi);
            }
        }
        for (std::size_t j = 1; j < levels; ++j) {
            if (!(refit.mappings[j] > refit.mappings[j - 1])) {
                refit.mappings[j] = std::nextafter(refit.mappings[j - 1],
                                                   std::numeric_limits<double>::infinity());
            }
        }
        validate(refit);
        out.books[ch] = std::move(refit);
    }
    return out;
}

std::vector<double> channel_weights(const AbsmaxState& state, std::size_t row, WeightMode mode) {
    std::vector<double> w(state.cols);
    for (std::size_t c = 0; c < state.cols; ++c) {
        const double a = state.block_scale(row, c);
        w[c] = mode == WeightMode::Absmax ? a : a * a;
    }
    return w;
}

MseBuildResult build_mse_table(const WeightMatrix& matrix, const std::vector<int>& precisions,
                               const MseBuildOptions& opts) {
    if (precisions.empty()) throw ConfigError("build_mse_table: empty precision set");
    for (int p : precisions) {
        if (!is_supported_precision(p)) {
            throw ConfigError("build_mse_table: unsupported precision " + std::to_string(p));
        }
    }
    std::vector<int> sorted = precisions;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ConfigError("build_mse_table: duplicate precision");
    }

    const NormalizeResult norm = block_normalize(matrix, opts.block_size);

    std::vector<WeightedSamples> samples(matrix.rows);
    std::vector<bool> degenerate(matrix.rows, false);
    for (std::size_t r = 0; r < matrix.rows; ++r) {
        samples[r].values.assign(norm.normalized.row(r).begin(), norm.normalized.row(r).end());
        samples[r].weights = channel_weights(norm.state, r, opts.weight_mode);
        double total = 0.0;
        for (double w : samples[r].weights) total += w;
        degenerate[r] = total <= 0.0;  // all-zero channel; nothing to fit
    }

    MseBuildResult out;
    out.table.precisions = sorted;
    out.table.channels = matrix.rows;
    out.table.mse.assign(matrix.rows * sorted.size(), 0.0);
    out.table.params_per_channel.assign(matrix.rows, matrix.cols);
    out.books.resize(sorted.size());

    for (std::size_t pi = 0; pi < sorted.size(); ++pi) {
        const Codebook init = default_codebook(sorted[pi]);
        std::vector<Codebook> fitted(matrix.rows);
        for (std::size_t r = 0; r < matrix.rows; ++r) {
            fitted[r] = degenerate[r]
                            ? init
                            : lloyd_fit_channel(samples[r], init, opts.lloyd_iters).book;
        }
        AveragedBooks averaged = average_thresholds(fitted, samples);

        for (std::size_t r = 0; r < matrix.rows; ++r) {
            const CodeVector codes = quantize_channel(norm.normalized.row(r), averaged.books[r]);
            const std::vector<float> recon = dequantize_channel(
                codes, averaged.books[r], norm.state.row_scales(r), opts.block_size);
            double err = 0.0;
            for (std::size_t c = 0; c < matrix.cols; ++c) {
                const double d = static_cast<double>(matrix.at(r, c)) - recon[c];
                err += d * d;
            }
            out.table.at(r, pi) = err / static_cast<double>(matrix.cols);
        }
        out.books[pi] = std::move(averaged.books);
    }
    return out;
}

}  // namespace lowra
