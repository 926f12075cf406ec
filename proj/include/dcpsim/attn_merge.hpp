// Copyright (c) 2026 The dcpsim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "dcpsim/types.hpp"

namespace dcpsim {

/// Partial attention over one KV shard: softmax-normalized output restricted
/// to the shard's keys, plus the shard's log-sum-exp scaling factor.
template <typename T>
struct AttnShardResult {
    std::vector<T> partial_out;
    T lse = T(0);
};

/// Monolithic softmax attention over all L keys, single query. Online
/// max-shifted accumulation; serial. Kept as the oracle for the sharded path.
template <typename T>
std::vector<T> reference_attention(std::span<const T> q, std::span<const T> keys,
                                   std::span<const T> values, std::int64_t length,
                                   int head_dim, T scale) {
    T running_max = -std::numeric_limits<T>::infinity();
    T denom = T(0);
    std::vector<T> acc(static_cast<std::size_t>(head_dim), T(0));
    for (std::int64_t j = 0; j < length; ++j) {
        const T* k = keys.data() + j * head_dim;
        const T* v = values.data() + j * head_dim;
        T score = T(0);
        for (int d = 0; d < head_dim; ++d) score += k[d] * q[static_cast<std::size_t>(d)];
        score *= scale;
        if (score > running_max) {
            const T shrink = std::exp(running_max - score);
            denom *= shrink;
            for (int d = 0; d < head_dim; ++d) acc[static_cast<std::size_t>(d)] *= shrink;
            running_max = score;
        }
        const T w = std::exp(score - running_max);
        denom += w;
        for (int d = 0; d < head_dim; ++d) acc[static_cast<std::size_t>(d)] += w * v[d];
    }
    for (auto& x : acc) x /= denom;
    return acc;
}

/// Partial attention over a shard's keys only. Throws EmptyShard for length 0.
template <typename T>
AttnShardResult<T> shard_attention(std::span<const T> q, std::span<const T> keys,
                                   std::span<const T> values, std::int64_t length,
                                   int head_dim, T scale) {
    if (length < 1) throw EmptyShard("shard_attention over zero keys");
    AttnShardResult<T> result;
    result.partial_out.assign(static_cast<std::size_t>(head_dim), T(0));
    T running_max = -std::numeric_limits<T>::infinity();
    T denom = T(0);
    for (std::int64_t j = 0; j < length; ++j) {
        const T* k = keys.data() + j * head_dim;
        const T* v = values.data() + j * head_dim;
        T score = T(0);
        for (int d = 0; d < head_dim; ++d) score += k[d] * q[static_cast<std::size_t>(d)];
        score *= scale;
        if (score > running_max) {
            const T shrink = std::exp(running_max - score);
            denom *= shrink;
            for (auto& x : result.partial_out) x *= shrink;
            running_max = score;
        }
        const T w = std::exp(score - running_max);
        denom += w;
        for (int d = 0; d < head_dim; ++d)
            result.partial_out[static_cast<std::size_t>(d)] += w * v[d];
    }
    for (auto& x : result.partial_out) x /= denom;
    result.lse = running_max + std::log(denom);
    return result;
}

/// Exact merge of shard partials: softmax weights over the shard LSEs,
/// convex combination of the partial outputs. Folds in list order.
template <typename T>
std::vector<T> lse_merge(std::span<const AttnShardResult<T>> partials) {
    if (partials.empty()) throw EmptyShard("lse_merge of zero partials");
    T max_lse = -std::numeric_limits<T>::infinity();
    for (const auto& p : partials) max_lse = std::max(max_lse, p.lse);
    T weight_sum = T(0);
    std::vector<T> out(partials.front().partial_out.size(), T(0));
    for (const auto& p : partials) {
        const T w = std::exp(p.lse - max_lse);
        weight_sum += w;
        for (std::size_t d = 0; d < out.size(); ++d) out[d] += w * p.partial_out[d];
    }
    for (auto& x : out) x /= weight_sum;
    return out;
}

/// Contiguous partition of [0, length) into `bounds.size()` shards; bounds are
/// exclusive shard ends, last must equal length. Zero-width shards are skipped
/// (they receive no query).
template <typename T>
std::vector<AttnShardResult<T>> partitioned_shard_attention(
    std::span<const T> q, std::span<const T> keys, std::span<const T> values, int head_dim,
    T scale, std::span<const std::int64_t> bounds);

/// Sharded decode attention end to end: per-shard partials merged in shard
/// order. `parallel` runs the shard loop under OpenMP; results are identical
/// to the serial path.
std::vector<float> sharded_attention_merge(std::span<const float> q, std::span<const float> keys,
                                           std::span<const float> values, int head_dim,
                                           float scale, std::span<const std::int64_t> bounds,
                                           bool parallel);
std::vector<double> sharded_attention_merge(std::span<const double> q,
                                            std::span<const double> keys,
                                            std::span<const double> values, int head_dim,
                                            double scale, std::span<const std::int64_t> bounds,
                                            bool parallel);

}  // namespace dcpsim
