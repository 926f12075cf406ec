// Copyright (c) 2026 The dcpsim Authors
// SPDX-License-Identifier: Apache-2.0
#include "dcpsim/attn_merge.hpp"

namespace dcpsim {

namespace {

template <typename T>
std::vector<AttnShardResult<T>> partition_impl(std::span<const T> q, std::span<const T> keys,
                                               std::span<const T> values, int head_dim, T scale,
                                               std::span<const std::int64_t> bounds,
                                               bool parallel) {
    const auto shards = static_cast<std::int64_t>(bounds.size());
    std::vector<AttnShardResult<T>> results(static_cast<std::size_t>(shards));
    std::vector<std::int64_t> starts(static_cast<std::size_t>(shards));
    std::int64_t start = 0;
    for (std::int64_t i = 0; i < shards; ++i) {
        starts[static_cast<std::size_t>(i)] = start;
        start = bounds[static_cast<std::size_t>(i)];
    }

#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::int64_t i = 0; i < shards; ++i) {
        const std::int64_t lo = starts[static_cast<std::size_t>(i)];
        const std::int64_t hi = bounds[static_cast<std::size_t>(i)];
        if (hi <= lo) continue;  // zero-split shard receives no query
        results[static_cast<std::size_t>(i)] = shard_attention<T>(
            q, keys.subspan(static_cast<std::size_t>(lo * head_dim)),
            values.subspan(static_cast<std::size_t>(lo * head_dim)), hi - lo, head_dim, scale);
    }
    return results;
}

template <typename T>
std::vector<T> merge_impl(std::span<const T> q, std::span<const T> keys,
                          std::span<const T> values, int head_dim, T scale,
                          std::span<const std::int64_t> bounds, bool parallel) {
    auto partials = partition_impl<T>(q, keys, values, head_dim, scale, bounds, parallel);
    // Drop empty shards, keep shard-index order for a deterministic reduction.
    std::vector<AttnShardResult<T>> live;
    live.reserve(partials.size());
    for (auto& p : partials)
        if (!p.partial_out.empty()) live.push_back(std::move(p));
    return lse_merge<T>(live);
}

}  // namespace

template <typename T>
std::vector<AttnShardResult<T>> partitioned_shard_attention(
    std::span<const T> q, std::span<const T> keys, std::span<const T> values, int head_dim,
    T scale, std::span<const std::int64_t> bounds) {
    return partition_impl<T>(q, keys, values, head_dim, scale, bounds, false);
}

template std::vector<AttnShardResult<float>> partitioned_shard_attention<float>(
    std::span<const float>, std::span<const float>, std::span<const float>, int, float,
    std::span<const std::int64_t>);
template std::vector<AttnShardResult<double>> partitioned_shard_attention<double>(
    std::span<const double>, std::span<const double>, std::span<const double>, int, double,
    std::span<const std::int64_t>);

std::vector<float> sharded_attention_merge(std::span<const float> q, std::span<const float> keys,
                                           std::span<const float> values, int head_dim,
                                           float scale, std::span<const std::int64_t> bounds,
                                           bool parallel) {
    return merge_impl<float>(q, keys, values, head_dim, scale, bounds, parallel);
}

std::vector<double> sharded_attention_merge(std::span<const double> q,
                                            std::span<const double> keys,
                                            std::span<const double> values, int head_dim,
                                            double scale, std::span<const std::int64_t> bounds,
                                            bool parallel) {
    return merge_impl<double>(q, keys, values, head_dim, scale, bounds, parallel);
}

}  // namespace dcpsim
