// Copyright (c) 2026 The dcpsim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "dcpsim/types.hpp"

namespace dcpsim {

/// Per-instance view of one iteration's committed placements: the M requests
/// MoE-bound here and the N requests holding a KV shard here, both ordered by
/// request id.
struct BindingConfig {
    std::vector<RequestId> moe_bound;                  // M list
    std::vector<std::vector<InstanceId>> moe_bound_kv; // each request's P_r
    std::vector<RequestId> shard_requests;             // N list
    std::vector<InstanceId> shard_request_moe;         // each shard request's m_r

    int m() const { return static_cast<int>(moe_bound.size()); }
    int n() const { return static_cast<int>(shard_requests.size()); }
};

/// Binary mask matrix, rows x world_size, row-major.
struct RouteTable {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> bits;
    std::vector<RequestId> row_requests;

    std::uint8_t at(int r, int c) const {
        return bits[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
                    static_cast<std::size_t>(c)];
    }
    int row_sum(int r) const {
        int s = 0;
        for (int c = 0; c < cols; ++c) s += at(r, c);
        return s;
    }
};

struct InstanceRouting {
    RouteTable q_route;    // N x W: column of the MoE binding sending each query
    RouteTable res_route;  // M x W: columns of the KV binding returning partials
};

std::vector<BindingConfig> build_binding_config(std::span<const Request* const> active,
                                                int world_size);

std::vector<InstanceRouting> derive_routing_tables(std::span<const BindingConfig> configs);

// Debug CSV: instance,table,row,request_id,columns-bitstring.
void dump_routing_csv(std::span<const InstanceRouting> routing, std::ostream& out);

/// Static execution-shape space for the AOT graph engine model: candidate
/// (M, N) buckets plus the payload dimensions that size the shared pools.
struct ShapeSpace {
    std::vector<std::pair<int, int>> buckets;  // sorted lexicographically
    int m_max = 0;
    int n_max = 0;
    int world_size = 1;        // W_cp
    int num_heads = 128;       // H_n
    int head_size = 64;        // H_s
    int hidden_dim = 7168;     // D
    int max_blocks = 1024;     // block-table width
    int element_size = 2;      // payload bytes per element
    int index_size = 4;        // integer-table bytes per element

    void validate() const;
    static ShapeSpace default_space();
};

/// Smallest componentwise-dominating bucket in lexicographic order; throws
/// ShapeOverflow when (m, n) exceeds the configured maxima.
std::pair<int, int> bucket_shape(int m, int n, const ShapeSpace& space);

struct GraphFootprint {
    std::int64_t graph_count = 0;
    std::int64_t buffer_bytes = 0;  // one shared pool reused by every graph
};

GraphFootprint graph_memory_footprint(const ShapeSpace& space);

}  // namespace dcpsim
