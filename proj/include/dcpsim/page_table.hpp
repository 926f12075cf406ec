// Copyright (c) 2026 The dcpsim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <ostream>
#include <vector>

#include "dcpsim/types.hpp"

namespace dcpsim {

struct InstanceState {
    InstanceId id = 0;
    NodeId node = 0;
    Tokens kv_load = 0;       // K_s, resident tokens
    int moe_batch = 0;        // B_s, MoE-bound active requests
    std::int64_t capacity_pages = 0;
    std::vector<FrameId> free_frames;  // LIFO free list
    int shard_count = 0;      // R_i, resident request-shards

    std::int64_t used_frames() const {
        return capacity_pages - static_cast<std::int64_t>(free_frames.size());
    }
};

struct PageRef {
    InstanceId instance = -1;
    FrameId frame = -1;
};

/// Unified mapping from a request's logical KV page ids to physical
/// (instance, frame) tuples. Logical pages are assigned contiguously in token
/// order across the kv_binding instances in split order; each shard occupies
/// whole frames, so a shard's trailing page may stay partially filled.
class GlobalPageTable {
public:
    // Requires CanAllocate to have succeeded; throws InsufficientFrames on a
    // scheduler/allocator inconsistency.
    const std::vector<PageRef>& allocate(const Request& request,
                                         const Placement& placement,
                                         Tokens page_size,
                                         std::vector<InstanceState>& instances);

    // Removes all entries, returns frames to the free lists, and reports the
    // per-instance released frame counts (sorted by instance id).
    std::vector<std::pair<InstanceId, std::int64_t>> release(
        RequestId id, std::vector<InstanceState>& instances);

    PageRef lookup(RequestId id, std::int64_t logical_page) const;

    bool contains(RequestId id) const { return entries_.count(id) > 0; }
    std::int64_t page_count(RequestId id) const;

    // Appends one decode token on the instance holding the request's last
    // page, allocating a new frame when that page is full. Falls back to other
    // kv_binding members if the target has no free frame. Returns the instance
    // that received the token, or -1 if no member had a frame (growth stall).
    InstanceId append_token(RequestId id, const Placement& placement,
                            std::vector<InstanceState>& instances);

    // Debug/test dump: request_id,logical_page,instance_id,frame_id.
    void dump_csv(std::ostream& out) const;

    std::size_t request_count() const { return entries_.size(); }

private:
    struct Entry {
        std::vector<PageRef> pages;   // logical order
        Tokens trailing_fill = 0;     // tokens in the last page
        Tokens page_size = 0;
        std::map<InstanceId, Tokens> shard_tokens;
    };
    std::map<RequestId, Entry> entries_;
};

struct ClusterState {
    ClusterTopology topo;
    std::vector<InstanceState> instances;
    GlobalPageTable page_table;

    std::int64_t total_free_frames() const {
        std::int64_t n = 0;
        for (const auto& s : instances) n += static_cast<std::int64_t>(s.free_frames.size());
        return n;
    }
    std::int64_t total_capacity_pages() const {
        std::int64_t n = 0;
        for (const auto& s : instances) n += s.capacity_pages;
        return n;
    }
};

ClusterState make_cluster(const ClusterTopology& topo, std::int64_t capacity_pages_per_instance);

// Spec operations over the global page table.
const std::vector<PageRef>& pt_allocate(const Request& request, const Placement& placement,
                                        ClusterState& cluster);
std::vector<std::pair<InstanceId, std::int64_t>> pt_free(RequestId id, ClusterState& cluster);
PageRef pt_lookup(const ClusterState& cluster, RequestId id, std::int64_t logical_page);

}  // namespace dcpsim
