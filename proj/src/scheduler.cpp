// Copyright (c) 2026 The dcpsim Authors
// SPDX-License-Identifier: Apache-2.0
#include "dcpsim/scheduler.hpp"

#include <algorithm>
#include <limits>

namespace dcpsim {

int BucketFn::lookup(Tokens seq_len) const {
    for (const auto& e : entries)
        if (seq_len <= e.max_len) return e.degree;
    return entries.back().degree;
}

void BucketFn::validate() const {
    if (entries.empty()) throw ConfigError("empty bucket table");
    Tokens prev_len = 0;
    int prev_deg = 0;
    for (const auto& e : entries) {
        if (e.max_len <= prev_len) throw ConfigError("bucket lengths must strictly increase");
        if (e.degree < prev_deg || e.degree < 1) throw ConfigError("bucket degrees must be >=1 and non-decreasing");
        prev_len = e.max_len;
        prev_deg = e.degree;
    }
}

BucketFn BucketFn::default_table() {
    BucketFn fn;
    fn.entries = {{32768, 1}, {131072, 2}, {393216, 4},
                  {std::numeric_limits<Tokens>::max(), 8}};
    return fn;
}

void SchedulerPolicy::validate(const ClusterTopology& topo) const {
    if (kind == PolicyKind::DualBalancedDCP) bucket.validate();
    if (kind == PolicyKind::UniformCP) {
        if (uniform_degree < 1 || topo.instances_per_node % uniform_degree != 0)
            throw ConfigError("UniformCP degree must divide instances_per_node");
    }
}

void rebalance_active(std::vector<Request*>& active, ClusterState& cluster) {
    for (auto& inst : cluster.instances) inst.moe_batch = 0;
    std::sort(active.begin(), active.end(), [](const Request* a, const Request* b) {
        const auto ka = a->placement->cp_degree();
        const auto kb = b->placement->cp_degree();
        return ka != kb ? ka < kb : a->id < b->id;
    });
    for (Request* r : active) {
        Placement& p = *r->placement;
        InstanceId best = p.kv_binding.front();
        for (InstanceId s : p.kv_binding) {
            if (cluster.instances[static_cast<std::size_t>(s)].moe_batch <
                    cluster.instances[static_cast<std::size_t>(best)].moe_batch ||
                (cluster.instances[static_cast<std::size_t>(s)].moe_batch ==
                     cluster.instances[static_cast<std::size_t>(best)].moe_batch &&
                 s < best))
                best = s;
        }
        p.moe_binding = best;
        cluster.instances[static_cast<std::size_t>(best)].moe_batch += 1;
    }
}

int cp_degree(Tokens seq_len, const BucketFn& bucket, int node_instance_count) {
    return std::min(bucket.lookup(seq_len), node_instance_count);
}

std::vector<Tokens> water_fill(std::span<const InstanceId> participants, Tokens seq_len,
                               std::span<const Tokens> kv_loads) {
    const std::size_t n = participants.size();
    // Minimal integer level P with sum(max(0, P - K_s)) >= seq_len.
    Tokens lo = 0, hi = 0;
    for (Tokens k : kv_loads) hi = std::max(hi, k);
    hi += seq_len;
    auto capacity_at = [&](Tokens level) {
        Tokens cap = 0;
        for (Tokens k : kv_loads) cap += std::max<Tokens>(0, level - k);
        return cap;
    };
    while (lo < hi) {
        const Tokens mid = lo + (hi - lo) / 2;
        if (capacity_at(mid) >= seq_len) hi = mid; else lo = mid + 1;
    }
    const Tokens level = lo;

    std::vector<Tokens> split(n, 0);
    Tokens assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        split[i] = std::max<Tokens>(0, level - 1 - kv_loads[i]);
        assigned += split[i];
    }
    Tokens remainder = seq_len - assigned;
    for (std::size_t i = 0; i < n && remainder > 0; ++i) {
        if (kv_loads[i] + split[i] < level) {
            split[i] += 1;
            remainder -= 1;
        }
    }
    return split;
}

bool can_allocate(std::span<const InstanceId> participants, std::span<const Tokens> split,
                  const ClusterState& cluster) {
    for (std::size_t i = 0; i < participants.size(); ++i) {
        const auto& inst = cluster.instances[static_cast<std::size_t>(participants[i])];
        if (static_cast<std::int64_t>(inst.free_frames.size()) <
            pages_for(split[i], cluster.topo.page_size))
            return false;
    }
    return true;
}

namespace {

// argmin over a node's instances by MoE batch, ties by lowest id.
InstanceId min_batch_instance(const ClusterState& cluster, InstanceId begin, InstanceId end) {
    InstanceId best = begin;
    for (InstanceId s = begin; s < end; ++s) {
        if (cluster.instances[static_cast<std::size_t>(s)].moe_batch <
            cluster.instances[static_cast<std::size_t>(best)].moe_batch)
            best = s;
    }
    return best;
}

}  // namespace

Placement Scheduler::place_dcp(const Request& r, const ClusterState& cluster) const {
    const auto& topo = cluster.topo;

    // Node selection: fewest MoE-bound requests, ties by node id.
    NodeId best_node = 0;
    std::int64_t best_bn = std::numeric_limits<std::int64_t>::max();
    for (NodeId n = 0; n < topo.nodes; ++n) {
        std::int64_t bn = 0;
        for (InstanceId s = topo.node_begin(n); s < topo.node_end(n); ++s)
            bn += cluster.instances[static_cast<std::size_t>(s)].moe_batch;
        if (bn < best_bn) { best_bn = bn; best_node = n; }
    }

    const int k = cp_degree(r.seq_len, policy_.bucket, topo.instances_per_node);
    const InstanceId nb = topo.node_begin(best_node);
    const InstanceId ne = topo.node_end(best_node);
    const InstanceId moe = min_batch_instance(cluster, nb, ne);

    // SelectSmallestKV over the node minus the MoE binding, ties by id.
    std::vector<InstanceId> rest;
    for (InstanceId s = nb; s < ne; ++s)
        if (s != moe) rest.push_back(s);
    std::stable_sort(rest.begin(), rest.end(), [&](InstanceId a, InstanceId b) {
        const Tokens ka = cluster.instances[static_cast<std::size_t>(a)].kv_load;
        const Tokens kb = cluster.instances[static_cast<std::size_t>(b)].kv_load;
        return ka != kb ? ka < kb : a < b;
    });

    Placement p;
    p.moe_binding = moe;
    p.kv_binding.push_back(moe);
    for (int i = 0; i + 1 < k && i < static_cast<int>(rest.size()); ++i)
        p.kv_binding.push_back(rest[static_cast<std::size_t>(i)]);

    std::vector<Tokens> loads;
    loads.reserve(p.kv_binding.size());
    for (InstanceId s : p.kv_binding)
        loads.push_back(cluster.instances[static_cast<std::size_t>(s)].kv_load);
    p.split = water_fill(p.kv_binding, r.seq_len, loads);
    return p;
}

Placement Scheduler::place_single(const Request& r, const ClusterState& cluster,
                                  bool by_batch) const {
    InstanceId best = 0;
    for (InstanceId s = 1; s < cluster.topo.world_size(); ++s) {
        const auto& cand = cluster.instances[static_cast<std::size_t>(s)];
        const auto& cur = cluster.instances[static_cast<std::size_t>(best)];
        const bool better = by_batch ? cand.moe_batch < cur.moe_batch
                                     : cand.kv_load < cur.kv_load;
        if (better) best = s;
    }
    Placement p;
    p.moe_binding = best;
    p.kv_binding = {best};
    p.split = {r.seq_len};
    return p;
}

Placement Scheduler::place_uniform(const Request& r, const ClusterState& cluster) {
    const auto& topo = cluster.topo;
    const int d = policy_.uniform_degree;
    const int groups_per_node = topo.instances_per_node / d;
    const int total_groups = groups_per_node * topo.nodes;
    if (static_cast<int>(ucp_round_robin_.size()) != total_groups)
        ucp_round_robin_.assign(static_cast<std::size_t>(total_groups), 0);

    // Group owning the fewest MoE-bound requests, ties by lowest group index.
    int best_group = 0;
    std::int64_t best_bg = std::numeric_limits<std::int64_t>::max();
    for (int g = 0; g < total_groups; ++g) {
        const InstanceId gb = static_cast<InstanceId>(g * d);
        std::int64_t bg = 0;
        for (InstanceId s = gb; s < gb + d; ++s)
            bg += cluster.instances[static_cast<std::size_t>(s)].moe_batch;
        if (bg < best_bg) { best_bg = bg; best_group = g; }
    }

    const InstanceId gb = static_cast<InstanceId>(best_group * d);
    Placement p;
    p.kv_binding.resize(static_cast<std::size_t>(d));
    p.split.assign(static_cast<std::size_t>(d), 0);
    for (int i = 0; i < d; ++i) p.kv_binding[static_cast<std::size_t>(i)] = gb + i;
    const Tokens base = r.seq_len / d;
    Tokens rem = r.seq_len % d;
    for (int i = 0; i < d; ++i) {
        p.split[static_cast<std::size_t>(i)] = base + (rem > 0 ? 1 : 0);
        if (rem > 0) rem -= 1;
    }
    const int rr = ucp_round_robin_[static_cast<std::size_t>(best_group)];
    p.moe_binding = gb + rr;
    ucp_round_robin_[static_cast<std::size_t>(best_group)] = (rr + 1) % d;
    return p;
}

bool Scheduler::never_fits(const Request& r, const ClusterState& cluster) const {
    const Tokens psize = cluster.topo.page_size;
    const std::int64_t demand = pages_for(r.seq_len, psize);
    std::int64_t reach = 0;
    const std::int64_t per_inst = cluster.instances.front().capacity_pages;
    switch (policy_.kind) {
        case PolicyKind::DualBalancedDCP: {
            const int k = cp_degree(r.seq_len, policy_.bucket, cluster.topo.instances_per_node);
            reach = per_inst * k - (k - 1);  // each extra shard may waste one partial page
            break;
        }
        case PolicyKind::UniformCP:
            reach = per_inst * policy_.uniform_degree - (policy_.uniform_degree - 1);
            break;
        default:
            reach = per_inst;
    }
    return demand > reach;
}

StepResult Scheduler::step(std::deque<std::size_t>& waiting, std::span<Request> requests,
                           std::span<const std::size_t> active, ClusterState& cluster) {
    StepResult result;

    // Recompute B from the active set (Alg. 1 line 1). DCP additionally
    // reassigns MoE bindings; baselines keep them sticky.
    if (policy_.kind == PolicyKind::DualBalancedDCP) {
        std::vector<Request*> act;
        act.reserve(active.size());
        for (std::size_t idx : active) act.push_back(&requests[idx]);
        rebalance_active(act, cluster);
    } else {
        for (auto& inst : cluster.instances) inst.moe_batch = 0;
        for (std::size_t idx : active) {
            const auto& p = *requests[idx].placement;
            cluster.instances[static_cast<std::size_t>(p.moe_binding)].moe_batch += 1;
        }
    }

    bool head_blocked_recorded = false;
    std::size_t scan = 0;
    while (scan < waiting.size()) {
        const std::size_t idx = waiting[scan];
        Request& r = requests[idx];

        if (never_fits(r, cluster)) {
            result.unschedulable.push_back(r.id);
            waiting.erase(waiting.begin() + static_cast<std::ptrdiff_t>(scan));
            continue;
        }

        Placement p;
        switch (policy_.kind) {
            case PolicyKind::DualBalancedDCP: p = place_dcp(r, cluster); break;
            case PolicyKind::LeastBatch: p = place_single(r, cluster, true); break;
            case PolicyKind::LeastCache: p = place_single(r, cluster, false); break;
            case PolicyKind::UniformCP: p = place_uniform(r, cluster); break;
        }

        if (can_allocate(p.kv_binding, p.split, cluster)) {
            r.placement = p;
            pt_allocate(r, p, cluster);
            r.state = RequestState::Active;
            cluster.instances[static_cast<std::size_t>(p.moe_binding)].moe_batch += 1;
            for (InstanceId s : p.kv_binding)
                cluster.instances[static_cast<std::size_t>(s)].shard_count += 1;
            result.committed.push_back(r.id);
            waiting.erase(waiting.begin() + static_cast<std::ptrdiff_t>(scan));
            continue;
        }

        result.deferred.push_back(r.id);
        if (scan == 0 && !head_blocked_recorded) {
            const std::int64_t demand = pages_for(r.seq_len, cluster.topo.page_size);
            if (cluster.total_free_frames() >= demand) result.hol_events += 1;
            head_blocked_recorded = true;
        }
        if (policy_.hol_strict) break;
        ++scan;
    }
    return result;
}

}  // namespace dcpsim
