// Copyright (c) 2026 The dcpsim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <span>
#include <vector>

#include "dcpsim/page_table.hpp"
#include "dcpsim/types.hpp"

namespace dcpsim {

/// Length-bucket function mapping sequence length to CP degree. Entries are
/// (inclusive upper bound, degree) with strictly increasing bounds and
/// non-decreasing degrees; the last entry is open-ended.
struct BucketFn {
    struct Entry {
        Tokens max_len = 0;
        int degree = 1;
    };
    std::vector<Entry> entries;

    int lookup(Tokens seq_len) const;
    void validate() const;
    static BucketFn default_table();
};

enum class PolicyKind { DualBalancedDCP, LeastBatch, LeastCache, UniformCP };

struct SchedulerPolicy {
    PolicyKind kind = PolicyKind::DualBalancedDCP;
    BucketFn bucket = BucketFn::default_table();
    int uniform_degree = 1;   // UniformCP group size; must divide instances_per_node
    bool hol_strict = true;   // an infeasible queue head blocks later requests

    void validate(const ClusterTopology& topo) const;
};

/// Alg. 1 lines 1-5: reset B, then reassign each active request's MoE binding
/// to the least-loaded member of its existing KV binding, in ascending
/// |P_r| order (ties by request id). No KV movement.
void rebalance_active(std::vector<Request*>& active, ClusterState& cluster);

/// min(Bucket(seq_len), node instance count).
int cp_degree(Tokens seq_len, const BucketFn& bucket, int node_instance_count);

/// Integer token split over `participants` minimizing the peak
/// post-allocation load max(kv_load + split). Lower-loaded instances fill
/// first; remainder tokens go to earlier participants.
std::vector<Tokens> water_fill(std::span<const InstanceId> participants, Tokens seq_len,
                               std::span<const Tokens> kv_loads);

/// True iff every participant has the free frames its shard needs.
bool can_allocate(std::span<const InstanceId> participants, std::span<const Tokens> split,
                  const ClusterState& cluster);

struct StepResult {
    std::vector<RequestId> committed;
    std::vector<RequestId> deferred;
    std::vector<RequestId> unschedulable;
    // Scheduling rounds where the queue head could not commit although the
    // cluster-wide free frames covered its demand.
    std::int64_t hol_events = 0;
};

/// Per-round scheduler state (UniformCP round-robin counters persist across
/// rounds).
class Scheduler {
public:
    explicit Scheduler(SchedulerPolicy policy) : policy_(std::move(policy)) {}

    const SchedulerPolicy& policy() const { return policy_; }

    /// One scheduling round: recompute B (rebalancing under DCP), then admit
    /// from the waiting queue in FIFO order. Commits mutate the cluster (page
    /// table, K_s, B_s) and set requests Active.
    StepResult step(std::deque<std::size_t>& waiting, std::span<Request> requests,
                    std::span<const std::size_t> active, ClusterState& cluster);

private:
    Placement place_dcp(const Request& r, const ClusterState& cluster) const;
    Placement place_single(const Request& r, const ClusterState& cluster, bool by_batch) const;
    Placement place_uniform(const Request& r, const ClusterState& cluster);
    bool never_fits(const Request& r, const ClusterState& cluster) const;

    SchedulerPolicy policy_;
    std::vector<int> ucp_round_robin_;  // per CP group
};

}  // namespace dcpsim
