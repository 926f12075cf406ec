// Copyright (c) 2026 The dcpsim Authors
// SPDX-License-Identifier: Apache-2.0
#include "dcpsim/page_table.hpp"

#include <algorithm>

namespace dcpsim {

const std::vector<PageRef>& GlobalPageTable::allocate(const Request& request,
                                                      const Placement& placement,
                                                      Tokens page_size,
                                                      std::vector<InstanceState>& instances) {
    if (entries_.count(request.id))
        throw InsufficientFrames("request already has page-table entries");
    if (request.seq_len < 1)
        throw InsufficientFrames("cannot allocate a zero-length request");

    // Feasibility first, so a failed allocate leaves no partial state.
    for (std::size_t i = 0; i < placement.kv_binding.size(); ++i) {
        const InstanceId s = placement.kv_binding[i];
        const std::int64_t need = pages_for(placement.split[i], page_size);
        const auto& inst = instances.at(static_cast<std::size_t>(s));
        if (static_cast<std::int64_t>(inst.free_frames.size()) < need)
            throw InsufficientFrames("instance " + std::to_string(s) +
                                     " lacks frames for request " + std::to_string(request.id));
    }

    Entry entry;
    entry.page_size = page_size;
    for (std::size_t i = 0; i < placement.kv_binding.size(); ++i) {
        const InstanceId s = placement.kv_binding[i];
        const Tokens shard_tokens = placement.split[i];
        const std::int64_t need = pages_for(shard_tokens, page_size);
        auto& inst = instances[static_cast<std::size_t>(s)];
        for (std::int64_t p = 0; p < need; ++p) {
            entry.pages.push_back(PageRef{s, inst.free_frames.back()});
            inst.free_frames.pop_back();
        }
        inst.kv_load += shard_tokens;
        entry.shard_tokens[s] += shard_tokens;
        if (shard_tokens > 0) {
            const Tokens rem = shard_tokens % page_size;
            entry.trailing_fill = rem == 0 ? page_size : rem;
        }
    }
    auto [it, inserted] = entries_.emplace(request.id, std::move(entry));
    (void)inserted;
    return it->second.pages;
}

std::vector<std::pair<InstanceId, std::int64_t>> GlobalPageTable::release(
    RequestId id, std::vector<InstanceState>& instances) {
    auto it = entries_.find(id);
    if (it == entries_.end())
        throw UnknownRequest("no page-table entries for request " + std::to_string(id));

    std::map<InstanceId, std::int64_t> released;
    for (const PageRef& p : it->second.pages) {
        instances[static_cast<std::size_t>(p.instance)].free_frames.push_back(p.frame);
        released[p.instance] += 1;
    }
    for (const auto& [s, tokens] : it->second.shard_tokens)
        instances[static_cast<std::size_t>(s)].kv_load -= tokens;
    entries_.erase(it);
    return {released.begin(), released.end()};
}

PageRef GlobalPageTable::lookup(RequestId id, std::int64_t logical_page) const {
    auto it = entries_.find(id);
    if (it == entries_.end())
        throw UnknownPage("unknown request " + std::to_string(id));
    const auto& pages = it->second.pages;
    if (logical_page < 0 || logical_page >= static_cast<std::int64_t>(pages.size()))
        throw UnknownPage("logical page " + std::to_string(logical_page) +
                          " out of range for request " + std::to_string(id));
    return pages[static_cast<std::size_t>(logical_page)];
}

std::int64_t GlobalPageTable::page_count(RequestId id) const {
    auto it = entries_.find(id);
    if (it == entries_.end())
        throw UnknownRequest("no page-table entries for request " + std::to_string(id));
    return static_cast<std::int64_t>(it->second.pages.size());
}

InstanceId GlobalPageTable::append_token(RequestId id, const Placement& placement,
                                         std::vector<InstanceState>& instances) {
    auto it = entries_.find(id);
    if (it == entries_.end())
        throw UnknownRequest("no page-table entries for request " + std::to_string(id));
    Entry& entry = it->second;

    if (!entry.pages.empty() && entry.trailing_fill < entry.page_size) {
        entry.trailing_fill += 1;
        const InstanceId target = entry.pages.back().instance;
        instances[static_cast<std::size_t>(target)].kv_load += 1;
        entry.shard_tokens[target] += 1;
        return target;
    }

    // Need a fresh page. Prefer the instance holding the current last page.
    InstanceId target = entry.pages.empty() ? placement.kv_binding.front()
                                            : entry.pages.back().instance;
    auto has_frame = [&](InstanceId s) {
        return !instances[static_cast<std::size_t>(s)].free_frames.empty();
    };
    if (!has_frame(target)) {
        target = -1;
        for (InstanceId s : placement.kv_binding) {
            if (has_frame(s)) { target = s; break; }
        }
        if (target < 0) return -1;  // growth stall; caller retries next iteration
    }
    auto& inst = instances[static_cast<std::size_t>(target)];
    entry.pages.push_back(PageRef{target, inst.free_frames.back()});
    inst.free_frames.pop_back();
    entry.trailing_fill = 1;
    inst.kv_load += 1;
    entry.shard_tokens[target] += 1;
    return target;
}

void GlobalPageTable::dump_csv(std::ostream& out) const {
    out << "request_id,logical_page,instance_id,frame_id\n";
    for (const auto& [id, entry] : entries_) {
        for (std::size_t p = 0; p < entry.pages.size(); ++p) {
            out << id << ',' << p << ',' << entry.pages[p].instance << ','
                << entry.pages[p].frame << '\n';
        }
    }
}

ClusterState make_cluster(const ClusterTopology& topo, std::int64_t capacity_pages_per_instance) {
    ClusterState cluster;
    cluster.topo = topo;
    cluster.instances.resize(static_cast<std::size_t>(topo.world_size()));
    for (int s = 0; s < topo.world_size(); ++s) {
        auto& inst = cluster.instances[static_cast<std::size_t>(s)];
        inst.id = static_cast<InstanceId>(s);
        inst.node = topo.node_of(static_cast<InstanceId>(s));
        inst.capacity_pages = capacity_pages_per_instance;
        inst.free_frames.resize(static_cast<std::size_t>(capacity_pages_per_instance));
        // Highest frame id on top so frames hand out in ascending order.
        for (std::int64_t f = 0; f < capacity_pages_per_instance; ++f)
            inst.free_frames[static_cast<std::size_t>(f)] = capacity_pages_per_instance - 1 - f;
    }
    return cluster;
}

const std::vector<PageRef>& pt_allocate(const Request& request, const Placement& placement,
                                        ClusterState& cluster) {
    return cluster.page_table.allocate(request, placement, cluster.topo.page_size,
                                       cluster.instances);
}

std::vector<std::pair<InstanceId, std::int64_t>> pt_free(RequestId id, ClusterState& cluster) {
    return cluster.page_table.release(id, cluster.instances);
}

PageRef pt_lookup(const ClusterState& cluster, RequestId id, std::int64_t logical_page) {
    return cluster.page_table.lookup(id, logical_page);
}

}  // namespace dcpsim
