// Copyright (c) 2026 The dcpsim Authors
// SPDX-License-Identifier: Apache-2.0
#include "dcpsim/routing.hpp"

#include <algorithm>

namespace dcpsim {

std::vector<BindingConfig> build_binding_config(std::span<const Request* const> active,
                                                int world_size) {
    std::vector<BindingConfig> configs(static_cast<std::size_t>(world_size));

    std::vector<const Request*> ordered(active.begin(), active.end());
    std::sort(ordered.begin(), ordered.end(),
              [](const Request* a, const Request* b) { return a->id < b->id; });

    for (const Request* r : ordered) {
        const Placement& p = *r->placement;
        if (!p.holds(p.moe_binding))
            throw InconsistentPlacement("request " + std::to_string(r->id) +
                                        ": moe_binding outside kv_binding");
        auto& moe_cfg = configs[static_cast<std::size_t>(p.moe_binding)];
        moe_cfg.moe_bound.push_back(r->id);
        moe_cfg.moe_bound_kv.push_back(p.kv_binding);
        for (InstanceId s : p.kv_binding) {
            auto& cfg = configs[static_cast<std::size_t>(s)];
            cfg.shard_requests.push_back(r->id);
            cfg.shard_request_moe.push_back(p.moe_binding);
        }
    }
    return configs;
}

std::vector<InstanceRouting> derive_routing_tables(std::span<const BindingConfig> configs) {
    const int world = static_cast<int>(configs.size());
    std::vector<InstanceRouting> routing(configs.size());

    for (std::size_t i = 0; i < configs.size(); ++i) {
        const BindingConfig& cfg = configs[i];
        RouteTable& q = routing[i].q_route;
        q.rows = cfg.n();
        q.cols = world;
        q.bits.assign(static_cast<std::size_t>(q.rows) * static_cast<std::size_t>(world), 0);
        q.row_requests = cfg.shard_requests;
        for (int r = 0; r < q.rows; ++r) {
            const InstanceId m = cfg.shard_request_moe[static_cast<std::size_t>(r)];
            q.bits[static_cast<std::size_t>(r) * static_cast<std::size_t>(world) +
                   static_cast<std::size_t>(m)] = 1;
        }

        RouteTable& res = routing[i].res_route;
        res.rows = cfg.m();
        res.cols = world;
        res.bits.assign(static_cast<std::size_t>(res.rows) * static_cast<std::size_t>(world), 0);
        res.row_requests = cfg.moe_bound;
        for (int r = 0; r < res.rows; ++r) {
            for (InstanceId s : cfg.moe_bound_kv[static_cast<std::size_t>(r)])
                res.bits[static_cast<std::size_t>(r) * static_cast<std::size_t>(world) +
                         static_cast<std::size_t>(s)] = 1;
        }
    }
    return routing;
}

void dump_routing_csv(std::span<const InstanceRouting> routing, std::ostream& out) {
    out << "instance,table,row,request_id,columns\n";
    auto dump_table = [&](int inst, const char* name, const RouteTable& t) {
        for (int r = 0; r < t.rows; ++r) {
            out << inst << ',' << name << ',' << r << ','
                << t.row_requests[static_cast<std::size_t>(r)] << ',';
            for (int c = 0; c < t.cols; ++c) out << static_cast<int>(t.at(r, c));
            out << '\n';
        }
    };
    for (std::size_t i = 0; i < routing.size(); ++i) {
        dump_table(static_cast<int>(i), "q_route", routing[i].q_route);
        dump_table(static_cast<int>(i), "res_route", routing[i].res_route);
    }
}

void ShapeSpace::validate() const {
    if (buckets.empty()) return;  // empty space is allowed; pools still reserved
    if (!std::is_sorted(buckets.begin(), buckets.end()))
        throw ConfigError("shape buckets must be sorted");
    if (std::find(buckets.begin(), buckets.end(), std::make_pair(m_max, n_max)) == buckets.end())
        throw ConfigError("shape space must contain (m_max, n_max)");
}

ShapeSpace ShapeSpace::default_space() {
    ShapeSpace space;
    const int ms[] = {8, 16, 32, 64, 128, 256};
    const int ns[] = {8, 16, 32, 64, 128, 256, 384, 512};
    for (int m : ms)
        for (int n : ns) space.buckets.emplace_back(m, n);
    std::sort(space.buckets.begin(), space.buckets.end());
    space.m_max = 256;
    space.n_max = 512;
    return space;
}

std::pair<int, int> bucket_shape(int m, int n, const ShapeSpace& space) {
    if (m > space.m_max || n > space.n_max)
        throw ShapeOverflow("execution shape (" + std::to_string(m) + "," + std::to_string(n) +
                            ") exceeds (" + std::to_string(space.m_max) + "," +
                            std::to_string(space.n_max) + ")");
    for (const auto& [bm, bn] : space.buckets)
        if (bm >= m && bn >= n) return {bm, bn};
    return {space.m_max, space.n_max};
}

GraphFootprint graph_memory_footprint(const ShapeSpace& space) {
    GraphFootprint fp;
    fp.graph_count = static_cast<std::int64_t>(space.buckets.size());
    const std::int64_t w = space.world_size;
    const std::int64_t hn = space.num_heads;
    const std::int64_t hs = space.head_size;
    const std::int64_t mm = space.m_max;
    const std::int64_t nn = space.n_max;
    // Q, Res, LSE and input pools at payload width; block table and length
    // table at index width. A single pool backs all captured graphs.
    const std::int64_t payload_elems = (w * mm + w * nn) * hn * hs  // Q + Res
                                       + w * nn * hs                // LSE
                                       + mm * space.hidden_dim;     // input
    const std::int64_t index_elems = mm * space.max_blocks + mm;    // BlkTab + AttnLen
    fp.buffer_bytes = payload_elems * space.element_size + index_elems * space.index_size;
    return fp;
}

}  // namespace dcpsim
