// Copyright (c) 2026 The dcpsim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcpsim {

using RequestId = std::int64_t;
using InstanceId = std::int32_t;
using NodeId = std::int32_t;
using Tokens = std::int64_t;
using FrameId = std::int64_t;

class SimError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientFrames : public SimError { public: using SimError::SimError; };
class UnknownRequest : public SimError { public: using SimError::SimError; };
class UnknownPage : public SimError { public: using SimError::SimError; };
class InconsistentPlacement : public SimError { public: using SimError::SimError; };
class ShapeOverflow : public SimError { public: using SimError::SimError; };
class EmptyShard : public SimError { public: using SimError::SimError; };
class ConfigError : public SimError { public: using SimError::SimError; };

enum class RequestState { Waiting, Active, Finished };

/// Decoupled bindings of one active request: the instance set holding its KV
/// shards (kv_binding, MoE binding first), the single instance running its MoE
/// dispatch/combine (moe_binding), and the per-instance token split.
struct Placement {
    std::vector<InstanceId> kv_binding;
    InstanceId moe_binding = -1;
    std::vector<Tokens> split;  // parallel to kv_binding

    int cp_degree() const { return static_cast<int>(kv_binding.size()); }

    bool holds(InstanceId s) const {
        for (InstanceId b : kv_binding)
            if (b == s) return true;
        return false;
    }

    Tokens split_for(InstanceId s) const {
        for (std::size_t i = 0; i < kv_binding.size(); ++i)
            if (kv_binding[i] == s) return split[i];
        return 0;
    }

    Tokens total_tokens() const {
        Tokens t = 0;
        for (Tokens s : split) t += s;
        return t;
    }

    void validate(Tokens expected_tokens) const {
        if (kv_binding.size() != split.size())
            throw InconsistentPlacement("kv_binding/split size mismatch");
        if (!holds(moe_binding))
            throw InconsistentPlacement("moe_binding not in kv_binding");
        for (Tokens s : split)
            if (s < 0) throw InconsistentPlacement("negative split");
        if (total_tokens() != expected_tokens)
            throw InconsistentPlacement("split does not cover seq_len");
    }
};

struct Request {
    RequestId id = 0;
    Tokens seq_len = 1;        // prompt tokens at admission
    double arrival_ms = 0.0;
    std::int64_t output_len = 1;
    std::int64_t generated = 0;
    RequestState state = RequestState::Waiting;
    std::optional<Placement> placement;

    // KV footprint during decode: prompt plus generated tokens.
    Tokens kv_tokens() const { return seq_len + generated; }
};

/// Regular grid of `nodes` x `instances_per_node` DP instances. Instance ids
/// are dense, node-major.
struct ClusterTopology {
    int nodes = 1;
    int instances_per_node = 1;
    Tokens page_size = 16;

    int world_size() const { return nodes * instances_per_node; }
    NodeId node_of(InstanceId s) const { return s / instances_per_node; }
    InstanceId node_begin(NodeId n) const { return n * instances_per_node; }
    InstanceId node_end(NodeId n) const { return (n + 1) * instances_per_node; }
};

inline std::int64_t pages_for(Tokens tokens, Tokens page_size) {
    return (tokens + page_size - 1) / page_size;
}

}  // namespace dcpsim
