// Copyright (c) 2026 The dcpsim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "dcpsim/types.hpp"

namespace dcpsim {

// Portable uniform helpers on top of mt19937_64 (whose output sequence is
// standard-specified, unlike the stdlib distribution objects).
inline double uniform01(std::mt19937_64& rng) {
    return std::ldexp(static_cast<double>(rng() >> 11), -53);
}
inline std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi_inclusive) {
    const double u = uniform01(rng);
    const auto span = static_cast<double>(hi_inclusive - lo + 1);
    auto v = lo + static_cast<std::int64_t>(u * span);
    return v > hi_inclusive ? hi_inclusive : v;
}

struct LengthBucket {
    Tokens lo = 1;       // inclusive
    Tokens hi = 2;       // exclusive
    double prob = 1.0;
};

struct LengthDistribution {
    std::string name;
    std::vector<LengthBucket> buckets;
    void validate() const;
};

// Table-derived interval masses for the two shipped datasets.
LengthDistribution sharegpt4o_distribution();
LengthDistribution github_issue_distribution();

enum class IntraBucket { Uniform, LogUniform };

enum class ArrivalKind { ConstantRate, Poisson };

struct ArrivalProcess {
    ArrivalKind kind = ArrivalKind::ConstantRate;
    double rate_per_s = 1.0;
};

struct TraceConfig {
    LengthDistribution short_dist;
    LengthDistribution long_dist;
    double long_ratio = 0.0;
    ArrivalProcess arrival;
    double duration_s = 1.0;
    std::int64_t output_len_min = 64;
    std::int64_t output_len_max = 512;
    IntraBucket intra_bucket = IntraBucket::Uniform;
    std::uint64_t seed = 0;
    void validate() const;
};

Tokens sample_length(const LengthDistribution& dist, std::mt19937_64& rng,
                     IntraBucket intra = IntraBucket::Uniform);

// Reproducible synthetic trace: requests sorted by arrival, ids dense from 0.
std::vector<Request> gen_trace(const TraceConfig& config);

// Trace file format: id,arrival_ms,seq_len,output_len.
void write_trace_csv(const std::vector<Request>& trace, std::ostream& out);
std::vector<Request> load_trace_csv(std::istream& in);

}  // namespace dcpsim
