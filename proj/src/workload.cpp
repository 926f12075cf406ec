// Copyright (c) 2026 The dcpsim Authors
// SPDX-License-Identifier: Apache-2.0
#include "dcpsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dcpsim {

void LengthDistribution::validate() const {
    if (buckets.empty()) throw ConfigError("length distribution '" + name + "' has no buckets");
    double sum = 0.0;
    Tokens prev_hi = 0;
    for (const auto& b : buckets) {
        if (b.lo < 1 || b.lo >= b.hi)
            throw ConfigError("bad bucket bounds in '" + name + "'");
        if (b.lo < prev_hi)
            throw ConfigError("overlapping buckets in '" + name + "'");
        if (b.prob < 0.0)
            throw ConfigError("negative bucket probability in '" + name + "'");
        prev_hi = b.hi;
        sum += b.prob;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("bucket probabilities of '" + name + "' sum to " + std::to_string(sum));
}

LengthDistribution sharegpt4o_distribution() {
    // Interval masses 85.7 / 10.7 / 3.5 normalized to sum to 1.
    const double total = 85.7 + 10.7 + 3.5;
    return LengthDistribution{
        "sharegpt-4o",
        {{1, 1000, 85.7 / total},
         {1000, 10000, 10.7 / total},
         {10000, 100000, 3.5 / total}}};
}

LengthDistribution github_issue_distribution() {
    return LengthDistribution{
        "github-issue",
        {{100000, 500000, 0.6506},
         {500000, 1000000, 0.3494}}};
}

void TraceConfig::validate() const {
    short_dist.validate();
    if (long_ratio > 0.0) long_dist.validate();
    if (long_ratio < 0.0 || long_ratio > 1.0) throw ConfigError("long_ratio outside [0,1]");
    if (arrival.rate_per_s <= 0.0) throw ConfigError("arrival rate must be positive");
    if (duration_s <= 0.0) throw ConfigError("duration must be positive");
    if (output_len_min < 1 || output_len_max < output_len_min)
        throw ConfigError("bad output length range");
}

Tokens sample_length(const LengthDistribution& dist, std::mt19937_64& rng, IntraBucket intra) {
    const double u = uniform01(rng);
    double cum = 0.0;
    const LengthBucket* chosen = &dist.buckets.back();
    for (const auto& b : dist.buckets) {
        cum += b.prob;
        if (u < cum) { chosen = &b; break; }
    }
    if (intra == IntraBucket::LogUniform) {
        const double lo = std::log(static_cast<double>(chosen->lo));
        const double hi = std::log(static_cast<double>(chosen->hi));
        const auto len = static_cast<Tokens>(std::exp(lo + uniform01(rng) * (hi - lo)));
        return std::clamp<Tokens>(len, chosen->lo, chosen->hi - 1);
    }
    return uniform_int(rng, chosen->lo, chosen->hi - 1);
}

std::vector<Request> gen_trace(const TraceConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);

    std::vector<double> arrivals_ms;
    const double horizon_ms = config.duration_s * 1000.0;
    if (config.arrival.kind == ArrivalKind::ConstantRate) {
        const double gap_ms = 1000.0 / config.arrival.rate_per_s;
        for (std::int64_t i = 0; static_cast<double>(i) * gap_ms < horizon_ms; ++i)
            arrivals_ms.push_back(static_cast<double>(i) * gap_ms);
    } else {
        double t = 0.0;
        const double mean_gap_ms = 1000.0 / config.arrival.rate_per_s;
        while (true) {
            t += -std::log(1.0 - uniform01(rng)) * mean_gap_ms;
            if (t >= horizon_ms) break;
            arrivals_ms.push_back(t);
        }
    }

    std::vector<Request> trace;
    trace.reserve(arrivals_ms.size());
    for (std::size_t i = 0; i < arrivals_ms.size(); ++i) {
        Request r;
        r.id = static_cast<RequestId>(i);
        r.arrival_ms = arrivals_ms[i];
        const bool is_long = config.long_ratio > 0.0 && uniform01(rng) < config.long_ratio;
        r.seq_len = sample_length(is_long ? config.long_dist : config.short_dist, rng,
                                  config.intra_bucket);
        r.output_len = uniform_int(rng, config.output_len_min, config.output_len_max);
        trace.push_back(r);
    }
    return trace;
}

void write_trace_csv(const std::vector<Request>& trace, std::ostream& out) {
    out << "id,arrival_ms,seq_len,output_len\n";
    char buf[64];
    for (const auto& r : trace) {
        std::snprintf(buf, sizeof(buf), "%.3f", r.arrival_ms);
        out << r.id << ',' << buf << ',' << r.seq_len << ',' << r.output_len << '\n';
    }
}

std::vector<Request> load_trace_csv(std::istream& in) {
    std::vector<Request> trace;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty trace file");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        Request r;
        std::getline(ls, field, ','); r.id = std::stoll(field);
        std::getline(ls, field, ','); r.arrival_ms = std::stod(field);
        std::getline(ls, field, ','); r.seq_len = std::stoll(field);
        std::getline(ls, field, ','); r.output_len = std::stoll(field);
        trace.push_back(r);
    }
    std::sort(trace.begin(), trace.end(),
              [](const Request& a, const Request& b) {
                  return a.arrival_ms != b.arrival_ms ? a.arrival_ms < b.arrival_ms : a.id < b.id;
              });
    return trace;
}

}  // namespace dcpsim
