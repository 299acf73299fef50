// features.hpp - per-flow feature schema
#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "wfp/flow.hpp"

namespace wfp {

// Rate features are undefined for zero-duration flows and carried as
// missing, never infinity; imputation is a downstream policy.
constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

struct FeatureVector {
    double flow_duration = 0.0;
    double fwd_packets = 0.0;
    double bwd_packets = 0.0;
    double fwd_length = 0.0; // wire-byte sums
    double bwd_length = 0.0;
    double flow_bytes_per_s = kMissing;
    double flow_packets_per_s = kMissing;
    double avg_packet_size = 0.0;

    static constexpr size_t kArity = 8;

    std::array<double, kArity> values() const {
        return {flow_duration, fwd_packets,       bwd_packets,        fwd_length,
                bwd_length,    flow_bytes_per_s,  flow_packets_per_s, avg_packet_size};
    }
};

inline const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = {
        "flow_duration",    "fwd_packets",       "bwd_packets",        "fwd_length",
        "bwd_length",       "flow_bytes_per_s",  "flow_packets_per_s", "avg_packet_size",
    };
    return names;
}

inline FeatureVector featurize(const Flow& flow) {
    FeatureVector v;
    v.flow_duration = flow.last_ts - flow.first_ts;
    v.fwd_packets = static_cast<double>(flow.fwd_packets);
    v.bwd_packets = static_cast<double>(flow.bwd_packets);
    v.fwd_length = static_cast<double>(flow.fwd_bytes);
    v.bwd_length = static_cast<double>(flow.bwd_bytes);
    double total_bytes = v.fwd_length + v.bwd_length;
    double total_packets = v.fwd_packets + v.bwd_packets;
    if (v.flow_duration > 0.0) {
        v.flow_bytes_per_s = total_bytes / v.flow_duration;
        v.flow_packets_per_s = total_packets / v.flow_duration;
    }
    v.avg_packet_size = total_bytes / total_packets;
    return v;
}

} // namespace wfp
