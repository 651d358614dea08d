#pragma once

// Scenario constants for a peer-to-peer photo sharing network and the
// aggregate rates derived from them.

#include <cstdint>
#include <string>
#include <vector>

namespace p2pcbir {

inline constexpr double kSecondsPerDay = 86400.0;

struct WorkloadParams {
    double n_peers = 524288.0;                  // N = 2^19
    double query_rate = 10.0 / kSecondsPerDay;  // R, queries/s per peer
    double items_per_peer = 20.0;               // C
    double flop_per_compare = 332.0;            // f
    double message_bytes = 800.0;               // z

    double queries_per_day() const { return query_rate * kSecondsPerDay; }

    /// Names of fields that are not strictly positive.
    std::vector<std::string> violations() const;
    /// Throws Error when violations() is non-empty.
    void validate() const;

    bool operator==(const WorkloadParams&) const = default;
};

struct DerivedRates {
    double total_query_rate = 0;  // N*R, queries/s
    double query_byte_rate = 0;   // Q = z*N*R, bytes/s
    double total_items = 0;       // N*C
};

WorkloadParams plickr_default();

DerivedRates derive_rates(const WorkloadParams& params);

/// Reads a JSON object with keys n_peers, queries_per_peer_per_day,
/// items_per_peer, flop_per_compare, message_bytes. Missing keys keep the
/// plickr_default() value.
WorkloadParams workload_from_json(const std::string& text);
WorkloadParams load_workload(const std::string& path);
std::string workload_to_json(const WorkloadParams& params);

}  // namespace p2pcbir
