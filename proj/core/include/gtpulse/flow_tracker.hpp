#pragma once

#include <cstdint>
#include <list>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "gtpulse/gtpu.hpp"
#include "gtpulse/result.hpp"

namespace gtpulse {

enum class Direction { kUplink, kDownlink };

// One packet sighting at the vantage point. Timestamps within one tracker
// must come from a single clock domain.
struct Observation {
  double timestamp = 0.0;  // seconds
  Direction direction = Direction::kUplink;
  Teid teid{};
  InnerFlowKey inner_flow{};
  std::uint64_t correlation_id = 0;
};

// A completed request/response measurement for one TEID.
//
// A single vantage point observes one interval per correlated pair: the gap
// between the initiating packet passing and its counterpart returning. That
// interval is attributed to request_leg_ms when the exchange was initiated
// uplink, to response_leg_ms when initiated downlink; the unobserved leg is
// zero. total_ms is always the exact sum of the two legs.
struct LatencySample {
  Teid teid{};
  double request_leg_ms = 0.0;
  double response_leg_ms = 0.0;
  double total_ms = 0.0;
  double completed_at = 0.0;  // seconds
  std::uint64_t correlation_id = 0;
};

struct TrackerConfig {
  double match_timeout_ms = 2000.0;
  std::size_t max_pending_per_teid = 65536;
  // Observations may arrive up to this far behind the newest timestamp
  // before observe() rejects them.
  double reorder_tolerance_ms = 50.0;
};

// A pending entry that aged out (or was evicted by the per-TEID bound).
struct ExpiredEntry {
  Teid teid{};
  std::uint64_t correlation_id = 0;
  double first_seen = 0.0;
  Direction direction = Direction::kUplink;
};

// Every accepted observation ends up in exactly one bucket:
//   matched_observations + expired_entries + orphan_observations
//     + pending (current) == observations_accepted
// expired_entries includes both timeout flushes and overflow evictions.
struct TrackerStats {
  std::uint64_t observations_accepted = 0;
  std::uint64_t rejected_out_of_order = 0;
  std::uint64_t matched_observations = 0;  // 2 per emitted sample
  std::uint64_t samples_emitted = 0;
  std::uint64_t expired_entries = 0;
  std::uint64_t orphan_observations = 0;
};

// The paper's single-leg formula: (t_out - t_in) in milliseconds.
// NegativeInterval flags a clock-domain violation.
Result<double> time_shift_latency(double t_in_s, double t_out_s);

// Bidirectional total: the sum of the two legs. Both must be >= 0.
double total_latency(double request_leg_ms, double response_leg_ms);

struct WindowStats {
  double mean_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
  std::size_t count = 0;
};

// Fixed windows keyed by window start; a window with no samples has no entry.
struct LatencySeries {
  double window_ms = 0.0;
  std::map<std::int64_t, WindowStats> windows;  // key: window index

  double window_start_ms(std::int64_t index) const { return index * window_ms; }
};

LatencySeries window_aggregate(const std::vector<LatencySample>& samples,
                               double window_ms);

// Per-TEID request/response matcher. Single writer; emitted samples are
// immutable values. Pairing key is (TEID, correlation id); the counterpart
// must travel in the opposite direction and, when both sightings carry an
// inner flow, on the reversed 5-tuple. Entries sharing a key match FIFO.
class FlowTracker {
 public:
  explicit FlowTracker(TrackerConfig config = {});

  // Returns a sample when `obs` completes a pairing, nullopt when it was
  // recorded as pending. PendingOverflow reports that recording it evicted
  // the TEID's oldest pending entry; OutOfOrder rejects a timestamp more
  // than reorder_tolerance_ms behind the newest one seen.
  Result<std::optional<LatencySample>> observe(const Observation& obs);

  // Removes and returns every pending entry strictly older than
  // match_timeout_ms at time `now_s`. Later counterparts of the removed
  // entries are counted as orphans, not matched.
  std::vector<ExpiredEntry> flush_stale(double now_s);

  const TrackerConfig& config() const { return config_; }
  const TrackerStats& stats() const { return stats_; }
  std::size_t pending_count() const { return pending_total_; }
  bool conservation_holds() const;

 private:
  struct PendingRec {
    Observation first;
  };
  using PendingList = std::list<PendingRec>;

  struct TeidState {
    PendingList queue;  // oldest first
    std::unordered_map<std::uint64_t, std::vector<PendingList::iterator>> by_corr;
    std::size_t size = 0;
  };

  void drop_entry(TeidState& state, PendingList::iterator it, bool to_expired);

  TrackerConfig config_;
  TrackerStats stats_;
  std::map<std::uint32_t, TeidState> per_teid_;
  // Keys flushed/evicted recently; a later sighting of one counts as the
  // orphaned counterpart. Pruned on flush after 10x the match timeout.
  std::map<std::pair<std::uint32_t, std::uint64_t>, double> expired_keys_;
  std::size_t pending_total_ = 0;
  double max_timestamp_ = 0.0;
  bool saw_observation_ = false;
};

}  // namespace gtpulse
