#include "gtpulse/flow_tracker.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace gtpulse {

Result<double> time_shift_latency(double t_in_s, double t_out_s) {
  if (t_out_s < t_in_s) {
    return make_error(Errc::negative_interval,
                      "t_out precedes t_in; timestamps are not from one clock domain");
  }
  return (t_out_s - t_in_s) * 1000.0;
}

double total_latency(double request_leg_ms, double response_leg_ms) {
  assert(request_leg_ms >= 0.0 && response_leg_ms >= 0.0);
  return request_leg_ms + response_leg_ms;
}

LatencySeries window_aggregate(const std::vector<LatencySample>& samples,
                               double window_ms) {
  assert(window_ms > 0.0);
  LatencySeries series;
  series.window_ms = window_ms;
  for (const LatencySample& sample : samples) {
    const auto index = static_cast<std::int64_t>(
        std::floor(sample.completed_at * 1000.0 / window_ms));
    auto [it, inserted] = series.windows.try_emplace(index);
    WindowStats& w = it->second;
    if (inserted) {
      w.min_ms = sample.total_ms;
      w.max_ms = sample.total_ms;
    } else {
      w.min_ms = std::min(w.min_ms, sample.total_ms);
      w.max_ms = std::max(w.max_ms, sample.total_ms);
    }
    // Mean accumulated as a running sum; divided once below.
    w.mean_ms += sample.total_ms;
    w.count += 1;
  }
  for (auto& [index, w] : series.windows) {
    w.mean_ms /= static_cast<double>(w.count);
  }
  return series;
}

FlowTracker::FlowTracker(TrackerConfig config) : config_(config) {
  assert(config_.match_timeout_ms > 0.0);
  assert(config_.max_pending_per_teid > 0);
}

void FlowTracker::drop_entry(TeidState& state, PendingList::iterator it,
                             bool to_expired) {
  const Observation& obs = it->first;
  auto corr_it = state.by_corr.find(obs.correlation_id);
  if (corr_it != state.by_corr.end()) {
    auto& vec = corr_it->second;
    vec.erase(std::remove(vec.begin(), vec.end(), it), vec.end());
    if (vec.empty()) state.by_corr.erase(corr_it);
  }
  if (to_expired) {
    expired_keys_[{obs.teid.value, obs.correlation_id}] = obs.timestamp;
    ++stats_.expired_entries;
  }
  state.queue.erase(it);
  --state.size;
  --pending_total_;
}

Result<std::optional<LatencySample>> FlowTracker::observe(const Observation& obs) {
  if (saw_observation_ &&
      obs.timestamp < max_timestamp_ - config_.reorder_tolerance_ms / 1000.0) {
    ++stats_.rejected_out_of_order;
    return make_error(Errc::out_of_order,
                      "timestamp regressed beyond the reorder tolerance");
  }
  saw_observation_ = true;
  max_timestamp_ = std::max(max_timestamp_, obs.timestamp);
  ++stats_.observations_accepted;

  TeidState& state = per_teid_[obs.teid.value];

  // Counterpart already pending? Oldest entry with this correlation id wins.
  auto corr_it = state.by_corr.find(obs.correlation_id);
  if (corr_it != state.by_corr.end()) {
    for (auto entry_it : corr_it->second) {
      const Observation& first = entry_it->first;
      if (first.direction == obs.direction) continue;
      const bool flows_known = first.inner_flow != InnerFlowKey{} &&
                               obs.inner_flow != InnerFlowKey{};
      if (flows_known && first.inner_flow.reversed() != obs.inner_flow) continue;

      // Reordering inside the tolerance can put the counterpart marginally
      // ahead of the initiator; a negative gap is clamped to zero.
      const double gap_ms =
          std::max(0.0, (obs.timestamp - first.timestamp) * 1000.0);
      LatencySample sample;
      sample.teid = obs.teid;
      sample.correlation_id = obs.correlation_id;
      sample.completed_at = obs.timestamp;
      if (first.direction == Direction::kUplink) {
        sample.request_leg_ms = gap_ms;
        sample.response_leg_ms = 0.0;
      } else {
        sample.request_leg_ms = 0.0;
        sample.response_leg_ms = gap_ms;
      }
      sample.total_ms = total_latency(sample.request_leg_ms, sample.response_leg_ms);
      drop_entry(state, entry_it, /*to_expired=*/false);
      stats_.matched_observations += 2;
      ++stats_.samples_emitted;
      return std::optional<LatencySample>(sample);
    }
  }

  // A sighting whose counterpart already aged out is an orphan, not a new
  // pending exchange.
  if (auto exp_it = expired_keys_.find({obs.teid.value, obs.correlation_id});
      exp_it != expired_keys_.end()) {
    expired_keys_.erase(exp_it);
    ++stats_.orphan_observations;
    return std::optional<LatencySample>(std::nullopt);
  }

  bool overflowed = false;
  if (state.size >= config_.max_pending_per_teid) {
    drop_entry(state, state.queue.begin(), /*to_expired=*/true);
    overflowed = true;
  }
  state.queue.push_back(PendingRec{obs});
  auto it = std::prev(state.queue.end());
  state.by_corr[obs.correlation_id].push_back(it);
  ++state.size;
  ++pending_total_;

  if (overflowed) {
    return make_error(Errc::pending_overflow,
                      "pending bound hit for TEID " + std::to_string(obs.teid.value) +
                          "; oldest entry evicted");
  }
  return std::optional<LatencySample>(std::nullopt);
}

std::vector<ExpiredEntry> FlowTracker::flush_stale(double now_s) {
  std::vector<ExpiredEntry> expired;
  const double cutoff = now_s - config_.match_timeout_ms / 1000.0;
  for (auto& [teid, state] : per_teid_) {
    // Insertion order is only near-sorted under the reorder tolerance, so
    // the whole queue is scanned rather than stopping at the first keeper.
    for (auto it = state.queue.begin(); it != state.queue.end();) {
      auto current = it++;
      const Observation& first = current->first;
      if (first.timestamp < cutoff) {
        expired.push_back(ExpiredEntry{first.teid, first.correlation_id,
                                       first.timestamp, first.direction});
        drop_entry(state, current, /*to_expired=*/true);
      }
    }
  }
  const double prune_cutoff = now_s - 10.0 * config_.match_timeout_ms / 1000.0;
  std::erase_if(expired_keys_,
                [prune_cutoff](const auto& kv) { return kv.second < prune_cutoff; });
  return expired;
}

bool FlowTracker::conservation_holds() const {
  return stats_.matched_observations + stats_.expired_entries +
             stats_.orphan_observations + pending_total_ ==
         stats_.observations_accepted;
}

}  // namespace gtpulse
