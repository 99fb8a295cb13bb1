#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "qaoi/model.hpp"
#include "qaoi/solver.hpp"

namespace qaoi {

struct SimConfig {
  std::int64_t horizon = 0;  // slots to simulate
  std::uint64_t seed = 0;
  std::int64_t warmup = 0;  // leading slots callers drop before computing metrics

  static SimConfig defaults(std::int64_t horizon, std::uint64_t seed, const ModelParams& p) {
    return SimConfig{horizon, seed, 10 * static_cast<std::int64_t>(p.query_period)};
  }

  void validate() const {
    if (horizon < 1) throw std::invalid_argument("SimConfig: horizon must be >= 1");
    if (warmup < 0) throw std::invalid_argument("SimConfig: warmup must be >= 0");
    if (horizon <= warmup) throw std::invalid_argument("SimConfig: horizon must exceed warmup");
  }
};

/// One simulated slot: the state entering the slot, the action taken, and
/// whether that transmission came through. delivered implies Transmit; the
/// age resets to 1 in the following slot.
struct TrajectoryRecord {
  std::int64_t t = 0;
  int age = 1;
  int tokens = 0;
  int slots_to_query = 0;
  Action action = Action::Silent;
  bool delivered = false;
  bool is_query_slot = false;
};

namespace detail {

// 53-bit uniform in [0,1); pinned construction so seeds are portable across
// implementations of mt19937_64.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Replay a fixed policy through the channel, token, and query processes.
/// Starts one full period before the first query with an empty bucket.
/// Per slot the channel is drawn first (only when transmitting), then the
/// token generation; the stream is a single mt19937_64 seeded from config.
inline std::vector<TrajectoryRecord> simulate(const Policy& policy, const ModelParams& p,
                                              const SimConfig& cfg) {
  p.validate();
  cfg.validate();
  detail::check_policy_shape(policy.action_of, p);

  std::mt19937_64 rng(cfg.seed);
  std::vector<TrajectoryRecord> records;
  records.reserve(static_cast<std::size_t>(cfg.horizon));

  int age = 1;
  int sigma = p.query_period - 1;
  int tokens = 0;
  for (std::int64_t t = 0; t < cfg.horizon; ++t) {
    const std::int64_t idx =
        (static_cast<std::int64_t>(age - 1) * p.query_period + sigma) * (p.bucket_capacity + 1) +
        tokens;
    const Action a = policy.action_of[static_cast<std::size_t>(idx)];
    bool delivered = false;
    if (a == Action::Transmit) delivered = detail::uniform01(rng) < p.success_prob();
    const bool generated = detail::uniform01(rng) < p.token_rate;
    records.push_back({t, age, tokens, sigma, a, delivered, sigma == 0});

    age = delivered ? 1 : std::min(age + 1, p.max_age);
    sigma = sigma >= 1 ? sigma - 1 : p.query_period - 1;
    tokens = std::min(tokens + (generated ? 1 : 0) - (a == Action::Transmit ? 1 : 0),
                      p.bucket_capacity);
  }
  return records;
}

}  // namespace qaoi
