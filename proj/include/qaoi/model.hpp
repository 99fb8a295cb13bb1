#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "qaoi/errors.hpp"

namespace qaoi {

/// Scenario constants for the sensor/edge-node update loop.
///
/// Time is slotted. Queries arrive every query_period slots, transmissions
/// cross a packet erasure channel, and each transmission spends one token
/// from a Bernoulli-replenished bucket. Age and bucket level are truncated
/// at max_age and bucket_capacity so the decision problem stays finite.
struct ModelParams {
  int query_period = 1;        // T_q, slots between queries
  double erasure_prob = 0.0;   // per-transmission loss probability
  double token_rate = 0.0;     // per-slot token generation probability
  int max_age = 1;             // age clamp
  int bucket_capacity = 10;    // token clamp
  double discount = 0.75;      // per-slot discount, < 1

  double success_prob() const { return 1.0 - erasure_prob; }

  /// Reference defaults: max_age = 100 * T_q, bucket of 10, discount 0.75.
  static ModelParams defaults(int query_period, double erasure_prob, double token_rate) {
    ModelParams p;
    p.query_period = query_period;
    p.erasure_prob = erasure_prob;
    p.token_rate = token_rate;
    p.max_age = 100 * query_period;
    p.bucket_capacity = 10;
    p.discount = 0.75;
    return p;
  }

  void validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("ModelParams: " + msg); };
    if (query_period < 1) fail("query_period must be >= 1");
    if (!(erasure_prob >= 0.0 && erasure_prob <= 1.0)) fail("erasure_prob must be in [0,1]");
    if (!(token_rate >= 0.0 && token_rate <= 1.0)) fail("token_rate must be in [0,1]");
    if (max_age < query_period) fail("max_age must be >= query_period");
    if (bucket_capacity < 1) fail("bucket_capacity must be >= 1");
    if (!(discount >= 0.0 && discount < 1.0)) fail("discount must be in [0,1)");
    // Reject state spaces that cannot be indexed on this platform.
    const std::int64_t cap = std::numeric_limits<std::int64_t>::max();
    std::int64_t n = max_age;
    if (n > cap / query_period) throw SizingError("ModelParams: state space exceeds index range");
    n *= query_period;
    if (n > cap / (bucket_capacity + 1))
      throw SizingError("ModelParams: state space exceeds index range");
  }

  bool operator==(const ModelParams&) const = default;
};

/// One MDP state: current age, slots until the next query, available tokens.
/// slots_to_query == 0 marks the slot in which a query is served; the
/// countdown wraps 0 -> query_period - 1 afterwards.
struct State {
  int age = 1;             // 1 .. max_age
  int slots_to_query = 0;  // 0 .. query_period - 1
  int tokens = 0;          // 0 .. bucket_capacity

  bool operator==(const State&) const = default;
};

enum class Action : std::uint8_t { Silent = 0, Transmit = 1 };

/// Dense index: age-major, then slots_to_query, then tokens.
/// Bijective over the truncated state space; part of the module contract so
/// solver arrays and serialized policies line up across runs.
inline std::int64_t state_index(const State& s, const ModelParams& p) {
  return (static_cast<std::int64_t>(s.age - 1) * p.query_period + s.slots_to_query) *
             (p.bucket_capacity + 1) +
         s.tokens;
}

inline State state_at(std::int64_t index, const ModelParams& p) {
  const int buckets = p.bucket_capacity + 1;
  State s;
  s.tokens = static_cast<int>(index % buckets);
  index /= buckets;
  s.slots_to_query = static_cast<int>(index % p.query_period);
  s.age = static_cast<int>(index / p.query_period) + 1;
  return s;
}

inline std::int64_t state_count(const ModelParams& p) {
  p.validate();
  return static_cast<std::int64_t>(p.max_age) * p.query_period * (p.bucket_capacity + 1);
}

inline bool state_valid(const State& s, const ModelParams& p) {
  return s.age >= 1 && s.age <= p.max_age && s.slots_to_query >= 0 &&
         s.slots_to_query < p.query_period && s.tokens >= 0 && s.tokens <= p.bucket_capacity;
}

/// All states in dense-index order.
inline std::vector<State> enumerate_states(const ModelParams& p) {
  const std::int64_t n = state_count(p);
  if (n > static_cast<std::int64_t>(std::numeric_limits<std::size_t>::max() / sizeof(State)))
    throw SizingError("enumerate_states: state space exceeds index range");
  std::vector<State> states;
  states.reserve(static_cast<std::size_t>(n));
  for (int age = 1; age <= p.max_age; ++age)
    for (int sigma = 0; sigma < p.query_period; ++sigma)
      for (int b = 0; b <= p.bucket_capacity; ++b) states.push_back(State{age, sigma, b});
  return states;
}

/// Transmit needs a token; Silent is always allowed.
inline std::vector<Action> feasible_actions(const State& s) {
  if (s.tokens >= 1) return {Action::Silent, Action::Transmit};
  return {Action::Silent};
}

struct TransitionEntry {
  State next;
  double probability = 0.0;
};

namespace detail {

// Deterministic parts of one step: query countdown and saturating age growth.
inline int next_sigma(int sigma, const ModelParams& p) {
  return sigma >= 1 ? sigma - 1 : p.query_period - 1;
}
inline int aged_up(int age, const ModelParams& p) { return std::min(age + 1, p.max_age); }

}  // namespace detail

/// One-step transition kernel. At most four outcomes (age reset/growth x
/// token generated/not); outcomes that land in the same state are merged and
/// the list is sorted by dense index. Probabilities sum to 1.
inline std::vector<TransitionEntry> successors(const State& s, Action a, const ModelParams& p) {
  p.validate();
  if (!state_valid(s, p)) throw std::invalid_argument("successors: state out of range");
  if (a == Action::Transmit && s.tokens < 1)
    throw std::invalid_argument("successors: Transmit infeasible with an empty bucket");

  const int send = (a == Action::Transmit) ? 1 : 0;
  const double p_reset = send * p.success_prob();
  const double mu = p.token_rate;
  const int sigma_next = detail::next_sigma(s.slots_to_query, p);
  const int age_grown = detail::aged_up(s.age, p);
  const int b_gen = std::min(s.tokens + 1 - send, p.bucket_capacity);
  const int b_idle = s.tokens - send;

  std::vector<TransitionEntry> out;
  auto add = [&](int age, int tokens, double prob) {
    if (prob <= 0.0) return;
    const State next{age, sigma_next, tokens};
    for (auto& e : out) {
      if (e.next == next) {
        e.probability += prob;
        return;
      }
    }
    out.push_back({next, prob});
  };

  add(1, b_gen, p_reset * mu);
  add(1, b_idle, p_reset * (1.0 - mu));
  add(age_grown, b_gen, (1.0 - p_reset) * mu);
  add(age_grown, b_idle, (1.0 - p_reset) * (1.0 - mu));

  std::sort(out.begin(), out.end(), [&](const TransitionEntry& x, const TransitionEntry& y) {
    return state_index(x.next, p) < state_index(y.next, p);
  });
  return out;
}

/// Per-transition cost when every slot matters: the age entered next slot.
inline double cost_pq(const State& next_state) { return next_state.age; }

/// Per-transition cost when only query slots matter: the age entered on a
/// query slot, zero otherwise.
inline double cost_qapa(const State& next_state) {
  return next_state.slots_to_query == 0 ? next_state.age : 0.0;
}

/// Which cost the policy optimizes: age in every slot (PQ) or age at query
/// slots only (QAPA).
enum class Objective { PQ, QAPA };

inline double transition_cost(const State& next_state, Objective obj) {
  return obj == Objective::PQ ? cost_pq(next_state) : cost_qapa(next_state);
}

inline const char* to_string(Objective obj) { return obj == Objective::PQ ? "PQ" : "QAPA"; }

inline Objective parse_objective(const std::string& text) {
  if (text == "PQ" || text == "pq") return Objective::PQ;
  if (text == "QAPA" || text == "qapa") return Objective::QAPA;
  throw ConfigError("unknown objective '" + text + "' (expected PQ or QAPA)");
}

}  // namespace qaoi
