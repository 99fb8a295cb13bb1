#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "qaoi/sim.hpp"

using namespace qaoi;

namespace {

Policy transmit_when_possible(const ModelParams& p) {
  Policy pol;
  pol.action_of.assign(static_cast<std::size_t>(state_count(p)), Action::Silent);
  const auto states = enumerate_states(p);
  for (std::size_t i = 0; i < states.size(); ++i)
    if (states[i].tokens >= 1) pol.action_of[i] = Action::Transmit;
  return pol;
}

Policy all_silent(const ModelParams& p) {
  Policy pol;
  pol.action_of.assign(static_cast<std::size_t>(state_count(p)), Action::Silent);
  return pol;
}

}  // namespace

TEST_CASE("deterministic reset loop") {
  ModelParams p;
  p.query_period = 3;
  p.max_age = 9;
  p.bucket_capacity = 2;
  p.erasure_prob = 0.0;
  p.token_rate = 1.0;
  const auto records = simulate(transmit_when_possible(p), p, SimConfig{5, 7, 0});
  REQUIRE(records.size() == 5);
  // Slot 0 starts with an empty bucket, so the first reset lands at slot 2.
  const std::vector<int> expect{1, 2, 1, 1, 1};
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(records[i].t == static_cast<std::int64_t>(i));
    CHECK(records[i].age == expect[i]);
  }
  CHECK(records[0].action == Action::Silent);
  for (std::size_t i = 1; i < records.size(); ++i) {
    CHECK(records[i].action == Action::Transmit);
    CHECK(records[i].delivered);
  }
}

TEST_CASE("dead channel ramps the age to the clamp") {
  ModelParams p;
  p.query_period = 4;
  p.max_age = 10;
  p.bucket_capacity = 2;
  p.erasure_prob = 1.0;
  p.token_rate = 0.5;
  for (const auto& pol : {all_silent(p), transmit_when_possible(p)}) {
    const auto records = simulate(pol, p, SimConfig{25, 99, 0});
    for (const auto& r : records) CHECK(r.age == std::min<std::int64_t>(r.t + 1, p.max_age));
    for (const auto& r : records) CHECK_FALSE(r.delivered);
  }
}

TEST_CASE("trajectory invariants") {
  ModelParams p;
  p.query_period = 5;
  p.max_age = 40;
  p.bucket_capacity = 3;
  p.erasure_prob = 0.35;
  p.token_rate = 0.3;
  const auto records = simulate(transmit_when_possible(p), p, SimConfig{20000, 1234, 0});
  REQUIRE(records.size() == 20000);

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    CHECK(state_valid(State{r.age, r.slots_to_query, r.tokens}, p));
    CHECK(r.is_query_slot == (r.slots_to_query == 0));
    // First query lands one period in, then strict cadence.
    CHECK(r.is_query_slot == ((r.t + 1) % p.query_period == 0));
    if (r.delivered) CHECK(r.action == Action::Transmit);
    if (r.action == Action::Transmit) CHECK(r.tokens >= 1);
    if (i + 1 < records.size()) {
      const auto& n = records[i + 1];
      // Sawtooth: reset after a delivery, else +1 clamped.
      if (r.delivered)
        CHECK(n.age == 1);
      else
        CHECK(n.age == std::min(r.age + 1, p.max_age));
      const int dtokens = n.tokens - r.tokens;
      CHECK(dtokens >= -1);
      CHECK(dtokens <= 1);
      if (r.action == Action::Silent) CHECK(dtokens >= 0);
    }
  }
}

TEST_CASE("seed reproducibility") {
  ModelParams p;
  p.query_period = 4;
  p.max_age = 20;
  p.bucket_capacity = 2;
  p.erasure_prob = 0.4;
  p.token_rate = 0.4;
  const auto pol = transmit_when_possible(p);
  const auto a = simulate(pol, p, SimConfig{5000, 42, 0});
  const auto b = simulate(pol, p, SimConfig{5000, 42, 0});
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].age == b[i].age);
    CHECK(a[i].tokens == b[i].tokens);
    CHECK(a[i].action == b[i].action);
    CHECK(a[i].delivered == b[i].delivered);
  }
  const auto c = simulate(pol, p, SimConfig{5000, 43, 0});
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i)
    any_diff = any_diff || a[i].age != c[i].age || a[i].tokens != c[i].tokens;
  CHECK(any_diff);
}

TEST_CASE("config validation and policy mismatch") {
  ModelParams p;
  p.query_period = 2;
  p.max_age = 10;
  p.bucket_capacity = 1;
  CHECK_THROWS_AS(simulate(all_silent(p), p, SimConfig{0, 1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(simulate(all_silent(p), p, SimConfig{10, 1, 10}), std::invalid_argument);
  CHECK_THROWS_AS(simulate(all_silent(p), p, SimConfig{10, 1, -1}), std::invalid_argument);

  Policy wrong;
  wrong.action_of.assign(7, Action::Silent);
  CHECK_THROWS_AS(simulate(wrong, p, SimConfig{10, 1, 0}), std::invalid_argument);

  CHECK(SimConfig::defaults(1000, 5, p).warmup == 20);
}

TEST_CASE("empirical transition frequencies track the kernel") {
  ModelParams p;
  p.query_period = 4;
  p.max_age = 12;
  p.bucket_capacity = 2;
  p.erasure_prob = 0.3;
  p.token_rate = 0.3;
  const auto pol = transmit_when_possible(p);
  const auto records = simulate(pol, p, SimConfig{300000, 2024, 0});

  struct Tally {
    std::map<std::int64_t, std::int64_t> next_counts;
    std::int64_t total = 0;
  };
  std::map<std::pair<std::int64_t, int>, Tally> seen;
  for (std::size_t i = 0; i + 1 < records.size(); ++i) {
    const auto& r = records[i];
    const auto& n = records[i + 1];
    const auto s_idx = state_index(State{r.age, r.slots_to_query, r.tokens}, p);
    const auto n_idx = state_index(State{n.age, n.slots_to_query, n.tokens}, p);
    auto& tally = seen[{s_idx, static_cast<int>(r.action)}];
    ++tally.next_counts[n_idx];
    ++tally.total;
  }

  REQUIRE(seen.size() > 10);
  for (const auto& [key, tally] : seen) {
    const auto s = state_at(key.first, p);
    const auto a = static_cast<Action>(key.second);
    const auto kernel = successors(s, a, p);
    // No mass outside the kernel support.
    for (const auto& [n_idx, count] : tally.next_counts) {
      bool in_support = false;
      for (const auto& e : kernel) in_support |= state_index(e.next, p) == n_idx;
      CHECK(in_support);
    }
    for (const auto& e : kernel) {
      const auto it = tally.next_counts.find(state_index(e.next, p));
      const double freq =
          it == tally.next_counts.end() ? 0.0 : static_cast<double>(it->second) / tally.total;
      const double se = std::sqrt(e.probability * (1.0 - e.probability) / tally.total);
      CHECK(std::fabs(freq - e.probability) <= 4.0 * se + 1e-12);
    }
  }
}

TEST_CASE("query-aware policy clusters transmissions before the query") {
  ModelParams p = ModelParams::defaults(10, 0.2, 0.2);
  p.max_age = 100;
  SolverConfig cfg;
  cfg.objective = Objective::QAPA;
  const auto solved = policy_iteration(p, cfg);
  const auto records = simulate(solved.policy, p, SimConfig::defaults(100000, 11, p));

  std::int64_t tx_near = 0, near = 0, tx_far = 0, far = 0;
  for (const auto& r : records) {
    if (r.slots_to_query <= 2) {
      ++near;
      tx_near += r.action == Action::Transmit;
    } else {
      ++far;
      tx_far += r.action == Action::Transmit;
    }
  }
  REQUIRE(near > 0);
  REQUIRE(far > 0);
  CHECK(static_cast<double>(tx_near) / near > static_cast<double>(tx_far) / far);
}
