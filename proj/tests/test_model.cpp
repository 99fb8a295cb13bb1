#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "qaoi/model.hpp"

using namespace qaoi;

namespace {

ModelParams tiny_params() {
  ModelParams p;
  p.query_period = 2;
  p.erasure_prob = 0.5;
  p.token_rate = 0.5;
  p.max_age = 3;
  p.bucket_capacity = 1;
  p.discount = 0.75;
  return p;
}

ModelParams random_params(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> tq(1, 6);
  std::uniform_int_distribution<int> cap(1, 5);
  std::uniform_real_distribution<double> prob(0.0, 1.0);
  std::uniform_int_distribution<int> edge(0, 9);
  ModelParams p;
  p.query_period = tq(rng);
  p.max_age = p.query_period * std::uniform_int_distribution<int>(1, 8)(rng);
  p.bucket_capacity = cap(rng);
  p.erasure_prob = edge(rng) == 0 ? (edge(rng) % 2) : prob(rng);
  p.token_rate = edge(rng) == 0 ? (edge(rng) % 2) : prob(rng);
  p.discount = 0.95 * prob(rng);
  return p;
}

}  // namespace

TEST_CASE("params validation") {
  ModelParams p = tiny_params();
  CHECK_NOTHROW(p.validate());
  CHECK(p.success_prob() == doctest::Approx(0.5));

  auto bad = p;
  bad.query_period = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.erasure_prob = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.token_rate = -0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.max_age = 1;  // below query_period
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.bucket_capacity = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.discount = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  const auto d = ModelParams::defaults(40, 0.2, 0.1);
  CHECK(d.max_age == 4000);
  CHECK(d.bucket_capacity == 10);
  CHECK(d.discount == doctest::Approx(0.75));
}

TEST_CASE("state space sizing") {
  CHECK(state_count(tiny_params()) == 12);

  ModelParams paper = ModelParams::defaults(40, 0.2, 0.1);
  CHECK(state_count(paper) == 1'760'000);

  ModelParams huge;
  huge.query_period = std::numeric_limits<int>::max();
  huge.max_age = std::numeric_limits<int>::max();
  huge.bucket_capacity = 10;
  CHECK_THROWS_AS(huge.validate(), SizingError);
}

TEST_CASE("enumeration order and index bijection") {
  const auto p = tiny_params();
  const auto states = enumerate_states(p);
  REQUIRE(states.size() == 12);
  CHECK(states.front() == State{1, 0, 0});
  CHECK(states.back() == State{3, 1, 1});
  for (std::int64_t i = 0; i < 12; ++i) {
    CHECK(state_index(states[i], p) == i);
    CHECK(state_at(i, p) == states[i]);
  }

  // Bijection on a larger space.
  ModelParams q;
  q.query_period = 3;
  q.max_age = 7;
  q.bucket_capacity = 2;
  const auto all = enumerate_states(q);
  REQUIRE(static_cast<std::int64_t>(all.size()) == state_count(q));
  for (std::int64_t i = 0; i < state_count(q); ++i) CHECK(state_index(state_at(i, q), q) == i);
  CHECK(all.front() == State{1, 0, 0});
  CHECK(all.back() == State{7, 2, 2});
}

TEST_CASE("feasible actions follow the token gate") {
  CHECK(feasible_actions(State{5, 3, 0}) == std::vector<Action>{Action::Silent});
  CHECK(feasible_actions(State{5, 3, 1}) ==
        std::vector<Action>{Action::Silent, Action::Transmit});
  CHECK(feasible_actions(State{1, 0, 10}) ==
        std::vector<Action>{Action::Silent, Action::Transmit});
}

TEST_CASE("successor examples") {
  ModelParams p = ModelParams::defaults(8, 0.2, 0.2);

  SUBCASE("silent step generates or not") {
    p.token_rate = 0.2;
    const auto out = successors(State{5, 3, 1}, Action::Silent, p);
    REQUIRE(out.size() == 2);
    CHECK(out[0].next == State{6, 2, 1});
    CHECK(out[0].probability == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(out[1].next == State{6, 2, 2});
    CHECK(out[1].probability == doctest::Approx(0.2).epsilon(1e-12));
  }

  SUBCASE("transmit splits on the channel") {
    p.erasure_prob = 0.2;
    p.token_rate = 0.0;
    const auto out = successors(State{5, 3, 1}, Action::Transmit, p);
    REQUIRE(out.size() == 2);
    CHECK(out[0].next == State{1, 2, 0});
    CHECK(out[0].probability == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(out[1].next == State{6, 2, 0});
    CHECK(out[1].probability == doctest::Approx(0.2).epsilon(1e-12));
  }

  SUBCASE("saturated age and countdown wrap") {
    p.token_rate = 0.0;
    const auto out = successors(State{p.max_age, 0, 0}, Action::Silent, p);
    REQUIRE(out.size() == 1);
    CHECK(out[0].next == State{p.max_age, p.query_period - 1, 0});
    CHECK(out[0].probability == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("full bucket merges the token branches") {
    const auto out = successors(State{5, 3, p.bucket_capacity}, Action::Silent, p);
    REQUIRE(out.size() == 1);
    CHECK(out[0].next == State{6, 2, p.bucket_capacity});
    CHECK(out[0].probability == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("error-free transmit merges the age branches") {
    p.erasure_prob = 0.0;
    p.token_rate = 0.5;
    const auto out = successors(State{5, 3, 1}, Action::Transmit, p);
    REQUIRE(out.size() == 2);
    for (const auto& e : out) CHECK(e.next.age == 1);
  }

  SUBCASE("transmit with an empty bucket is rejected") {
    CHECK_THROWS_AS(successors(State{5, 3, 0}, Action::Transmit, p), std::invalid_argument);
  }
}

TEST_CASE("kernel properties over random instances") {
  std::mt19937_64 rng(20240707);
  for (int trial = 0; trial < 300; ++trial) {
    const auto p = random_params(rng);
    std::uniform_int_distribution<int> age(1, p.max_age);
    std::uniform_int_distribution<int> sigma(0, p.query_period - 1);
    std::uniform_int_distribution<int> tokens(0, p.bucket_capacity);
    const State s{age(rng), sigma(rng), tokens(rng)};
    for (const auto a : feasible_actions(s)) {
      const auto out = successors(s, a, p);
      REQUIRE(!out.empty());
      CHECK(out.size() <= 4);
      double total = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) {
        total += out[i].probability;
        CHECK(out[i].probability > 0.0);
        CHECK(state_valid(out[i].next, p));
        // Merged and canonically ordered.
        if (i > 0) CHECK(state_index(out[i - 1].next, p) < state_index(out[i].next, p));
        // Age dynamics: silent ages deterministically, transmit may reset.
        const int grown = std::min(s.age + 1, p.max_age);
        if (a == Action::Silent)
          CHECK(out[i].next.age == grown);
        else
          CHECK((out[i].next.age == 1 || out[i].next.age == grown));
        // Token ledger: spend then maybe gain one, clamped.
        const int spend = a == Action::Transmit ? 1 : 0;
        const int lo = std::max(s.tokens - spend, 0);
        const int hi = std::min(s.tokens - spend + 1, p.bucket_capacity);
        CHECK(out[i].next.tokens >= lo);
        CHECK(out[i].next.tokens <= hi);
        // Countdown is deterministic.
        const int expect_sigma = s.slots_to_query >= 1 ? s.slots_to_query - 1 : p.query_period - 1;
        CHECK(out[i].next.slots_to_query == expect_sigma);
      }
      CHECK(std::fabs(total - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("cost functions") {
  CHECK(cost_pq(State{7, 4, 2}) == 7.0);
  CHECK(cost_pq(State{1, 0, 0}) == 1.0);
  CHECK(cost_pq(State{4000, 1, 10}) == 4000.0);

  CHECK(cost_qapa(State{12, 0, 3}) == 12.0);
  CHECK(cost_qapa(State{12, 5, 3}) == 0.0);
  CHECK(cost_qapa(State{1, 0, 0}) == 1.0);
}

TEST_CASE("costs coincide when every slot is a query") {
  ModelParams p;
  p.query_period = 1;
  p.max_age = 9;
  p.bucket_capacity = 3;
  for (const auto& s : enumerate_states(p)) {
    CHECK(cost_qapa(s) == cost_pq(s));
    CHECK(transition_cost(s, Objective::PQ) == transition_cost(s, Objective::QAPA));
  }
}
