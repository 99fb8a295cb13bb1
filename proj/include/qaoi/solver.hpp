#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qaoi/model.hpp"

namespace qaoi {

struct SolverConfig {
  double eval_tolerance = 1e-9;         // sup-norm residual target
  long max_eval_sweeps = 100000;        // per evaluation / value iteration
  int max_improvement_rounds = 1000;    // policy iteration budget
  Objective objective = Objective::PQ;

  void validate() const {
    if (!(eval_tolerance > 0.0)) throw std::invalid_argument("SolverConfig: eval_tolerance");
    if (max_eval_sweeps < 1) throw std::invalid_argument("SolverConfig: max_eval_sweeps");
    if (max_improvement_rounds < 1)
      throw std::invalid_argument("SolverConfig: max_improvement_rounds");
  }
};

/// Deterministic stationary policy over the dense state index.
struct Policy {
  std::vector<Action> action_of;

  bool operator==(const Policy&) const = default;
};

/// Expected discounted cost per state under some policy.
struct ValueFunction {
  std::vector<double> value_of;
};

struct SolveResult {
  Policy policy;
  ValueFunction value;
  int rounds = 0;      // improvement rounds until the policy stopped changing
  double residual = 0.0;  // Bellman residual of the final evaluation
};

namespace detail {

// Strides and constants for transition arithmetic inlined into the sweeps.
// Mirrors successors(); the dense oracle tests keep the two honest.
struct SweepModel {
  int tq, max_age, cap;
  double lambda, mu, ps;
  bool qapa;
  std::int64_t stride_age, stride_sigma;

  SweepModel(const ModelParams& p, Objective obj)
      : tq(p.query_period),
        max_age(p.max_age),
        cap(p.bucket_capacity),
        lambda(p.discount),
        mu(p.token_rate),
        ps(p.success_prob()),
        qapa(obj == Objective::QAPA),
        stride_age(static_cast<std::int64_t>(p.query_period) * (p.bucket_capacity + 1)),
        stride_sigma(p.bucket_capacity + 1) {}

  double cost(int age, int sigma_next) const {
    if (qapa && sigma_next != 0) return 0.0;
    return static_cast<double>(age);
  }

  // Expected one-step cost plus discounted continuation for Silent.
  // g_base / r_base index (grown age, next sigma, token 0) and
  // (age 1, next sigma, token 0) rows of v.
  double backup_silent(const std::vector<double>& v, std::int64_t g_base, double c_grown,
                       int b) const {
    const int b_gen = b < cap ? b + 1 : cap;
    return c_grown + lambda * (mu * v[g_base + b_gen] + (1.0 - mu) * v[g_base + b]);
  }

  double backup_transmit(const std::vector<double>& v, std::int64_t g_base, std::int64_t r_base,
                         double c_grown, double c_reset, int b) const {
    // Spends one token, so b >= 1: idle branch lands on b-1, generation on b.
    const double stay = mu * v[g_base + b] + (1.0 - mu) * v[g_base + b - 1];
    const double reset = mu * v[r_base + b] + (1.0 - mu) * v[r_base + b - 1];
    return ps * (c_reset + lambda * reset) + (1.0 - ps) * (c_grown + lambda * stay);
  }
};

// One in-place Gauss-Seidel sweep in dense-index order; returns max change.
inline double policy_sweep(std::vector<double>& v, const std::vector<Action>& policy,
                           const SweepModel& m) {
  double worst = 0.0;
  std::int64_t i = 0;
  for (int age = 1; age <= m.max_age; ++age) {
    const int grown = age < m.max_age ? age + 1 : m.max_age;
    const std::int64_t grown_row = static_cast<std::int64_t>(grown - 1) * m.stride_age;
    for (int sigma = 0; sigma < m.tq; ++sigma) {
      const int sigma_next = sigma >= 1 ? sigma - 1 : m.tq - 1;
      const std::int64_t g_base = grown_row + sigma_next * m.stride_sigma;
      const std::int64_t r_base = sigma_next * m.stride_sigma;
      const double c_grown = m.cost(grown, sigma_next);
      const double c_reset = m.cost(1, sigma_next);
      for (int b = 0; b <= m.cap; ++b, ++i) {
        const double now = policy[i] == Action::Transmit
                               ? m.backup_transmit(v, g_base, r_base, c_grown, c_reset, b)
                               : m.backup_silent(v, g_base, c_grown, b);
        const double diff = std::fabs(now - v[i]);
        if (diff > worst) worst = diff;
        v[i] = now;
      }
    }
  }
  return worst;
}

// Read-only pass: sup-norm Bellman residual of v under a fixed policy.
inline double policy_residual(const std::vector<double>& v, const std::vector<Action>& policy,
                              const SweepModel& m) {
  double worst = 0.0;
  std::int64_t i = 0;
  for (int age = 1; age <= m.max_age; ++age) {
    const int grown = age < m.max_age ? age + 1 : m.max_age;
    const std::int64_t grown_row = static_cast<std::int64_t>(grown - 1) * m.stride_age;
    for (int sigma = 0; sigma < m.tq; ++sigma) {
      const int sigma_next = sigma >= 1 ? sigma - 1 : m.tq - 1;
      const std::int64_t g_base = grown_row + sigma_next * m.stride_sigma;
      const std::int64_t r_base = sigma_next * m.stride_sigma;
      const double c_grown = m.cost(grown, sigma_next);
      const double c_reset = m.cost(1, sigma_next);
      for (int b = 0; b <= m.cap; ++b, ++i) {
        const double now = policy[i] == Action::Transmit
                               ? m.backup_transmit(v, g_base, r_base, c_grown, c_reset, b)
                               : m.backup_silent(v, g_base, c_grown, b);
        const double diff = std::fabs(now - v[i]);
        if (diff > worst) worst = diff;
      }
    }
  }
  return worst;
}

inline void check_policy_shape(const std::vector<Action>& policy, const ModelParams& p) {
  if (static_cast<std::int64_t>(policy.size()) != state_count(p))
    throw std::invalid_argument("policy does not match the state space");
  const int buckets = p.bucket_capacity + 1;
  for (std::size_t i = 0; i < policy.size(); ++i)
    if (policy[i] == Action::Transmit && static_cast<int>(i) % buckets == 0)
      throw std::invalid_argument("policy transmits from an empty bucket");
}

}  // namespace detail

/// Iterative successive approximation of v_pi from v = 0, swept in
/// dense-index order. Stops once the Bellman residual under the fixed
/// policy reaches eval_tolerance * (1 - discount), which bounds the
/// sup-norm distance to the exact fixed point by eval_tolerance itself.
inline ValueFunction evaluate_policy(const Policy& policy, const ModelParams& p,
                                     const SolverConfig& config) {
  p.validate();
  config.validate();
  detail::check_policy_shape(policy.action_of, p);
  const detail::SweepModel m(p, config.objective);
  const double stop = config.eval_tolerance * (1.0 - p.discount);
  ValueFunction v;
  v.value_of.assign(static_cast<std::size_t>(state_count(p)), 0.0);
  double change = 0.0;
  for (long sweep = 1; sweep <= config.max_eval_sweeps; ++sweep) {
    change = detail::policy_sweep(v.value_of, policy.action_of, m);
    if (change <= stop && detail::policy_residual(v.value_of, policy.action_of, m) <= stop)
      return v;
  }
  throw SolverError("evaluate_policy: no convergence in " +
                        std::to_string(config.max_eval_sweeps) + " sweeps (residual " +
                        std::to_string(change) + ")",
                    change, config.max_eval_sweeps);
}

/// Greedy policy with respect to v; exact ties go to Silent.
inline Policy greedy_policy(const ValueFunction& v, const ModelParams& p, Objective objective) {
  p.validate();
  if (static_cast<std::int64_t>(v.value_of.size()) != state_count(p))
    throw std::invalid_argument("value function does not match the state space");
  const detail::SweepModel m(p, objective);
  Policy out;
  out.action_of.assign(v.value_of.size(), Action::Silent);
  std::int64_t i = 0;
  for (int age = 1; age <= m.max_age; ++age) {
    const int grown = age < m.max_age ? age + 1 : m.max_age;
    const std::int64_t grown_row = static_cast<std::int64_t>(grown - 1) * m.stride_age;
    for (int sigma = 0; sigma < m.tq; ++sigma) {
      const int sigma_next = sigma >= 1 ? sigma - 1 : m.tq - 1;
      const std::int64_t g_base = grown_row + sigma_next * m.stride_sigma;
      const std::int64_t r_base = sigma_next * m.stride_sigma;
      const double c_grown = m.cost(grown, sigma_next);
      const double c_reset = m.cost(1, sigma_next);
      ++i;  // b = 0 stays Silent
      for (int b = 1; b <= m.cap; ++b, ++i) {
        const double q_silent = m.backup_silent(v.value_of, g_base, c_grown, b);
        const double q_transmit =
            m.backup_transmit(v.value_of, g_base, r_base, c_grown, c_reset, b);
        if (q_transmit < q_silent) out.action_of[i] = Action::Transmit;
      }
    }
  }
  return out;
}

/// One improvement step: the greedy policy for v plus whether it differs
/// from the policy that produced v.
inline std::pair<Policy, bool> improve_policy(const ValueFunction& v, const Policy& previous,
                                              const ModelParams& p, const SolverConfig& config) {
  config.validate();
  Policy next = greedy_policy(v, p, config.objective);
  const bool changed = next.action_of != previous.action_of;
  return {std::move(next), changed};
}

/// Policy iteration from the all-Silent policy: evaluate, improve, repeat
/// until the greedy policy stops changing. Deterministic; the fixed point is
/// optimal for the discounted objective.
inline SolveResult policy_iteration(const ModelParams& p, const SolverConfig& config) {
  p.validate();
  config.validate();
  SolveResult r;
  r.policy.action_of.assign(static_cast<std::size_t>(state_count(p)), Action::Silent);
  for (int round = 1; round <= config.max_improvement_rounds; ++round) {
    r.value = evaluate_policy(r.policy, p, config);
    r.residual = detail::policy_residual(r.value.value_of, r.policy.action_of,
                                         detail::SweepModel(p, config.objective));
    auto [next, changed] = improve_policy(r.value, r.policy, p, config);
    r.rounds = round;
    if (!changed) return r;
    r.policy = std::move(next);
  }
  std::size_t still_changing = 0;
  {
    const auto greedy = greedy_policy(r.value, p, config.objective);
    for (std::size_t i = 0; i < greedy.action_of.size(); ++i)
      if (greedy.action_of[i] != r.policy.action_of[i]) ++still_changing;
  }
  throw SolverError("policy_iteration: policy still changing after " +
                        std::to_string(config.max_improvement_rounds) + " rounds (" +
                        std::to_string(still_changing) + " states unsettled, residual " +
                        std::to_string(r.residual) + ")",
                    r.residual, config.max_improvement_rounds);
}

/// Jacobi value iteration to the Bellman-optimality fixed point, within
/// eval_tolerance in sup norm. Kept as an independent cross-check for
/// policy_iteration.
inline ValueFunction value_iteration(const ModelParams& p, const SolverConfig& config) {
  p.validate();
  config.validate();
  const detail::SweepModel m(p, config.objective);
  const double stop = config.eval_tolerance * (1.0 - p.discount);
  const auto n = static_cast<std::size_t>(state_count(p));
  ValueFunction v;
  v.value_of.assign(n, 0.0);
  std::vector<double> next(n, 0.0);
  double change = 0.0;
  for (long sweep = 1; sweep <= config.max_eval_sweeps; ++sweep) {
    change = 0.0;
    std::int64_t i = 0;
    for (int age = 1; age <= m.max_age; ++age) {
      const int grown = age < m.max_age ? age + 1 : m.max_age;
      const std::int64_t grown_row = static_cast<std::int64_t>(grown - 1) * m.stride_age;
      for (int sigma = 0; sigma < m.tq; ++sigma) {
        const int sigma_next = sigma >= 1 ? sigma - 1 : m.tq - 1;
        const std::int64_t g_base = grown_row + sigma_next * m.stride_sigma;
        const std::int64_t r_base = sigma_next * m.stride_sigma;
        const double c_grown = m.cost(grown, sigma_next);
        const double c_reset = m.cost(1, sigma_next);
        for (int b = 0; b <= m.cap; ++b, ++i) {
          double best = m.backup_silent(v.value_of, g_base, c_grown, b);
          if (b >= 1) {
            const double q_transmit =
                m.backup_transmit(v.value_of, g_base, r_base, c_grown, c_reset, b);
            if (q_transmit < best) best = q_transmit;
          }
          const double diff = std::fabs(best - v.value_of[i]);
          if (diff > change) change = diff;
          next[i] = best;
        }
      }
    }
    v.value_of.swap(next);
    if (change <= stop) return v;
  }
  throw SolverError("value_iteration: no convergence in " +
                        std::to_string(config.max_eval_sweeps) + " sweeps (residual " +
                        std::to_string(change) + ")",
                    change, config.max_eval_sweeps);
}

}  // namespace qaoi
