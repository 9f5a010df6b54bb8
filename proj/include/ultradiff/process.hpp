#pragma once

// Continuous-time jump process attached to the operator: from leaf x the
// process waits an exponential time with the leaf's exit rate, then jumps to
// y with probability K(x, y) mu(y) / rate.  Targets are drawn through the
// ball tree (pick the separation level, then descend by measure), so no
// quadratic table is ever materialized and a path costs O(depth) per jump.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "ultradiff/ball_table.hpp"
#include "ultradiff/errors.hpp"
#include "ultradiff/numeric.hpp"
#include "ultradiff/prng.hpp"
#include "ultradiff/vp_operator.hpp"

namespace ultradiff {

class JumpProcess {
 public:
  explicit JumpProcess(const VPOperator& op) : op_(&op), balls_(&op.balls()) {}

  double exit_rate(std::size_t x) const {
    require_state(x);
    return op_->exit_rates()[x];
  }

  // Exact distribution of the next target from x; for verification at small
  // sizes (quadratic work).
  std::vector<double> jump_distribution(std::size_t x) const {
    require_state(x);
    const std::size_t n = balls_->leaf_count();
    std::vector<double> q(n, 0.0);
    const double rate = op_->exit_rates()[x];
    for (std::size_t k = 0; k < n; ++k)
      if (k != x) q[k] = op_->kernel(x, k) * balls_->leaf_measure(k) / rate;
    return q;
  }

  // Draws the next state after leaving x.
  std::size_t sample_jump(std::size_t x, SplitMix64& rng) const {
    require_state(x);
    const int L = balls_->depth();
    // Ancestor chain of x, leaf upward.
    std::vector<std::size_t> anc(static_cast<std::size_t>(L) + 1);
    anc[static_cast<std::size_t>(L)] = x;
    for (int l = L; l > 0; --l)
      anc[static_cast<std::size_t>(l) - 1] = balls_->ball(l, anc[static_cast<std::size_t>(l)]).parent;
    // Separation level: weight K(ancestor) * (measure of ancestor minus
    // measure of the child on the chain); the weights sum to the exit rate.
    const double pick = rng.next_double() * op_->exit_rates()[x];
    int level = L - 1;
    double cum = 0.0;
    for (int l = 0; l < L; ++l) {
      const double annulus = balls_->ball(l, anc[static_cast<std::size_t>(l)]).meas -
                             balls_->ball(l + 1, anc[static_cast<std::size_t>(l) + 1]).meas;
      cum += op_->kernel_at(l, anc[static_cast<std::size_t>(l)]) * annulus;
      if (pick < cum) {
        level = l;
        break;
      }
    }
    // One child of the separation ball, excluding the chain, then a measure-
    // weighted descent to a leaf.
    std::size_t cur = pick_child(level, anc[static_cast<std::size_t>(level)],
                                 anc[static_cast<std::size_t>(level) + 1], rng);
    for (int l = level + 1; l < L; ++l) cur = pick_child(l, cur, BallRec::kNone, rng);
    return cur;
  }

  struct PathPoint {
    double time = 0.0;
    std::size_t state = 0;
  };

  // Jump chain up to the horizon; the first entry is (0, start) and the last
  // state is the position at the horizon.
  std::vector<PathPoint> sample_path(std::size_t start, double horizon, SplitMix64& rng) const {
    require_state(start);
    if (!std::isfinite(horizon) || horizon < 0.0) throw ValidationError("horizon must be finite and non-negative");
    std::vector<PathPoint> path{{0.0, start}};
    double t = 0.0;
    std::size_t x = start;
    while (true) {
      const double dt = rng.next_exponential(op_->exit_rates()[x]);
      if (t + dt > horizon) break;
      t += dt;
      x = sample_jump(x, rng);
      path.push_back({t, x});
    }
    return path;
  }

  // Final states of independent paths, one derived stream per path index, so
  // the result depends only on (seed, n_paths, start, horizon).
  std::vector<std::size_t> sample_end_states(std::size_t start, double horizon, std::uint64_t seed,
                                             std::size_t n_paths) const {
    std::vector<std::size_t> ends(n_paths);
    for (std::size_t idx = 0; idx < n_paths; ++idx) {
      SplitMix64 rng = path_stream(seed, idx);
      ends[idx] = sample_path(start, horizon, rng).back().state;
    }
    return ends;
  }

 private:
  void require_state(std::size_t x) const {
    if (x >= balls_->leaf_count())
      throw ValidationError("state " + std::to_string(x) + " is out of range, the tree has " +
                            std::to_string(balls_->leaf_count()) + " leaves");
  }

  // Measure-weighted child draw, optionally excluding one child.
  std::size_t pick_child(int level, std::size_t ball_idx, std::size_t excluded, SplitMix64& rng) const {
    const BallRec& b = balls_->ball(level, ball_idx);
    double total = b.meas;
    if (excluded != BallRec::kNone) total -= balls_->ball(level + 1, excluded).meas;
    const double pick = rng.next_double() * total;
    double cum = 0.0;
    std::size_t last = BallRec::kNone;
    for (std::uint32_t d = 0; d < b.n_children; ++d) {
      const std::size_t ci = b.first_child + d;
      if (ci == excluded) continue;
      last = ci;
      cum += balls_->ball(level + 1, ci).meas;
      if (pick < cum) return ci;
    }
    return last;  // rounding pushed the cumulative short of the total
  }

  const VPOperator* op_;
  const BallTable* balls_;
};

// Total variation distance between two distributions on the same state set.
inline double tv_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ValidationError("total variation needs equally sized distributions");
  std::vector<double> gaps(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) gaps[i] = std::abs(a[i] - b[i]);
  return 0.5 * pairwise_sum(gaps.data(), gaps.size());
}

inline std::vector<double> empirical_distribution(const std::vector<std::size_t>& states, std::size_t n_states) {
  std::vector<double> dist(n_states, 0.0);
  for (std::size_t s : states) {
    if (s >= n_states) throw ValidationError("state " + std::to_string(s) + " is out of range");
    dist[s] += 1.0;
  }
  if (!states.empty())
    for (auto& d : dist) d /= static_cast<double>(states.size());
  return dist;
}

}  // namespace ultradiff
