#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ultradiff/ball_table.hpp"
#include "ultradiff/expm.hpp"
#include "ultradiff/prng.hpp"
#include "ultradiff/spectral.hpp"
#include "ultradiff/tree.hpp"
#include "ultradiff/vp_operator.hpp"
#include "ultradiff/wavelets.hpp"

using namespace ultradiff;
using Catch::Approx;

namespace {

TreeSpec padic(std::uint32_t p, int depth, MetricKind metric = MetricKind::Canonical) {
  TreeSpec s;
  s.family = PAdicFamily{p};
  s.depth = depth;
  s.metric.kind = metric;
  return s;
}

TreeSpec level_regular(std::vector<std::uint32_t> pattern, int depth) {
  TreeSpec s;
  s.family = LevelRegularFamily{std::move(pattern)};
  s.depth = depth;
  return s;
}

}  // namespace

TEST_CASE("pade exponential reproduces closed forms", "[expm]") {
  REQUIRE((expm(Eigen::MatrixXd::Zero(3, 3)) - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);

  Eigen::MatrixXd nil(2, 2);
  nil << 0, 1, 0, 0;
  Eigen::MatrixXd expected(2, 2);
  expected << 1, 1, 0, 1;
  REQUIRE((expm(nil) - expected).cwiseAbs().maxCoeff() < 1e-15);

  Eigen::MatrixXd diag = Eigen::Vector2d(-1.0, 2.0).asDiagonal();
  const Eigen::MatrixXd ed = expm(diag);
  REQUIRE(ed(0, 0) == Approx(std::exp(-1.0)).epsilon(1e-14));
  REQUIRE(ed(1, 1) == Approx(std::exp(2.0)).epsilon(1e-14));
  REQUIRE(std::abs(ed(0, 1)) < 1e-15);

  for (double theta : {0.01, 0.2, 0.7, 1.8, 5.0, 30.0}) {  // spans every Pade degree and the squaring path
    Eigen::MatrixXd rot(2, 2);
    rot << 0, -theta, theta, 0;
    const Eigen::MatrixXd er = expm(rot);
    REQUIRE(er(0, 0) == Approx(std::cos(theta)).margin(1e-12));
    REQUIRE(er(1, 0) == Approx(std::sin(theta)).margin(1e-12));
    REQUIRE(er(0, 1) == Approx(-std::sin(theta)).margin(1e-12));
  }

  Eigen::MatrixXd lap(2, 2);
  lap << 1, -1, -1, 1;
  const Eigen::MatrixXd p = expm((-0.35 * lap).eval());
  REQUIRE(p(0, 0) == Approx(0.5 * (1.0 + std::exp(-0.7))).epsilon(1e-14));
  REQUIRE(p(0, 1) == Approx(0.5 * (1.0 - std::exp(-0.7))).epsilon(1e-14));

  REQUIRE_THROWS_AS(expm(Eigen::MatrixXd::Zero(2, 3)), ValidationError);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Constant(2, 2, std::nan(""));
  REQUIRE_THROWS_AS(expm(bad), ValidationError);
}

TEST_CASE("two-leaf heat kernel has the textbook form", "[heat]") {
  const BallTable bt(build_tree(padic(2, 1)));
  const WaveletBasis basis(bt);
  const VPOperator op(bt, 3.0);
  const auto dec = spectral_decomposition(basis, op);
  const double t = 0.3;
  const HeatKernel h = heat_kernel(dec, t);
  REQUIRE(h.kernel(0, 0) == Approx(1.0 + std::exp(-2.0 * t)).epsilon(1e-14));
  REQUIRE(h.kernel(0, 1) == Approx(1.0 - std::exp(-2.0 * t)).epsilon(1e-14));
  REQUIRE(h.max_imag < 1e-15);
  const Eigen::MatrixXd p = transition_matrix(dec, t);
  REQUIRE(p(0, 0) == Approx(0.5 * (1.0 + std::exp(-2.0 * t))).epsilon(1e-14));
  REQUIRE((p - matrix_exponential_oracle(op, t)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("transition matrices pass the Markov battery", "[heat][markov]") {
  const BallTable bt(build_tree(level_regular({2, 3}, 3)));
  const WaveletBasis basis(bt);
  const VPOperator op(bt, 2.5);
  const auto dec = spectral_decomposition(basis, op);
  for (double t : {0.1, 1.0, 10.0}) {
    const MarkovChecks mc = markov_checks(dec, op, t);
    CAPTURE(t);
    REQUIRE(mc.row_sum_max_err < 1e-12);
    REQUIRE(mc.min_entry > -1e-12);
    REQUIRE(mc.detailed_balance_err < 1e-12);
    REQUIRE(mc.oracle_max_abs_diff < 1e-10);
    REQUIRE(mc.semigroup_residual < 1e-10);
    REQUIRE(mc.stationarity_residual < 1e-12);
  }
}

TEST_CASE("time zero is the identity and large times reach the measure", "[heat]") {
  const BallTable bt(build_tree(level_regular({2, 3}, 3)));
  const WaveletBasis basis(bt);
  const VPOperator op(bt, 2.5);
  const auto dec = spectral_decomposition(basis, op);
  const Eigen::Index n = static_cast<Eigen::Index>(bt.leaf_count());
  REQUIRE((transition_matrix(dec, 0.0) - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::MatrixXd late = transition_matrix(dec, 20.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) REQUIRE(late(i, k) == Approx(dec.mu(k)).margin(1e-12));
}

TEST_CASE("matrix-free semigroup action matches the dense route", "[heat]") {
  const BallTable bt(build_tree(level_regular({3, 2}, 4)));
  const WaveletBasis basis(bt);
  const VPOperator op(bt, 2.8);
  const auto dec = spectral_decomposition(basis, op);
  SplitMix64 rng(99);
  std::vector<double> f(bt.leaf_count());
  for (auto& v : f) v = rng.next_double() - 0.5;
  const auto fast = semigroup_apply(basis, op, 0.7, f);
  const Eigen::MatrixXd p = transition_matrix(dec, 0.7);
  Eigen::VectorXd fv(static_cast<Eigen::Index>(f.size()));
  for (Eigen::Index i = 0; i < fv.size(); ++i) fv(i) = f[static_cast<std::size_t>(i)];
  const Eigen::VectorXd dense = p * fv;
  for (std::size_t i = 0; i < f.size(); ++i)
    REQUIRE(fast[i] == Approx(dense(static_cast<Eigen::Index>(i))).margin(1e-12));
  REQUIRE_THROWS_AS(semigroup_apply(basis, op, -1.0, f), ValidationError);
  REQUIRE_THROWS_AS(heat_kernel(dec, -0.5), ValidationError);
}

TEST_CASE("depth-two dyadic Green kernel is exact", "[green]") {
  const BallTable bt(build_tree(padic(2, 2)));
  const WaveletBasis basis(bt);
  const VPOperator op(bt, 3.0);
  const GreenFunction g = green_function(basis, op);
  REQUIRE(g.kernel(0, 0) == Approx(7.0 / 6.0).epsilon(1e-13));
  REQUIRE(g.kernel(0, 1) == Approx(-1.0 / 6.0).margin(1e-13));
  REQUIRE(g.kernel(0, 2) == Approx(-0.5).epsilon(1e-13));
  REQUIRE(g.kernel(0, 3) == Approx(-0.5).epsilon(1e-13));
  REQUIRE((g.kernel - g.kernel.transpose()).cwiseAbs().maxCoeff() < 1e-13);
  REQUIRE(g.max_imag < 1e-14);
  REQUIRE(g.identity_residual < 1e-12);
  // Constants are annihilated: integrating any row against the measure gives zero.
  Eigen::VectorXd mu(4);
  for (Eigen::Index i = 0; i < 4; ++i) mu(i) = 0.25;
  REQUIRE((g.kernel * mu).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("green trace terms classify the untruncated kernel", "[green]") {
  const auto classify = [](double s) {
    const BallTable bt(build_tree(padic(2, 8)));
    const WaveletBasis basis(bt);
    const VPOperator op(bt, s);
    const GreenFunction g = green_function(basis, op, 1 << 9);
    return g;
  };
  const GreenFunction diverging = classify(3.0);
  REQUIRE(diverging.classification == SeriesClass::Divergent);
  REQUIRE(diverging.level_trace_terms[0] == Approx(0.5));
  REQUIRE(diverging.level_trace_terms[2] == Approx(1.0));  // 4 elements of eigenvalue 4
  REQUIRE(diverging.trace_ratios.size() == 7);

  REQUIRE(classify(1.0).classification == SeriesClass::Convergent);
  REQUIRE(classify(2.0).classification == SeriesClass::Indeterminate);
}

TEST_CASE("graph norm agrees between leaf and coefficient routes", "[sobolev]") {
  const BallTable bt(build_tree(level_regular({2, 3}, 4)));
  const WaveletBasis basis(bt);
  const VPOperator op(bt, 2.5);
  SplitMix64 rng(5);
  std::vector<double> f(bt.leaf_count());
  for (auto& v : f) v = rng.next_double() - 0.5;
  const SobolevNorm n = sobolev_norm(basis, op, f);
  REQUIRE(n.total_sq == n.l2_sq + n.grad_sq);
  REQUIRE(n.rel_gap < 1e-12);
  REQUIRE(n.total_sq >= n.l2_sq);

  const SobolevNorm flat = sobolev_norm(basis, op, std::vector<double>(bt.leaf_count(), 1.0));
  REQUIRE(flat.l2_sq == Approx(1.0).epsilon(1e-13));
  REQUIRE(flat.grad_sq < 1e-25);
  REQUIRE(flat.spectral_total_sq == Approx(1.0).epsilon(1e-13));
}
