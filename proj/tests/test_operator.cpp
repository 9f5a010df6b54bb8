#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>

#include "ultradiff/ball_table.hpp"
#include "ultradiff/prng.hpp"
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

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> f(n);
  for (auto& v : f) v = rng.next_double() - 0.5;
  return f;
}

}  // namespace

TEST_CASE("kernel values depend only on the join ball", "[operator][kernel]") {
  const BallTable bt(build_tree(padic(2, 3)));
  const VPOperator op(bt, 3.0);
  REQUIRE(op.kernel(0, 4) == Approx(2.0));  // join at the root
  REQUIRE(op.kernel(0, 2) == Approx(4.0));  // join at level 1
  REQUIRE(op.kernel(0, 1) == Approx(8.0));  // join at level 2
  REQUIRE(op.kernel(0, 4) == op.kernel(3, 7));
  REQUIRE_THROWS_AS(op.kernel(2, 2), ValidationError);

  const VPOperator op4(bt, 4.0);  // diameters cancel the measures entirely
  REQUIRE(op4.kernel(0, 4) == Approx(2.0));
  REQUIRE(op4.kernel(0, 2) == Approx(2.0));
  REQUIRE(op4.kernel(0, 1) == Approx(2.0));
}

TEST_CASE("aligned kernel form matches the general one and is fenced", "[operator][kernel]") {
  const BallTable aligned(build_tree(padic(2, 3)));
  const VPOperator general(aligned, 3.3);
  const VPOperator shortcut(aligned, 3.3, KernelForm::DiameterAligned);
  for (auto [i, k] : {std::pair<std::size_t, std::size_t>{0, 1}, {0, 2}, {0, 7}})
    REQUIRE(general.kernel(i, k) == Approx(shortcut.kernel(i, k)).epsilon(1e-14));

  const BallTable baire(build_tree(padic(3, 2, MetricKind::Baire)));
  REQUIRE_THROWS_AS(VPOperator(baire, 3.0, KernelForm::DiameterAligned), ValidationError);
  const VPOperator bop(baire, 3.0);
  REQUIRE(bop.kernel(0, 3) == Approx(1.5));  // join at root: 1 / (2/3)
  REQUIRE(bop.kernel(0, 1) == Approx(4.5));  // join at level 1: 1 / ((1/3)(2/3))
}

TEST_CASE("two-leaf matrix is the classic difference form", "[operator][matrix]") {
  const BallTable bt(build_tree(padic(2, 1)));
  const VPOperator op(bt, 2.2);
  const Eigen::MatrixXd m = op.matrix();
  REQUIRE(m(0, 0) == 1.0);
  REQUIRE(m(0, 1) == -1.0);
  REQUIRE(m(1, 0) == -1.0);
  REQUIRE(m(1, 1) == 1.0);
}

TEST_CASE("depth-two dyadic spectrum at s=3 is 0,2,3,3", "[operator][spectrum]") {
  const BallTable bt(build_tree(padic(2, 2)));
  const WaveletBasis basis(bt);
  const VPOperator op(bt, 3.0);
  const auto ev = op.all_eigenvalues(basis);
  REQUIRE(ev[0] == 0.0);
  REQUIRE(ev[1] == Approx(2.0));
  REQUIRE(ev[2] == Approx(3.0));
  REQUIRE(ev[3] == Approx(3.0));
  auto dense = op.dense_spectrum();
  REQUIRE(dense[0] == Approx(0.0).margin(1e-13));
  REQUIRE(dense[1] == Approx(2.0).epsilon(1e-12));
  REQUIRE(dense[2] == Approx(3.0).epsilon(1e-12));
  REQUIRE(dense[3] == Approx(3.0).epsilon(1e-12));
}

TEST_CASE("dyadic operator at s=4 is two times the mean-centering", "[operator][spectrum]") {
  const BallTable bt(build_tree(padic(2, 3)));
  const WaveletBasis basis(bt);
  const VPOperator op(bt, 4.0);
  const auto ev = op.all_eigenvalues(basis);
  for (std::size_t e = 1; e < ev.size(); ++e) REQUIRE(ev[e] == Approx(2.0).epsilon(1e-14));
  for (double r : op.exit_rates()) REQUIRE(r == Approx(7.0 / 4.0).epsilon(1e-14));
  const VPOperator op3(bt, 3.0);
  for (double r : op3.exit_rates()) REQUIRE(r == Approx(3.0).epsilon(1e-14));
}

TEST_CASE("closed-form eigenvalues match an independent dense eigensolve", "[operator][spectrum]") {
  TreeSpec random_spec;
  random_spec.family = RandomBoundedFamily{2, 4, 3};
  random_spec.depth = 3;
  struct Case {
    TreeSpec spec;
    double s;
  };
  const Case cases[] = {{level_regular({2, 3}, 3), 2.5}, {padic(3, 2, MetricKind::Baire), 3.7}, {random_spec, 2.0}};
  for (const auto& c : cases) {
    const BallTable bt(build_tree(c.spec));
    const WaveletBasis basis(bt);
    const VPOperator op(bt, c.s);
    auto closed = op.all_eigenvalues(basis);
    std::sort(closed.begin(), closed.end());
    const auto dense = op.dense_spectrum();
    REQUIRE(closed.size() == dense.size());
    for (std::size_t i = 0; i < closed.size(); ++i)
      REQUIRE(closed[i] == Approx(dense[i]).epsilon(1e-9).margin(1e-9));
  }
}

TEST_CASE("basis columns are eigenvectors of the dense matrix", "[operator][spectrum]") {
  const BallTable bt(build_tree(level_regular({2, 3}, 3)));
  const WaveletBasis basis(bt);
  const VPOperator op(bt, 2.5);
  const Eigen::MatrixXd m = op.matrix();
  const Eigen::MatrixXcd phi = basis.matrix();
  const auto lam = op.all_eigenvalues(basis);
  for (std::size_t e = 0; e < basis.size(); ++e) {
    const Eigen::VectorXcd col = phi.col(static_cast<Eigen::Index>(e));
    const Eigen::VectorXcd residual = m * col - lam[e] * col;
    REQUIRE(residual.cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("fast apply agrees with the quadratic reference", "[operator][apply]") {
  const BallTable bt(build_tree(level_regular({2, 3}, 4)));
  const VPOperator op(bt, 2.5);
  const auto f = random_vector(bt.leaf_count(), 42);
  const auto fast = op.apply(f);
  const auto direct = op.apply_direct(f);
  const Eigen::MatrixXd m = op.matrix();
  Eigen::VectorXd fv(static_cast<Eigen::Index>(f.size()));
  for (Eigen::Index i = 0; i < fv.size(); ++i) fv(i) = f[static_cast<std::size_t>(i)];
  const Eigen::VectorXd mf = m * fv;
  for (std::size_t i = 0; i < f.size(); ++i) {
    REQUIRE(fast[i] == Approx(direct[i]).margin(1e-12));
    REQUIRE(fast[i] == Approx(mf(static_cast<Eigen::Index>(i))).margin(1e-12));
  }
}

TEST_CASE("constants are annihilated", "[operator][apply]") {
  const BallTable bt(build_tree(padic(3, 3, MetricKind::Baire)));
  const VPOperator op(bt, 3.7);
  const std::vector<double> ones(bt.leaf_count(), 1.0);
  for (double v : op.apply(ones)) REQUIRE(v == Approx(0.0).margin(1e-13));
}

TEST_CASE("fast apply reproduces the eigenvalue action on a wavelet", "[operator][apply]") {
  const BallTable bt(build_tree(level_regular({3, 2}, 4)));
  const WaveletBasis basis(bt);
  const VPOperator op(bt, 2.8);
  const std::size_t e = 7;  // a non-root element
  REQUIRE(!basis.at(e).is_constant);
  const double lam = op.eigenvalue(basis.at(e));
  std::vector<double> re(bt.leaf_count()), im(bt.leaf_count());
  for (std::size_t x = 0; x < bt.leaf_count(); ++x) {
    const auto v = basis.evaluate(e, x);
    re[x] = v.real();
    im[x] = v.imag();
  }
  const auto out_re = op.apply(re);
  const auto out_im = op.apply(im);
  for (std::size_t x = 0; x < bt.leaf_count(); ++x) {
    REQUIRE(out_re[x] == Approx(lam * re[x]).margin(1e-11));
    REQUIRE(out_im[x] == Approx(lam * im[x]).margin(1e-11));
  }
}

TEST_CASE("both closed-form routes agree and the unscaled variant does not", "[operator][routes]") {
  const BallTable baire(build_tree(padic(3, 3, MetricKind::Baire)));
  const WaveletBasis bb(baire);
  const VPOperator bop(baire, 3.7);
  const auto brep = boundedness_report(bb, bop);
  REQUIRE(brep.route_max_rel_diff < 1e-13);
  REQUIRE(brep.variant_max_rel_diff > 0.1);

  const BallTable mixed(build_tree(level_regular({2, 3}, 4)));
  const WaveletBasis mb(mixed);
  const VPOperator mop(mixed, 2.0);
  REQUIRE(boundedness_report(mb, mop).route_max_rel_diff < 1e-13);
}

TEST_CASE("eigenvalue trend classification over s", "[operator][routes]") {
  const BallTable bt(build_tree(padic(2, 6)));
  const WaveletBasis basis(bt);
  const auto trend = [&](double s) { return boundedness_report(basis, VPOperator(bt, s)).trend; };
  REQUIRE(trend(4.0) == SeriesClass::Convergent);
  REQUIRE(trend(3.5) == SeriesClass::Convergent);
  REQUIRE(trend(3.0) == SeriesClass::Divergent);
  REQUIRE(trend(2.0) == SeriesClass::Divergent);
  const auto rep = boundedness_report(basis, VPOperator(bt, 3.0));
  REQUIRE(rep.spectral_gap == Approx(2.0));
  REQUIRE(rep.lambda_sup == Approx(7.0));
  REQUIRE(rep.levels.size() == 6);
  REQUIRE(rep.levels[5].lambda_min == Approx(7.0));
  REQUIRE(rep.levels[5].wavelet_count == 32);
}

TEST_CASE("conjugating by the basis diagonalizes the matrix", "[operator][routes]") {
  const BallTable bt(build_tree(level_regular({2, 3}, 3)));
  const WaveletBasis basis(bt);
  const VPOperator op(bt, 2.0);
  const auto rep = diagonalization_report(basis, op);
  REQUIRE(rep.size == 12);
  REQUIRE(rep.max_offdiag < 1e-12);
  REQUIRE(rep.max_diag_err < 1e-12);
}

TEST_CASE("spectrum rows group elements by support ball", "[operator][rows]") {
  const BallTable bt(build_tree(padic(2, 2)));
  const WaveletBasis basis(bt);
  const VPOperator op(bt, 3.0);
  const auto rows = spectrum_rows(basis, op);
  REQUIRE(rows.size() == 4);
  REQUIRE(rows[0].is_constant);
  REQUIRE(rows[0].level == -1);
  REQUIRE(rows[0].lambda == 0.0);
  REQUIRE(rows[0].abs_diff < 1e-12);
  REQUIRE(rows[1].support == Vertex{});
  REQUIRE(rows[1].level == 0);
  REQUIRE(rows[1].multiplicity == 1);
  REQUIRE(rows[1].lambda == Approx(2.0));
  REQUIRE(rows[2].support == parse_address("0"));
  REQUIRE(rows[3].support == parse_address("1"));
  REQUIRE(rows[3].lambda == Approx(3.0));
  for (const auto& r : rows) REQUIRE(r.abs_diff < 1e-12);

  const BallTable tern(build_tree(padic(3, 1)));
  const WaveletBasis tb(tern);
  const auto trows = spectrum_rows(tb, VPOperator(tern, 3.0));
  REQUIRE(trows.size() == 2);
  REQUIRE(trows[1].multiplicity == 2);
  REQUIRE(trows[1].lambda == Approx(1.5));
  REQUIRE(trows[1].abs_diff < 1e-12);
}

TEST_CASE("operator rejects bad input sizes and oversized dense routes", "[operator][errors]") {
  const BallTable bt(build_tree(padic(2, 3)));
  const VPOperator op(bt, 3.0);
  REQUIRE_THROWS_AS(op.apply(std::vector<double>(3)), ValidationError);
  REQUIRE_THROWS_AS(op.matrix(4), ScaleError);
  REQUIRE_THROWS_AS(op.dense_spectrum(4), ScaleError);
  REQUIRE_THROWS_AS(op.apply_direct(std::vector<double>(8), 4), ScaleError);
  REQUIRE_THROWS_AS(VPOperator(bt, std::nan("")), ValidationError);
}
