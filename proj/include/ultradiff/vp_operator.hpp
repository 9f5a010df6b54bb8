#pragma once

// The nonlocal difference operator on leaf functions,
//
//   (D f)(x) = sum_{y != x} K(x, y) (f(x) - f(y)) mu(y),
//
// whose jump kernel K depends on two leaves only through their deepest common
// ancestor ball w:
//
//   General          K = diam(w)^(s-3) / (mu(w) (1 - 1/n_w))
//   DiameterAligned  K = diam(w)^(s-4) / (1 - 1/n_w)
//
// The two agree exactly when diameters equal measures; the aligned form is
// rejected otherwise.  The basis elements of WaveletBasis are eigenfunctions;
// the eigenvalue of every element supported on ball w is
//
//   lambda(w) = diam(w)^(s-3) / (1 - 1/n_w) + sum over proper ancestors a of diam(a)^(s-3)
//
// (with the aligned kernel substitute diam^(s-4) mu for diam^(s-3)).  The
// constant element has eigenvalue 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ultradiff/ball_table.hpp"
#include "ultradiff/errors.hpp"
#include "ultradiff/numeric.hpp"
#include "ultradiff/wavelets.hpp"
#include "ultradiff/zeta.hpp"

namespace ultradiff {

enum class KernelForm { General, DiameterAligned };

class VPOperator {
 public:
  static constexpr std::size_t kDefaultDenseCap = 4096;

  VPOperator(const BallTable& balls, double s, KernelForm form = KernelForm::General)
      : balls_(&balls), s_(s), form_(form) {
    if (!std::isfinite(s)) throw ValidationError("spectral parameter s must be finite");
    if (form == KernelForm::DiameterAligned && !balls.aligned())
      throw ValidationError("the diameter-aligned kernel form requires diameters to equal measures");
    const int L = balls.depth();
    kernel_.resize(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) {
      const auto& lv = balls.level(l);
      auto& row = kernel_[static_cast<std::size_t>(l)];
      row.resize(lv.size());
      for (std::size_t b = 0; b < lv.size(); ++b) {
        const double hole = 1.0 - 1.0 / static_cast<double>(lv[b].n_children);
        row[b] = form == KernelForm::General ? std::pow(lv[b].diam, s - 3.0) / (lv[b].meas * hole)
                                             : std::pow(lv[b].diam, s - 4.0) / hole;
      }
    }
    rates_ = accumulate_down(measure_sums());
  }

  double s() const { return s_; }
  KernelForm form() const { return form_; }
  const BallTable& balls() const { return *balls_; }

  // Kernel value shared by all leaf pairs whose deepest common ball is the
  // given one.
  double kernel_at(int level, std::size_t ball_idx) const {
    return kernel_.at(static_cast<std::size_t>(level)).at(ball_idx);
  }

  // Kernel value for two distinct leaves.
  double kernel(std::size_t i, std::size_t k) const {
    if (i == k) throw ValidationError("the jump kernel is only defined for distinct leaves");
    const int l = balls_->join_level(i, k);
    return kernel_at(l, balls_->ancestor(i, l));
  }

  // Diagonal of the operator matrix: total jump rate out of each leaf.
  const std::vector<double>& exit_rates() const { return rates_; }

  // Applies the operator through per-ball partial sums: O(ball count) work.
  std::vector<double> apply(const std::vector<double>& f) const {
    require_size(f.size());
    const int L = balls_->depth();
    // Bottom-up sums of f mu over every ball.
    std::vector<std::vector<double>> sums(static_cast<std::size_t>(L) + 1);
    sums[static_cast<std::size_t>(L)].resize(balls_->leaf_count());
    for (std::size_t i = 0; i < balls_->leaf_count(); ++i)
      sums[static_cast<std::size_t>(L)][i] = f[i] * balls_->leaf_measure(i);
    for (int l = L - 1; l >= 0; --l) {
      const auto& lv = balls_->level(l);
      sums[static_cast<std::size_t>(l)].resize(lv.size());
      for (std::size_t b = 0; b < lv.size(); ++b) {
        double acc = 0.0;
        for (std::uint32_t d = 0; d < lv[b].n_children; ++d)
          acc += sums[static_cast<std::size_t>(l) + 1][lv[b].first_child + d];
        sums[static_cast<std::size_t>(l)][b] = acc;
      }
    }
    const std::vector<double> cross = accumulate_down(sums);
    std::vector<double> out(f.size());
    for (std::size_t x = 0; x < f.size(); ++x) out[x] = f[x] * rates_[x] - cross[x];
    return out;
  }

  // Reference quadratic-time application, summed pairwise for stability.
  std::vector<double> apply_direct(const std::vector<double>& f, std::size_t dense_cap = kDefaultDenseCap) const {
    require_size(f.size());
    require_dense(dense_cap);
    const std::size_t n = f.size();
    std::vector<double> out(n), terms;
    terms.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      terms.clear();
      for (std::size_t k = 0; k < n; ++k)
        if (k != i) terms.push_back(kernel(i, k) * (f[i] - f[k]) * balls_->leaf_measure(k));
      out[i] = pairwise_sum(terms.data(), terms.size());
    }
    return out;
  }

  // Dense matrix; row i holds -K(i,k) mu_k off the diagonal and the exit rate
  // on it, so matrix * f == apply(f).
  Eigen::MatrixXd matrix(std::size_t dense_cap = kDefaultDenseCap) const {
    require_dense(dense_cap);
    const std::size_t n = balls_->leaf_count();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    std::vector<double> terms;
    terms.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      terms.clear();
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i) continue;
        const double off = kernel(i, k) * balls_->leaf_measure(k);
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = -off;
        terms.push_back(off);
      }
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = pairwise_sum(terms.data(), terms.size());
    }
    return m;
  }

  // Independent spectrum: the matrix is self-adjoint in the measure-weighted
  // inner product, so D^{1/2} M D^{-1/2} is symmetric and a symmetric
  // eigensolver applies.  Returned ascending.
  std::vector<double> dense_spectrum(std::size_t dense_cap = kDefaultDenseCap) const {
    require_dense(dense_cap);
    const std::size_t n = balls_->leaf_count();
    Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i) continue;
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
            -kernel(i, k) * std::sqrt(balls_->leaf_measure(i) * balls_->leaf_measure(k));
      }
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = rates_[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = solver.eigenvalues()(static_cast<Eigen::Index>(i));
    return ev;
  }

  // Closed-form eigenvalue of a basis element, written with diameters only.
  double eigenvalue(const WaveletIndex& w) const {
    if (w.is_constant) return 0.0;
    const BallRec& r = balls_->ball(w.level, w.ball);
    double lam = own_term(r);
    std::size_t cur = r.parent;
    for (int l = w.level - 1; l >= 0; --l) {
      lam += ancestor_term(balls_->ball(l, cur));
      cur = balls_->ball(l, cur).parent;
    }
    return lam;
  }

  // Same eigenvalue assembled from kernel values and measures; must agree
  // with eigenvalue() to rounding.
  double eigenvalue_kernel_route(const WaveletIndex& w) const {
    if (w.is_constant) return 0.0;
    const BallRec& r = balls_->ball(w.level, w.ball);
    double lam = kernel_at(w.level, w.ball) * r.meas;
    std::size_t cur = r.parent;
    for (int l = w.level - 1; l >= 0; --l) {
      const BallRec& a = balls_->ball(l, cur);
      lam += kernel_at(l, cur) * a.meas * (1.0 - 1.0 / static_cast<double>(a.n_children));
      cur = a.parent;
    }
    return lam;
  }

  // A commonly quoted variant that drops one measure factor, keeping the
  // s-4 exponent without it: correct only up to a diameter factor except in
  // trivial cases.  Exposed so reports can show the discrepancy.
  double eigenvalue_unscaled_variant(const WaveletIndex& w) const {
    if (w.is_constant) return 0.0;
    const BallRec& r = balls_->ball(w.level, w.ball);
    double lam = std::pow(r.diam, s_ - 4.0) / (1.0 - 1.0 / static_cast<double>(r.n_children));
    std::size_t cur = r.parent;
    for (int l = w.level - 1; l >= 0; --l) {
      lam += std::pow(balls_->ball(l, cur).diam, s_ - 4.0);
      cur = balls_->ball(l, cur).parent;
    }
    return lam;
  }

  // Eigenvalues for every basis element, in basis order (index 0 is 0).
  std::vector<double> all_eigenvalues(const WaveletBasis& basis) const {
    std::vector<double> ev(basis.size());
    for (std::size_t e = 0; e < basis.size(); ++e) ev[e] = eigenvalue(basis.at(e));
    return ev;
  }

 private:
  double own_term(const BallRec& r) const {
    const double hole = 1.0 - 1.0 / static_cast<double>(r.n_children);
    return form_ == KernelForm::General ? std::pow(r.diam, s_ - 3.0) / hole
                                        : std::pow(r.diam, s_ - 4.0) * r.meas / hole;
  }
  double ancestor_term(const BallRec& a) const {
    return form_ == KernelForm::General ? std::pow(a.diam, s_ - 3.0) : std::pow(a.diam, s_ - 4.0) * a.meas;
  }

  void require_size(std::size_t got) const {
    if (got != balls_->leaf_count())
      throw ValidationError("vector has " + std::to_string(got) + " entries, the tree has " +
                            std::to_string(balls_->leaf_count()) + " leaves");
  }
  void require_dense(std::size_t dense_cap) const {
    if (balls_->leaf_count() > dense_cap)
      throw ScaleError("dense route needs " + std::to_string(balls_->leaf_count()) + " rows, cap is " +
                       std::to_string(dense_cap));
  }

  // Per-ball sums of mu, shaped like the output of the f-mu sums above.
  std::vector<std::vector<double>> measure_sums() const {
    const int L = balls_->depth();
    std::vector<std::vector<double>> sums(static_cast<std::size_t>(L) + 1);
    for (int l = 0; l <= L; ++l) {
      const auto& lv = balls_->level(l);
      auto& row = sums[static_cast<std::size_t>(l)];
      row.resize(lv.size());
      for (std::size_t b = 0; b < lv.size(); ++b) row[b] = lv[b].meas;
    }
    return sums;
  }

  // Turns per-ball sums S into per-leaf values sum over ancestor levels l of
  // K(ancestor_l) (S(ancestor_l) - S(ancestor_{l+1})) by one pass down the
  // tree; with S = mu this is the exit rate.
  std::vector<double> accumulate_down(const std::vector<std::vector<double>>& sums) const {
    const int L = balls_->depth();
    std::vector<double> acc(1, kernel_[0][0] * sums[0][0]);
    for (int l = 1; l < L; ++l) {
      const auto& lv = balls_->level(l);
      std::vector<double> next(lv.size());
      for (std::size_t b = 0; b < lv.size(); ++b) {
        const std::size_t p = lv[b].parent;
        next[b] = acc[p] + (kernel_[static_cast<std::size_t>(l)][b] - kernel_[static_cast<std::size_t>(l) - 1][p]) *
                               sums[static_cast<std::size_t>(l)][b];
      }
      acc = std::move(next);
    }
    const auto& leaves = balls_->level(L);
    std::vector<double> out(leaves.size());
    for (std::size_t x = 0; x < leaves.size(); ++x) {
      const std::size_t p = leaves[x].parent;
      out[x] = acc[p] - kernel_[static_cast<std::size_t>(L) - 1][p] * sums[static_cast<std::size_t>(L)][x];
    }
    return out;
  }

  const BallTable* balls_;
  double s_;
  KernelForm form_;
  std::vector<std::vector<double>> kernel_;  // kernel value per internal ball
  std::vector<double> rates_;                // exit rate per leaf
};

// One spectrum row per support ball (the constant gets its own row with
// level -1); elements on the same ball share one eigenvalue with
// multiplicity n_children - 1.
struct SpectrumRow {
  bool is_constant = false;
  Vertex support;
  int level = -1;
  std::uint32_t multiplicity = 1;
  double lambda = 0.0;
  double lambda_oracle = std::numeric_limits<double>::quiet_NaN();
  double abs_diff = std::numeric_limits<double>::quiet_NaN();
};

// Builds the row list in basis order and, when requested, pairs the closed
// forms with an independent dense eigensolve by sorted rank.
inline std::vector<SpectrumRow> spectrum_rows(const WaveletBasis& basis, const VPOperator& op,
                                              bool with_dense_oracle = true,
                                              std::size_t dense_cap = VPOperator::kDefaultDenseCap) {
  std::vector<SpectrumRow> rows;
  std::vector<double> per_elem(basis.size());
  for (std::size_t e = 0; e < basis.size(); ++e) {
    const WaveletIndex& w = basis.at(e);
    per_elem[e] = op.eigenvalue(w);
    if (w.is_constant) {
      SpectrumRow r;
      r.is_constant = true;
      r.lambda = 0.0;
      rows.push_back(r);
    } else if (w.j == 1) {
      SpectrumRow r;
      r.support = basis.balls().address(w.level, w.ball);
      r.level = w.level;
      r.multiplicity = basis.balls().ball(w.level, w.ball).n_children - 1;
      r.lambda = per_elem[e];
      rows.push_back(r);
    }
  }
  if (with_dense_oracle) {
    const std::vector<double> dense = op.dense_spectrum(dense_cap);
    // Rank-pair the two multisets: both sorted ascending, ties broken stably.
    std::vector<std::size_t> order(per_elem.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return per_elem[a] < per_elem[b]; });
    std::vector<double> oracle(per_elem.size()), diff(per_elem.size());
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      oracle[order[rank]] = dense[rank];
      diff[order[rank]] = std::abs(per_elem[order[rank]] - dense[rank]);
    }
    // Fold per-element pairings back onto rows: first element's oracle value,
    // worst deviation across the row's multiplicity.
    std::size_t e = 0, row = 0;
    for (; row < rows.size(); ++row) {
      rows[row].lambda_oracle = oracle[e];
      double worst = 0.0;
      for (std::uint32_t m = 0; m < rows[row].multiplicity; ++m, ++e) worst = std::max(worst, diff[e]);
      rows[row].abs_diff = worst;
    }
  }
  return rows;
}

struct LevelEigStats {
  int level = 0;
  std::size_t wavelet_count = 0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

// Trend report for the eigenvalue ladder.  The per-level maxima increase with
// depth; the growth of their increments decides whether the full (untruncated)
// operator stays bounded.  Also cross-checks the two closed-form routes and
// quotes the unscaled variant's worst deviation.
struct BoundednessReport {
  double s = 0.0;
  std::vector<LevelEigStats> levels;
  std::vector<double> increment_ratios;  // ratio of successive lambda_max increments
  SeriesClass trend = SeriesClass::Indeterminate;
  double lambda_sup = 0.0;             // largest eigenvalue on this truncation
  double spectral_gap = 0.0;           // smallest nonzero eigenvalue
  double route_max_rel_diff = 0.0;     // diameter route vs kernel route
  double variant_max_rel_diff = 0.0;   // unscaled variant vs closed form
};

inline BoundednessReport boundedness_report(const WaveletBasis& basis, const VPOperator& op) {
  BoundednessReport rep;
  rep.s = op.s();
  const int L = basis.balls().depth();
  rep.levels.assign(static_cast<std::size_t>(L), LevelEigStats{});
  for (int l = 0; l < L; ++l) {
    rep.levels[static_cast<std::size_t>(l)].level = l;
    rep.levels[static_cast<std::size_t>(l)].lambda_min = std::numeric_limits<double>::infinity();
  }
  rep.spectral_gap = std::numeric_limits<double>::infinity();
  for (std::size_t e = 1; e < basis.size(); ++e) {
    const WaveletIndex& w = basis.at(e);
    const double lam = op.eigenvalue(w);
    const double alt = op.eigenvalue_kernel_route(w);
    const double var = op.eigenvalue_unscaled_variant(w);
    rep.route_max_rel_diff = std::max(rep.route_max_rel_diff, std::abs(lam - alt) / std::max(1.0, std::abs(lam)));
    rep.variant_max_rel_diff = std::max(rep.variant_max_rel_diff, std::abs(lam - var) / std::max(1.0, std::abs(lam)));
    auto& st = rep.levels[static_cast<std::size_t>(w.level)];
    ++st.wavelet_count;
    st.lambda_min = std::min(st.lambda_min, lam);
    st.lambda_max = std::max(st.lambda_max, lam);
    rep.lambda_sup = std::max(rep.lambda_sup, lam);
    if (lam > 0.0) rep.spectral_gap = std::min(rep.spectral_gap, lam);
  }
  // Heuristic trend call on the last few increments of the per-level maxima.
  std::vector<double> inc;
  for (std::size_t l = 1; l < rep.levels.size(); ++l)
    inc.push_back(rep.levels[l].lambda_max - rep.levels[l - 1].lambda_max);
  for (std::size_t i = 1; i < inc.size(); ++i)
    rep.increment_ratios.push_back(inc[i - 1] != 0.0 ? inc[i] / inc[i - 1]
                                                     : std::numeric_limits<double>::quiet_NaN());
  const std::size_t window = std::min<std::size_t>(3, inc.size());
  if (window == 0) return rep;  // depth too small for a trend
  const double scale = std::max(1.0, rep.lambda_sup);
  bool stalled = true, shrinking = true, sustained = true;
  for (std::size_t i = inc.size() - window; i < inc.size(); ++i) {
    stalled = stalled && std::abs(inc[i]) <= 1e-12 * scale;
    sustained = sustained && inc[i] >= 1e-6 * scale;
    if (i > 0 && inc[i - 1] != 0.0)
      shrinking = shrinking && inc[i] / inc[i - 1] <= 1.0 - 1e-2;
    else if (i > 0)
      shrinking = false;
  }
  if (stalled || (shrinking && window >= 2))
    rep.trend = SeriesClass::Convergent;
  else if (sustained)
    rep.trend = SeriesClass::Divergent;
  else
    rep.trend = SeriesClass::Indeterminate;
  return rep;
}

// Conjugates the dense matrix into the basis and reports how close the result
// is to the predicted diagonal.
struct DiagonalizationReport {
  std::size_t size = 0;
  double max_offdiag = 0.0;
  double max_diag_err = 0.0;
};

inline DiagonalizationReport diagonalization_report(const WaveletBasis& basis, const VPOperator& op,
                                                    std::size_t dense_cap = VPOperator::kDefaultDenseCap) {
  const Eigen::MatrixXcd phi = basis.matrix(dense_cap);
  const Eigen::MatrixXd m = op.matrix(dense_cap);
  Eigen::VectorXd mu(phi.rows());
  for (Eigen::Index i = 0; i < mu.size(); ++i) mu(i) = basis.balls().leaf_measure(static_cast<std::size_t>(i));
  const Eigen::MatrixXcd w = phi.adjoint() * mu.asDiagonal() * (m * phi);
  const std::vector<double> lam = op.all_eigenvalues(basis);
  DiagonalizationReport rep;
  rep.size = static_cast<std::size_t>(w.rows());
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      if (r == c)
        rep.max_diag_err = std::max(rep.max_diag_err, std::abs(w(r, c) - lam[static_cast<std::size_t>(r)]));
      else
        rep.max_offdiag = std::max(rep.max_offdiag, std::abs(w(r, c)));
    }
  return rep;
}

}  // namespace ultradiff
