#pragma once

// Orthonormal Haar-type basis attached to the tree of balls: the constant
// function together with, for every internal ball w with n children, the n-1
// complex exponentials that are constant on each child and average to zero
// over w.  Because children split their parent's measure equally, the family
// is orthonormal in the measure-weighted inner product and spans all
// functions on the bottom-level leaves.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ultradiff/ball_table.hpp"
#include "ultradiff/errors.hpp"

namespace ultradiff {

struct WaveletIndex {
  bool is_constant = false;
  int level = -1;        // level of the supporting ball; -1 for the constant
  std::size_t ball = 0;  // index of the supporting ball within its level
  std::uint32_t j = 0;   // frequency, 1 .. n_children-1; 0 for the constant
};

class WaveletBasis {
 public:
  static constexpr std::size_t kDefaultDenseCap = 4096;

  explicit WaveletBasis(const BallTable& balls) : balls_(&balls) {
    elems_.push_back(WaveletIndex{true, -1, 0, 0});
    for (int l = 0; l < balls.depth(); ++l) {
      const auto& lv = balls.level(l);
      for (std::size_t b = 0; b < lv.size(); ++b)
        for (std::uint32_t j = 1; j < lv[b].n_children; ++j)
          elems_.push_back(WaveletIndex{false, l, b, j});
    }
    if (elems_.size() != balls.leaf_count())
      throw std::logic_error("basis element count does not match leaf count");
  }

  std::size_t size() const { return elems_.size(); }
  const WaveletIndex& at(std::size_t e) const { return elems_.at(e); }
  const BallTable& balls() const { return *balls_; }

  // Value of basis element e at the given leaf.
  std::complex<double> evaluate(std::size_t e, std::size_t leaf) const {
    const WaveletIndex& w = elems_.at(e);
    if (w.is_constant) return {1.0, 0.0};
    const BallRec& r = balls_->ball(w.level, w.ball);
    if (leaf < r.leaf_lo || leaf >= r.leaf_hi) return {0.0, 0.0};
    const std::uint32_t d = balls_->digit(leaf, w.level);
    return amplitude(r) * phase(w.j, d, r.n_children);
  }

  // Coefficients <f, psi_e> in the measure-weighted inner product.
  std::vector<std::complex<double>> analyze(const std::vector<std::complex<double>>& f) const {
    require_size(f.size());
    const auto sums = ball_sums(f);
    std::vector<std::complex<double>> c(size());
    c[0] = sums[0][0];
    std::size_t e = 1;
    for (int l = 0; l < balls_->depth(); ++l) {
      const auto& lv = balls_->level(l);
      for (std::size_t b = 0; b < lv.size(); ++b) {
        const BallRec& r = lv[b];
        for (std::uint32_t j = 1; j < r.n_children; ++j, ++e) {
          std::complex<double> acc{0.0, 0.0};
          for (std::uint32_t d = 0; d < r.n_children; ++d)
            acc += std::conj(phase(j, d, r.n_children)) * sums[static_cast<std::size_t>(l) + 1][r.first_child + d];
          c[e] = amplitude(r) * acc;
        }
      }
    }
    return c;
  }

  std::vector<std::complex<double>> analyze(const std::vector<double>& f) const {
    std::vector<std::complex<double>> fc(f.begin(), f.end());
    return analyze(fc);
  }

  // Reconstructs f = sum_e c_e psi_e by accumulating down the ball tree.
  std::vector<std::complex<double>> synthesize(const std::vector<std::complex<double>>& c) const {
    require_size(c.size());
    std::vector<std::complex<double>> acc(1, c[0]);
    std::size_t e = 1;
    for (int l = 0; l < balls_->depth(); ++l) {
      const auto& lv = balls_->level(l);
      std::vector<std::complex<double>> next(balls_->level(l + 1).size());
      for (std::size_t b = 0; b < lv.size(); ++b) {
        const BallRec& r = lv[b];
        const std::size_t e0 = e;
        for (std::uint32_t d = 0; d < r.n_children; ++d) {
          std::complex<double> v = acc[b];
          for (std::uint32_t j = 1; j < r.n_children; ++j)
            v += c[e0 + j - 1] * amplitude(r) * phase(j, d, r.n_children);
          next[r.first_child + d] = v;
        }
        e += r.n_children - 1;
      }
      acc = std::move(next);
    }
    return acc;
  }

  // Dense matrix with Phi(x, e) = psi_e(leaf x).
  Eigen::MatrixXcd matrix(std::size_t dense_cap = kDefaultDenseCap) const {
    const std::size_t n = size();
    if (n > dense_cap)
      throw ScaleError("dense wavelet matrix would be " + std::to_string(n) + "x" + std::to_string(n) +
                       ", cap is " + std::to_string(dense_cap));
    Eigen::MatrixXcd phi(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    phi.setZero();
    // Column 0: the constant.
    for (std::size_t x = 0; x < n; ++x) phi(static_cast<Eigen::Index>(x), 0) = 1.0;
    for (std::size_t e = 1; e < n; ++e) {
      const WaveletIndex& w = elems_[e];
      const BallRec& r = balls_->ball(w.level, w.ball);
      for (std::uint32_t d = 0; d < r.n_children; ++d) {
        const BallRec& child = balls_->ball(w.level + 1, r.first_child + d);
        const std::complex<double> v = amplitude(r) * phase(w.j, d, r.n_children);
        for (std::size_t x = child.leaf_lo; x < child.leaf_hi; ++x)
          phi(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(e)) = v;
      }
    }
    return phi;
  }

  // Measure-weighted Gram matrix Phi^H diag(mu) Phi; identity when orthonormal.
  Eigen::MatrixXcd gram(std::size_t dense_cap = kDefaultDenseCap) const {
    const Eigen::MatrixXcd phi = matrix(dense_cap);
    Eigen::VectorXd mu(phi.rows());
    for (Eigen::Index i = 0; i < mu.size(); ++i) mu(i) = balls_->leaf_measure(static_cast<std::size_t>(i));
    return phi.adjoint() * mu.asDiagonal() * phi;
  }

 private:
  static std::complex<double> phase(std::uint32_t j, std::uint32_t d, std::uint32_t n) {
    const std::uint64_t rem = (static_cast<std::uint64_t>(j) * d) % n;
    return std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(rem) / static_cast<double>(n));
  }

  static double amplitude(const BallRec& r) { return 1.0 / std::sqrt(r.meas); }

  void require_size(std::size_t got) const {
    if (got != size())
      throw ValidationError("vector has " + std::to_string(got) + " entries, basis needs " + std::to_string(size()));
  }

  // sums[l][b] = sum over leaves x in ball b of f(x) mu(x), built bottom-up.
  std::vector<std::vector<std::complex<double>>> ball_sums(const std::vector<std::complex<double>>& f) const {
    const int L = balls_->depth();
    std::vector<std::vector<std::complex<double>>> sums(static_cast<std::size_t>(L) + 1);
    sums[static_cast<std::size_t>(L)].resize(balls_->leaf_count());
    for (std::size_t i = 0; i < balls_->leaf_count(); ++i)
      sums[static_cast<std::size_t>(L)][i] = f[i] * balls_->leaf_measure(i);
    for (int l = L - 1; l >= 0; --l) {
      const auto& lv = balls_->level(l);
      sums[static_cast<std::size_t>(l)].resize(lv.size());
      for (std::size_t b = 0; b < lv.size(); ++b) {
        std::complex<double> acc{0.0, 0.0};
        for (std::uint32_t d = 0; d < lv[b].n_children; ++d)
          acc += sums[static_cast<std::size_t>(l) + 1][lv[b].first_child + d];
        sums[static_cast<std::size_t>(l)][b] = acc;
      }
    }
    return sums;
  }

  const BallTable* balls_;
  std::vector<WaveletIndex> elems_;
};

}  // namespace ultradiff
