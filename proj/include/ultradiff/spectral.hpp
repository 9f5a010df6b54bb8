#pragma once

// Heat semigroup, Markov transition matrices, Green function and Sobolev-type
// norms, all driven by the closed-form eigenpairs: the basis columns
// diagonalize the operator, so e^{-tD} = Phi e^{-t lambda} Phi^H diag(mu).
// A Pade matrix exponential of the assembled matrix serves as an independent
// cross-check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "ultradiff/expm.hpp"
#include "ultradiff/numeric.hpp"
#include "ultradiff/vp_operator.hpp"
#include "ultradiff/wavelets.hpp"
#include "ultradiff/zeta.hpp"

namespace ultradiff {

struct SpectralDecomposition {
  Eigen::MatrixXcd phi;    // basis columns evaluated at leaves
  Eigen::VectorXd lambda;  // closed-form eigenvalues, basis order
  Eigen::VectorXd mu;      // leaf measures
  std::size_t size() const { return static_cast<std::size_t>(lambda.size()); }
};

inline SpectralDecomposition spectral_decomposition(const WaveletBasis& basis, const VPOperator& op,
                                                    std::size_t dense_cap = VPOperator::kDefaultDenseCap) {
  SpectralDecomposition dec;
  dec.phi = basis.matrix(dense_cap);
  const auto lam = op.all_eigenvalues(basis);
  dec.lambda.resize(static_cast<Eigen::Index>(lam.size()));
  dec.mu.resize(dec.lambda.size());
  for (std::size_t e = 0; e < lam.size(); ++e) {
    dec.lambda(static_cast<Eigen::Index>(e)) = lam[e];
    dec.mu(static_cast<Eigen::Index>(e)) = basis.balls().leaf_measure(e);
  }
  return dec;
}

inline void require_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("time parameter must be finite and non-negative");
}

// Heat kernel h_t(x, y) with respect to the measure: the semigroup matrix is
// h_t followed by multiplication with diag(mu).
struct HeatKernel {
  double t = 0.0;
  Eigen::MatrixXd kernel;
  double max_imag = 0.0;  // largest imaginary residue discarded by the cast
};

inline HeatKernel heat_kernel(const SpectralDecomposition& dec, double t) {
  require_time(t);
  const Eigen::VectorXd decay = (-t * dec.lambda.array()).exp().matrix();
  const Eigen::MatrixXcd h = dec.phi * decay.asDiagonal() * dec.phi.adjoint();
  HeatKernel out;
  out.t = t;
  out.kernel = h.real();
  out.max_imag = h.imag().cwiseAbs().maxCoeff();
  return out;
}

inline Eigen::MatrixXd transition_matrix(const SpectralDecomposition& dec, double t) {
  return heat_kernel(dec, t).kernel * dec.mu.asDiagonal();
}

// Same semigroup through the Pade exponential of the assembled matrix.
inline Eigen::MatrixXd matrix_exponential_oracle(const VPOperator& op, double t,
                                                 std::size_t dense_cap = VPOperator::kDefaultDenseCap) {
  require_time(t);
  return expm((-t * op.matrix(dense_cap)).eval());
}

// Matrix-free semigroup action on a real vector.
inline std::vector<double> semigroup_apply(const WaveletBasis& basis, const VPOperator& op, double t,
                                           const std::vector<double>& f) {
  require_time(t);
  auto c = basis.analyze(f);
  for (std::size_t e = 0; e < c.size(); ++e) c[e] *= std::exp(-t * op.eigenvalue(basis.at(e)));
  const auto back = basis.synthesize(c);
  std::vector<double> out(back.size());
  for (std::size_t i = 0; i < back.size(); ++i) out[i] = back[i].real();
  return out;
}

struct MarkovChecks {
  double t = 0.0;
  double row_sum_max_err = 0.0;       // each row of P_t sums to one
  double min_entry = 0.0;             // nonnegativity of transition entries
  double detailed_balance_err = 0.0;  // mu_i P(i,k) == mu_k P(k,i)
  double oracle_max_abs_diff = 0.0;   // spectral route vs Pade exponential
  double semigroup_residual = 0.0;    // P_t P_t == P_{2t}
  double stationarity_residual = 0.0; // mu P_t == mu
};

inline MarkovChecks markov_checks(const SpectralDecomposition& dec, const VPOperator& op, double t,
                                  std::size_t dense_cap = VPOperator::kDefaultDenseCap) {
  const Eigen::MatrixXd p = transition_matrix(dec, t);
  MarkovChecks out;
  out.t = t;
  out.row_sum_max_err = (p.rowwise().sum().array() - 1.0).abs().maxCoeff();
  out.min_entry = p.minCoeff();
  const Eigen::MatrixXd flux = dec.mu.asDiagonal() * p;
  out.detailed_balance_err = (flux - flux.transpose()).cwiseAbs().maxCoeff();
  out.oracle_max_abs_diff = (p - matrix_exponential_oracle(op, t, dense_cap)).cwiseAbs().maxCoeff();
  out.semigroup_residual = (p * p - transition_matrix(dec, 2.0 * t)).cwiseAbs().maxCoeff();
  out.stationarity_residual = (p.transpose() * dec.mu - dec.mu).cwiseAbs().maxCoeff();
  return out;
}

// Green function: the inverse on the orthogonal complement of the constants,
// as a kernel g(x, y) against the measure.  Level sums of (n_w - 1)/lambda(w)
// are the per-level contributions to its trace; their growth classifies
// whether the untruncated kernel stays finite.
struct GreenFunction {
  Eigen::MatrixXd kernel;
  double max_imag = 0.0;
  std::vector<double> level_trace_terms;
  std::vector<double> trace_ratios;
  SeriesClass classification = SeriesClass::Indeterminate;
  double identity_residual = 0.0;  // M (G diag mu) == I - (constant projector)
};

inline std::vector<double> green_level_terms(const WaveletBasis& basis, const VPOperator& op) {
  std::vector<double> terms(static_cast<std::size_t>(basis.balls().depth()), 0.0);
  std::vector<std::vector<double>> parts(terms.size());
  for (std::size_t e = 1; e < basis.size(); ++e) {
    const WaveletIndex& w = basis.at(e);
    parts[static_cast<std::size_t>(w.level)].push_back(1.0 / op.eigenvalue(w));
  }
  for (std::size_t l = 0; l < terms.size(); ++l) terms[l] = pairwise_sum(parts[l].data(), parts[l].size());
  return terms;
}

inline SeriesClass classify_by_ratios(const std::vector<double>& ratios, double band = 1e-2) {
  if (ratios.empty()) return SeriesClass::Indeterminate;
  const std::size_t window = std::min<std::size_t>(3, ratios.size());
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t i = ratios.size() - window; i < ratios.size(); ++i) {
    lo = std::min(lo, ratios[i]);
    hi = std::max(hi, ratios[i]);
  }
  if (hi < 1.0 - band) return SeriesClass::Convergent;
  if (lo > 1.0 + band) return SeriesClass::Divergent;
  return SeriesClass::Indeterminate;
}

inline GreenFunction green_function(const WaveletBasis& basis, const VPOperator& op,
                                    std::size_t dense_cap = VPOperator::kDefaultDenseCap) {
  const SpectralDecomposition dec = spectral_decomposition(basis, op, dense_cap);
  const Eigen::Index n = dec.phi.rows();
  Eigen::VectorXd inverted = Eigen::VectorXd::Zero(n);
  for (Eigen::Index e = 0; e < n; ++e)
    if (dec.lambda(e) > 0.0) inverted(e) = 1.0 / dec.lambda(e);
  const Eigen::MatrixXcd g = dec.phi * inverted.asDiagonal() * dec.phi.adjoint();
  GreenFunction out;
  out.kernel = g.real();
  out.max_imag = g.imag().cwiseAbs().maxCoeff();
  out.level_trace_terms = green_level_terms(basis, op);
  for (std::size_t l = 1; l < out.level_trace_terms.size(); ++l)
    out.trace_ratios.push_back(out.level_trace_terms[l] / out.level_trace_terms[l - 1]);
  out.classification = classify_by_ratios(out.trace_ratios);
  // M (G diag mu) recovers the identity minus the rank-one projector onto
  // constants (whose rows are all mu).
  const Eigen::MatrixXd m = op.matrix(dense_cap);
  Eigen::MatrixXd target = -dec.mu.transpose().replicate(n, 1);
  target.diagonal().array() += 1.0;
  out.identity_residual = (m * (out.kernel * dec.mu.asDiagonal()) - target).cwiseAbs().maxCoeff();
  return out;
}

// Graph norm of the operator on a real vector: squared L2 mass, squared
// energy of D f, and their sum, computed once from leaf values and once from
// coefficients as sum (1 + lambda^2) |c|^2.
struct SobolevNorm {
  double l2_sq = 0.0;
  double grad_sq = 0.0;
  double total_sq = 0.0;
  double spectral_total_sq = 0.0;
  double rel_gap = 0.0;
};

inline SobolevNorm sobolev_norm(const WaveletBasis& basis, const VPOperator& op, const std::vector<double>& f) {
  SobolevNorm out;
  const auto df = op.apply(f);
  std::vector<double> l2_terms(f.size()), grad_terms(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double mu = basis.balls().leaf_measure(i);
    l2_terms[i] = f[i] * f[i] * mu;
    grad_terms[i] = df[i] * df[i] * mu;
  }
  out.l2_sq = pairwise_sum(l2_terms.data(), l2_terms.size());
  out.grad_sq = pairwise_sum(grad_terms.data(), grad_terms.size());
  out.total_sq = out.l2_sq + out.grad_sq;
  const auto c = basis.analyze(f);
  std::vector<double> spec_terms(c.size());
  for (std::size_t e = 0; e < c.size(); ++e) {
    const double lam = op.eigenvalue(basis.at(e));
    spec_terms[e] = (1.0 + lam * lam) * std::norm(c[e]);
  }
  out.spectral_total_sq = pairwise_sum(spec_terms.data(), spec_terms.size());
  out.rel_gap = std::abs(out.total_sq - out.spectral_total_sq) / std::max(1.0, std::abs(out.total_sq));
  return out;
}

}  // namespace ultradiff
