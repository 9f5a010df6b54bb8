#pragma once

// Dense matrix exponential by Pade approximation with scaling and squaring
// (Higham 2005 degree table).  Deliberately independent of any spectral
// shortcut so it can serve as an oracle for semigroup code paths.

#include <array>
#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

#include "ultradiff/errors.hpp"

namespace ultradiff {

namespace detail {

// U = A * (odd coefficients), V = even coefficients, highest power first.
template <std::size_t N>
inline void pade_uv(const Eigen::MatrixXd& a, const std::array<double, N>& b, Eigen::MatrixXd& u,
                    Eigen::MatrixXd& v) {
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXd a2 = a * a;
  Eigen::MatrixXd odd = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd even = Eigen::MatrixXd::Zero(n, n);
  odd.diagonal().setConstant(b[1]);
  even.diagonal().setConstant(b[0]);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  for (std::size_t j = 2; j < N; j += 2) {
    power = power * a2;  // a^j
    even += b[j] * power;
    if (j + 1 < N) odd += b[j + 1] * power;
  }
  u = a * odd;
  v = even;
}

inline Eigen::MatrixXd pade13(const Eigen::MatrixXd& a) {
  static constexpr std::array<double, 14> b = {64764752532480000.0,
                                               32382376266240000.0,
                                               7771770303897600.0,
                                               1187353796428800.0,
                                               129060195264000.0,
                                               10559470521600.0,
                                               670442572800.0,
                                               33522128640.0,
                                               1323241920.0,
                                               40840800.0,
                                               960960.0,
                                               16380.0,
                                               182.0,
                                               1.0};
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXd a2 = a * a;
  const Eigen::MatrixXd a4 = a2 * a2;
  const Eigen::MatrixXd a6 = a2 * a4;
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd u =
      a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const Eigen::MatrixXd v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace detail

inline Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw ValidationError("matrix exponential needs a square matrix");
  if (!a.allFinite()) throw ValidationError("matrix exponential needs finite entries");
  const Eigen::Index n = a.rows();
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();  // 1-norm
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);

  Eigen::MatrixXd u, v;
  if (norm <= 1.495585217958292e-2) {
    detail::pade_uv(a, std::array<double, 4>{120.0, 60.0, 12.0, 1.0}, u, v);
  } else if (norm <= 2.539398330063230e-1) {
    detail::pade_uv(a, std::array<double, 6>{30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0}, u, v);
  } else if (norm <= 9.504178996162932e-1) {
    detail::pade_uv(a, std::array<double, 8>{17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0},
                    u, v);
  } else if (norm <= 2.097847961257068e0) {
    detail::pade_uv(a,
                    std::array<double, 10>{17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
                                           2162160.0, 110880.0, 3960.0, 90.0, 1.0},
                    u, v);
  } else {
    const double theta13 = 5.371920351148152e0;
    int squarings = 0;
    Eigen::MatrixXd scaled = a;
    if (norm > theta13) {
      squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
      scaled = a / std::ldexp(1.0, squarings);
    }
    Eigen::MatrixXd x = detail::pade13(scaled);
    for (int i = 0; i < squarings; ++i) x = x * x;
    return x;
  }
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace ultradiff
