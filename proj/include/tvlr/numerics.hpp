// Copyright 2026 The tvlr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TVLR_NUMERICS_HPP
#define TVLR_NUMERICS_HPP

// Small dense kernel: packed symmetric storage, cyclic Jacobi eigensolver,
// Pade matrix exponential and a Kronecker-form continuous Lyapunov solver.
// Sizes here are a dozen rows at most, so everything is O(n^3) and dense.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "tvlr/errors.hpp"

namespace tvlr {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatXd = Mat<double>;
using VecXd = Vec<double>;

namespace tol {
// Contract tolerances, shared by the kernels and the tests that check them.
inline constexpr double kEigResidual = 1e-10;
inline constexpr double kLyapunovResidual = 1e-10;
inline constexpr double kExpmRelative = 1e-12;
inline constexpr int kJacobiMaxSweeps = 64;
}  // namespace tol

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.derived().array().isFinite().all();
}

/// Symmetric matrix stored as its packed upper triangle, row by row:
/// (0,0) (0,1) ... (0,n-1) (1,1) ... (n-1,n-1). Symmetry is exact by
/// representation.
template <typename Scalar>
class SymMat {
 public:
  SymMat() = default;

  explicit SymMat(Eigen::Index dim) : dim_(dim), packed_(Vec<Scalar>::Zero(packed_size(dim))) {}

  SymMat(Eigen::Index dim, Vec<Scalar> packed) : dim_(dim), packed_(std::move(packed)) {
    if (packed_.size() != packed_size(dim)) {
      throw PreconditionError("SymMat: packed length does not match dimension");
    }
  }

  /// Takes the upper triangle of `m`; the strictly lower part is ignored.
  template <typename Derived>
  static SymMat from_upper(const Eigen::MatrixBase<Derived>& m) {
    if (m.rows() != m.cols()) {
      throw PreconditionError("SymMat: matrix is not square");
    }
    SymMat s(m.rows());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = i; j < m.cols(); ++j) {
        s.packed_(k++) = m(i, j);
      }
    }
    return s;
  }

  static SymMat identity(Eigen::Index dim, Scalar scale = Scalar(1)) {
    return from_upper(Mat<Scalar>::Identity(dim, dim) * scale);
  }

  static constexpr Eigen::Index packed_size(Eigen::Index dim) { return dim * (dim + 1) / 2; }

  Eigen::Index dim() const { return dim_; }

  Scalar operator()(Eigen::Index i, Eigen::Index j) const {
    if (i > j) std::swap(i, j);
    return packed_(index(i, j));
  }

  Mat<Scalar> dense() const {
    Mat<Scalar> m(dim_, dim_);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < dim_; ++i) {
      for (Eigen::Index j = i; j < dim_; ++j) {
        m(i, j) = packed_(k);
        m(j, i) = packed_(k);
        ++k;
      }
    }
    return m;
  }

  const Vec<Scalar>& packed() const { return packed_; }
  Vec<Scalar>& packed() { return packed_; }

 private:
  Eigen::Index index(Eigen::Index i, Eigen::Index j) const {
    // Row i starts after i rows of decreasing length dim, dim-1, ...
    return i * dim_ - i * (i - 1) / 2 + (j - i);
  }

  Eigen::Index dim_ = 0;
  Vec<Scalar> packed_;
};

template <typename Scalar>
struct SymEig {
  Vec<Scalar> values;   // ascending
  Mat<Scalar> vectors;  // column k pairs with values(k)
};

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
template <typename Scalar>
SymEig<Scalar> sym_eig(const SymMat<Scalar>& sym) {
  using std::abs;
  using std::sqrt;
  Mat<Scalar> a = sym.dense();
  const Eigen::Index n = a.rows();
  if (!all_finite(a)) throw NumericalError("sym_eig: non-finite input");
  Mat<Scalar> v = Mat<Scalar>::Identity(n, n);

  const Scalar scale = a.norm();
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  bool converged = n < 2 || scale == Scalar(0);
  for (int sweep = 0; !converged && sweep < tol::kJacobiMaxSweeps; ++sweep) {
    Scalar off = 0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (sqrt(off) <= eps * scale) {
      converged = true;
      break;
    }
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (abs(apq) <= std::numeric_limits<Scalar>::min()) continue;
        const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        const Scalar t = (theta >= 0 ? Scalar(1) : Scalar(-1)) /
                         (abs(theta) + sqrt(theta * theta + Scalar(1)));
        const Scalar c = Scalar(1) / sqrt(t * t + Scalar(1));
        const Scalar s = t * c;
        // a <- J^T a J with J the (p,q) plane rotation.
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p);
          const Scalar akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k);
          const Scalar aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar vkp = v(k, p);
          const Scalar vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged) throw NumericalError("sym_eig: Jacobi sweeps did not converge");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });
  SymEig<Scalar> out{Vec<Scalar>(n), Mat<Scalar>(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

template <typename Scalar>
Scalar min_eig(const SymMat<Scalar>& s) {
  return sym_eig(s).values(0);
}

template <typename Scalar>
Scalar max_eig(const SymMat<Scalar>& s) {
  return sym_eig(s).values(s.dim() - 1);
}

/// Spectral norm of a symmetric matrix, max |lambda|.
template <typename Scalar>
Scalar spectral_norm(const SymMat<Scalar>& s) {
  const auto values = sym_eig(s).values;
  return std::max(std::abs(values(0)), std::abs(values(values.size() - 1)));
}

namespace detail {

template <typename Scalar>
Mat<Scalar> pade_approximant(const Mat<Scalar>& a, int degree) {
  static constexpr std::array<double, 4> b3{120., 60., 12., 1.};
  static constexpr std::array<double, 6> b5{30240., 15120., 3360., 420., 30., 1.};
  static constexpr std::array<double, 8> b7{17297280., 8648640., 1995840., 277200.,
                                            25200.,    1512.,    56.,      1.};
  static constexpr std::array<double, 10> b9{17643225600., 8821612800., 2075673600., 302702400.,
                                             30270240.,    2162160.,    110880.,     3960.,
                                             90.,          1.};
  static constexpr std::array<double, 14> b13{
      64764752532480000., 32382376266240000., 7771770303897600., 1187353796428800.,
      129060195264000.,   10559470521600.,    670442572800.,     33522128640.,
      1323241920.,        40840800.,          960960.,           16380.,
      182.,               1.};

  const Eigen::Index n = a.rows();
  const Mat<Scalar> ident = Mat<Scalar>::Identity(n, n);
  const Mat<Scalar> a2 = a * a;
  Mat<Scalar> u;
  Mat<Scalar> v;

  auto low_degree = [&](const auto& b) {
    // Odd coefficients feed U (after a final multiply by A), even ones feed V.
    const int m = static_cast<int>(b.size()) - 1;
    Mat<Scalar> power = ident;
    Mat<Scalar> uu = Scalar(b[1]) * ident;
    Mat<Scalar> vv = Scalar(b[0]) * ident;
    for (int k = 2; k <= m; k += 2) {
      power = power * a2;
      vv += Scalar(b[k]) * power;
      uu += Scalar(b[k + 1]) * power;
    }
    u = a * uu;
    v = vv;
  };

  switch (degree) {
    case 3: low_degree(b3); break;
    case 5: low_degree(b5); break;
    case 7: low_degree(b7); break;
    case 9: low_degree(b9); break;
    default: {
      const auto& b = b13;
      const Mat<Scalar> a4 = a2 * a2;
      const Mat<Scalar> a6 = a4 * a2;
      const Mat<Scalar> inner_u = Scalar(b[13]) * a6 + Scalar(b[11]) * a4 + Scalar(b[9]) * a2;
      u = a * (a6 * inner_u + Scalar(b[7]) * a6 + Scalar(b[5]) * a4 + Scalar(b[3]) * a2 +
               Scalar(b[1]) * ident);
      const Mat<Scalar> inner_v = Scalar(b[12]) * a6 + Scalar(b[10]) * a4 + Scalar(b[8]) * a2;
      v = a6 * inner_v + Scalar(b[6]) * a6 + Scalar(b[4]) * a4 + Scalar(b[2]) * a2 +
          Scalar(b[0]) * ident;
    }
  }
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace detail

/// exp(M t) by scaling and squaring with a degree 3..13 Pade approximant.
template <typename Derived>
Mat<typename Derived::Scalar> expm(const Eigen::MatrixBase<Derived>& m,
                                   typename Derived::Scalar t = 1) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() != m.cols()) throw PreconditionError("expm: matrix is not square");
  if (!all_finite(m) || !std::isfinite(t)) throw NumericalError("expm: non-finite input");

  Mat<Scalar> a = m * t;
  const Scalar norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  static constexpr std::array<std::pair<int, double>, 4> thresholds{
      {{3, 1.495585217958292e-2}, {5, 2.539398330063230e-1},
       {7, 9.504178996162932e-1}, {9, 2.097847961257068e0}}};
  for (const auto& [degree, theta] : thresholds) {
    if (norm1 <= theta) return detail::pade_approximant<Scalar>(a, degree);
  }
  constexpr double theta13 = 5.371920351148152;
  int squarings = 0;
  if (norm1 > theta13) {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / theta13))));
    a /= std::ldexp(Scalar(1), squarings);
  }
  Mat<Scalar> r = detail::pade_approximant<Scalar>(a, 13);
  for (int k = 0; k < squarings; ++k) r = r * r;
  return r;
}

/// Certificate for a Hurwitz A_m: P solving A_m^T P + P A_m + Q = 0.
template <typename Scalar>
struct LyapunovCert {
  SymMat<Scalar> P;
  SymMat<Scalar> Q;
  Scalar q0 = 0;     // min eig Q
  Scalar p_min = 0;  // min eig P
  Scalar p_max = 0;  // max eig P
};

/// Solves A_m^T P + P A_m = -Q through the Kronecker system
/// (I (x) A_m^T + A_m^T (x) I) vec(P) = -vec(Q).
template <typename Derived, typename Scalar = typename Derived::Scalar>
LyapunovCert<Scalar> solve_lyapunov(const Eigen::MatrixBase<Derived>& am, const SymMat<Scalar>& q) {
  const Eigen::Index n = am.rows();
  if (am.cols() != n || q.dim() != n) {
    throw PreconditionError("solve_lyapunov: dimension mismatch");
  }
  if (!all_finite(am) || !all_finite(q.packed())) {
    throw NumericalError("solve_lyapunov: non-finite input");
  }
  const Mat<Scalar> at = am.transpose();
  Mat<Scalar> kron = Mat<Scalar>::Zero(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    kron.block(i * n, i * n, n, n) += at;
    for (Eigen::Index j = 0; j < n; ++j) {
      kron.block(i * n, j * n, n, n).diagonal().array() += at(i, j);
    }
  }
  const Mat<Scalar> qd = q.dense();
  const Vec<Scalar> rhs = -Eigen::Map<const Vec<Scalar>>(qd.data(), n * n);
  const Eigen::FullPivLU<Mat<Scalar>> lu(kron);
  if (!lu.isInvertible()) {
    throw CertificateError("solve_lyapunov: singular Kronecker system, A_m is not Hurwitz");
  }
  const Vec<Scalar> vec_p = lu.solve(rhs);
  const Mat<Scalar> p_full = Eigen::Map<const Mat<Scalar>>(vec_p.data(), n, n);
  const Mat<Scalar> p_sym = (p_full + p_full.transpose()) / Scalar(2);

  const Scalar residual = (at * p_sym + p_sym * am + qd).norm() / std::max(Scalar(1), qd.norm());
  if (!(residual <= tol::kLyapunovResidual)) {
    throw CertificateError("solve_lyapunov: residual " + std::to_string(double(residual)) +
                           " exceeds tolerance");
  }

  LyapunovCert<Scalar> cert;
  cert.P = SymMat<Scalar>::from_upper(p_sym);
  cert.Q = q;
  const auto p_eig = sym_eig(cert.P);
  cert.p_min = p_eig.values(0);
  cert.p_max = p_eig.values(n - 1);
  cert.q0 = min_eig(q);
  if (!(cert.q0 > 0)) throw PreconditionError("solve_lyapunov: Q is not positive definite");
  if (!(cert.p_min > 0)) {
    throw CertificateError("solve_lyapunov: P is not positive definite, A_m is not Hurwitz");
  }
  return cert;
}

}  // namespace tvlr

#endif  // TVLR_NUMERICS_HPP
