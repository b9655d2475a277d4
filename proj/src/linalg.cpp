#include "qlap/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

#include "qlap/error.hpp"

namespace qlap {

const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::input: return "input error";
    case ErrorKind::contract: return "contract violation";
    case ErrorKind::overflow: return "overflow error";
    case ErrorKind::range: return "range error";
    case ErrorKind::degenerate: return "degenerate graph";
    case ErrorKind::amplification: return "amplification failure";
    case ErrorKind::resolution: return "resolution error";
    case ErrorKind::verification: return "verification failure";
    case ErrorKind::io: return "i/o error";
    case ErrorKind::config: return "config error";
  }
  return "error";
}

int ceil_log2(std::uint64_t x, bool min_one) {
  int q = 0;
  while ((std::uint64_t{1} << q) < x) ++q;
  if (min_one && q == 0) q = 1;
  return q;
}

double spectral_norm(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(a);
  return svd.singularValues()(0);
}

double spectral_norm(const RMatrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<RMatrix> svd(a);
  return svd.singularValues()(0);
}

double operator_norm_distance(const CMatrix& a, const CMatrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::contract,
          "operator_norm_distance: dimension mismatch");
  return spectral_norm(CMatrix(a - b));
}

double unitarity_defect(const CMatrix& u) {
  if (u.rows() != u.cols()) return INFINITY;
  CMatrix g = u.adjoint() * u;
  g -= CMatrix::Identity(u.rows(), u.cols());
  return g.cwiseAbs().maxCoeff();
}

bool is_unitary(const CMatrix& u, double tol) {
  return u.rows() == u.cols() && unitarity_defect(u) <= tol;
}

CMatrix unitary_with_first_column(const CVector& psi) {
  const Eigen::Index n = psi.size();
  const double nrm = psi.norm();
  require(std::abs(nrm - 1.0) <= 1e-9, ErrorKind::contract,
          "state preparation target is not a unit vector");
  const cplx ph = std::abs(psi(0)) > 0 ? psi(0) / std::abs(psi(0)) : cplx(1.0);
  CVector v = -std::conj(ph) * psi;
  v(0) += 1.0;
  const double vv = v.squaredNorm();
  CMatrix u = CMatrix::Identity(n, n);
  if (vv > 1e-30) u -= (2.0 / vv) * v * v.adjoint();
  return ph * u;
}

CMatrix psd_sqrt(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (a + a.adjoint()));
  RVector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

CMatrix hermitian_power(const CMatrix& a, double power) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (a + a.adjoint()));
  const RVector& ev = es.eigenvalues();
  require(ev.minCoeff() > 0, ErrorKind::range,
          "hermitian_power: matrix is not positive definite");
  RVector p = ev.array().pow(power);
  return es.eigenvectors() * p.asDiagonal() * es.eigenvectors().adjoint();
}

CMatrix hermitian_evolution(const CMatrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (h + h.adjoint()));
  const RVector& ev = es.eigenvalues();
  CVector ph(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k) ph(k) = std::polar(1.0, -ev(k) * t);
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

CMatrix unitary_dilation(const CMatrix& m) {
  require(m.rows() == m.cols(), ErrorKind::contract, "dilation needs a square matrix");
  require(spectral_norm(m) <= 1.0 + 1e-12, ErrorKind::range,
          "dilation needs a contraction");
  const Eigen::Index n = m.rows();
  const CMatrix id = CMatrix::Identity(n, n);
  CMatrix u(2 * n, 2 * n);
  u.topLeftCorner(n, n) = m;
  u.topRightCorner(n, n) = psd_sqrt(id - m * m.adjoint());
  u.bottomLeftCorner(n, n) = psd_sqrt(id - m.adjoint() * m);
  u.bottomRightCorner(n, n) = -m.adjoint();
  return u;
}

CMatrix to_complex(const RMatrix& m) { return m.cast<cplx>(); }

}  // namespace qlap
