#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

namespace qlap {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kUnitaryTol = 1e-10;
inline constexpr double kNormTol = 1e-10;

inline bool is_power_of_two(std::uint64_t x) { return x && !(x & (x - 1)); }

// Smallest q with 2^q >= x (q >= 1 when min_one is set).
int ceil_log2(std::uint64_t x, bool min_one = false);

// Largest singular value.
double spectral_norm(const CMatrix& a);
double spectral_norm(const RMatrix& a);

// Spectral norm of A - B.
double operator_norm_distance(const CMatrix& a, const CMatrix& b);

double unitarity_defect(const CMatrix& u);
bool is_unitary(const CMatrix& u, double tol = kUnitaryTol);

// Unitary whose first column is psi (a Householder reflection times a phase).
CMatrix unitary_with_first_column(const CVector& psi);

// Hermitian square root of a PSD matrix, negative eigenvalues clamped to 0.
CMatrix psd_sqrt(const CMatrix& a);

// Hermitian power of a positive-definite matrix.
CMatrix hermitian_power(const CMatrix& a, double power);

// exp(-i H t) for Hermitian H.
CMatrix hermitian_evolution(const CMatrix& h, double t);

// Kronecker product a (x) b, a acting on the more significant qubits.
CMatrix kron(const CMatrix& a, const CMatrix& b);

// Unitary dilation [[M, sqrt(I-MM*)], [sqrt(I-M*M), -M*]] of a contraction.
CMatrix unitary_dilation(const CMatrix& m);

CMatrix to_complex(const RMatrix& m);

}  // namespace qlap
