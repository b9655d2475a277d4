#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "qlap/linalg.hpp"

namespace qlap {

// Input vertices, zero-padded to power-of-two count and dimension. Rows at
// index >= count are padding and carry no weight.
struct VertexSet {
  RMatrix vertices;
  std::vector<double> norms;
  std::size_t count = 0;
  std::size_t dim = 0;

  std::size_t padded_count() const { return static_cast<std::size_t>(vertices.rows()); }
  std::size_t padded_dim() const { return static_cast<std::size_t>(vertices.cols()); }
  bool padded() const { return padded_count() != count || padded_dim() != dim; }
  int index_qubits() const { return ceil_log2(padded_count(), true); }
  int dim_qubits() const { return ceil_log2(padded_dim(), true); }
  RVector vertex(std::size_t i) const { return vertices.row(i).transpose(); }
  double max_norm() const;
  bool unit_norm(double tol = 1e-8) const;

  static VertexSet from_rows(const std::vector<std::vector<double>>& rows);
  void validate() const;
};

VertexSet read_vertices_csv(const std::string& path);
VertexSet read_vertices_json(const std::string& path);
// Dispatches on extension (.json, otherwise CSV).
VertexSet read_vertices(const std::string& path);

struct KernelParams {
  double lambda = 0.5;
  int p = 4;
  std::vector<double> a;        // (2 lambda)^k / k!
  std::vector<double> a_tilde;  // exp(-2 lambda) a_k
  double a_sum = 0.0;
  double a_tilde_sum = 0.0;

  static KernelParams make(double lambda, int p);
};

struct TaylorWeights {
  RMatrix off_diagonal;  // zero diagonal
  RVector diagonal;      // the value the series gives at i == j
};

struct GraphMatrices {
  RMatrix W, W_p, D, L, L_s, L_r;
  double trace_D = 0.0;
  std::size_t active = 0;
};

RMatrix build_weight_matrix(const VertexSet& vs, const KernelParams& kp);
TaylorWeights build_taylor_weight_matrix(const VertexSet& vs, const KernelParams& kp);
// Same truncation written with the a-tilde coefficients; unit norms only.
RMatrix build_taylor_weight_matrix_unit(const VertexSet& vs, const KernelParams& kp);

// Degree and Laplacian matrices of a weight matrix. Rows past `active` are
// padding and must be zero.
GraphMatrices build_laplacians(const RMatrix& w_like, std::size_t active);
GraphMatrices build_laplacians(const RMatrix& w_like);
// Exact weights and Laplacians plus W_p.
GraphMatrices build_graph(const VertexSet& vs, const KernelParams& kp);

struct SpectralReference {
  RVector eigenvalues;
  RMatrix eigenvectors;
  std::size_t d = 0;
};

// d smallest nonzero eigenpairs of a symmetric matrix.
SpectralReference classical_eigensolve(const RMatrix& m, std::size_t d,
                                       double zero_tol = 1e-9);
// All eigenpairs ascending, same sign convention.
SpectralReference full_eigensolve(const RMatrix& m);

struct TruncationReport {
  RMatrix measured;
  RMatrix bound;
  double max_measured = 0.0;
  double max_bound = 0.0;
  bool within = true;
};

TruncationReport truncation_error_report(const VertexSet& vs, const KernelParams& kp);

std::string graph_matrices_json(const GraphMatrices& g);

}  // namespace qlap
