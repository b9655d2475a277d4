#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qlap/arithmetic.hpp"
#include "qlap/graph_model.hpp"
#include "qlap/qsim.hpp"

namespace qlap {

struct ErrorBudget {
  double eps_x = 0, eps_a = 0, eps_a_tilde = 0, eps_d = 0;
  double eps0 = 0, eps1 = 0, eps2 = 0;
  double delta1 = 0, delta2 = 0;
  double eps_y = 0, eps_l = 0, eps = 0;
};

// sqrt(n) p^2 eps_x
double phi_error_bound(std::size_t n, int p, double eps_x);
// sqrt(a n) p^2 max(1, max|x|)^p eps_x
double psi_error_bound(double a_sum, std::size_t n, int p, double max_norm, double eps_x);
// lambda eps_d / (2 sqrt r)
double degree_error_bound(double lambda, double eps_d, double r);

struct AmplificationStats {
  double initial_amplitude = 0.0;  // success probability before amplification
  int iterations = 0;              // Grover iterations actually used
  int nominal_iterations = 0;      // floor(pi / (4 theta))
  double residual = 0.0;           // bad-subspace weight left over
  double Upsilon = 0.0;
  double tau = 0.0;
  double p0 = 0.0;
  double r = 0.0;
};

// Exact amplitude amplification with known amplitude. When the nominal
// iteration count leaves residual weight >= 1e-6, the rotation angle is
// diluted so an integer count lands exactly on the good subspace. The
// state ends normalised inside the good subspace.
AmplificationStats amplitude_amplification(SimState& s, const SimState::BasisPredicate& good);
int grover_iterations(double probability);
int diluted_grover_iterations(double probability);

// Amplitude (U) and norm (O) oracles over a vertex set. U can carry an
// injected per-index error of exactly eps_x in 2-norm.
class QramOracle {
 public:
  explicit QramOracle(const VertexSet& vs, double eps_x = 0.0, std::uint64_t seed = 0);

  const VertexSet& data() const { return *vs_; }
  double eps_x() const { return eps_x_; }
  const CVector& state(std::size_t i) const { return states_[i]; }
  const CMatrix& unitary(std::size_t i) const { return unitaries_[i]; }
  double norm(std::size_t i) const { return vs_->norms[i]; }
  std::size_t count() const { return vs_->count; }

 private:
  const VertexSet* vs_;
  double eps_x_;
  std::vector<CVector> states_;
  std::vector<CMatrix> unitaries_;
};

// Unit vector at exactly distance eps from the unit vector v, random direction.
CVector perturb_unit(const CVector& v, double eps, std::mt19937_64& rng);

// sqrt(c_k / sum c), optionally pushed exactly eps away in 2-norm.
CVector coefficient_amplitudes(const std::vector<double>& coeffs, double eps,
                               std::mt19937_64* rng);
SimState prepare_coefficient_state(const std::vector<double>& coeffs, double eps = 0.0,
                                   std::uint64_t seed = 0);
// Uniform superposition over the first `active` basis states of `qubits`.
CVector uniform_amplitudes(std::size_t active, int qubits);

// For every (coefficient k, index i): U_i on the last k data blocks.
void apply_R_U(SimState& s, const std::string& index_reg, const std::string& coeff_reg,
               const std::vector<std::string>& data_regs, const QramOracle& u);

enum class EstimatorMode { exact, noisy };

struct EstimatorConfig {
  EstimatorMode mode = EstimatorMode::exact;
  double eps = 0.0;    // noise half-width
  double delta = 0.0;  // failure probability is 2 delta
  std::uint64_t seed = 0;
};

// |i>|j>|0> -> |i>|j>|est ||x_i - x_j||^2>. Estimates are drawn once per
// pair so compute and uncompute agree.
class DistanceEstimator {
 public:
  DistanceEstimator(const QramOracle& data, FixedPointSpec spec, EstimatorConfig cfg);
  double value(std::size_t i, std::size_t j) const { return values_(i, j); }
  double exact(std::size_t i, std::size_t j) const { return exact_(i, j); }
  Label label(std::size_t i, std::size_t j) const;
  std::size_t failures() const { return failures_; }
  void compute(SimState& s, const std::string& i_reg, const std::string& j_reg,
               const std::string& out) const;
  void uncompute(SimState& s, const std::string& i_reg, const std::string& j_reg,
                 const std::string& out) const;

 private:
  FixedPointSpec spec_;
  RMatrix values_, exact_;
  std::size_t failures_ = 0;
};

void distance_estimation(SimState& s, const std::string& i_reg, const std::string& j_reg,
                         const std::string& out, const QramOracle& data, EstimatorConfig cfg);

// Writes an estimate of <phi_i|psi_i> into `out` for every value i of `row`,
// where phi_i / psi_i are the flag=0 / flag=1 halves of the row-i slice.
class InnerProductEstimator {
 public:
  explicit InnerProductEstimator(EstimatorConfig cfg) : cfg_(cfg) {}
  void compute(SimState& s, const std::string& row, const std::string& flag,
               const std::string& out);
  void uncompute(SimState& s, const std::string& row, const std::string& out) const;
  const std::vector<double>& exact() const { return exact_; }
  const std::vector<double>& values() const { return values_; }

 private:
  EstimatorConfig cfg_;
  std::vector<double> exact_, values_;
  std::vector<Label> labels_;
};

void inner_product_estimation(SimState& s, const std::string& row, const std::string& flag,
                              const std::string& out, EstimatorConfig cfg);

struct PrepOptions {
  double eps_x = 0.0;  // oracle U error
  double eps_a = 0.0;  // coefficient state error
  std::uint64_t seed = 1;
  int fixed_bits = 56;
  int exp_order = 0;  // 0 picks the order from the register precision
  EstimatorConfig distance;
  EstimatorConfig inner;
};

struct PreparedState {
  SimState state;
  DensityOperator rho;
  CVector purification;  // dense amplitudes, system register last
  int ancilla_qubits = 0;
  int system_qubits = 0;
  AmplificationStats stats;
  AmplificationStats pair_stats;  // degree state, i != j amplification
  double C = 0.0;                 // rotation scale of the weight state
  int exp_order = 0;
  std::vector<double> inner_products;  // degree state, as written
  std::vector<double> exact_inner_products;
};

// Unit-norm weight state; rho = (W_p + a~ I) / (n a~).
PreparedState build_phi_state(const VertexSet& vs, const KernelParams& kp,
                              const PrepOptions& opt = {});
// General-norm weight state; rho = (W_p + E) / Upsilon.
PreparedState build_psi_state(const VertexSet& vs, const KernelParams& kp,
                              const PrepOptions& opt = {});
// Degree state; rho = D / Tr(D).
PreparedState build_degree_state(const VertexSet& vs, const KernelParams& kp,
                                 const PrepOptions& opt = {});

// Unnormalised per-vertex sums of the weight-state purification:
// sqrt(norm) * |state>, grouped by index. Used by the error-budget checks.
std::vector<CVector> vertex_branches(const PreparedState& ps, double scale);

}  // namespace qlap
