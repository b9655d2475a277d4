#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qlap/graph_model.hpp"
#include "qlap/operator.hpp"
#include "qlap/state_prep.hpp"

namespace qlap {

// U on (ancillas + system) qubits, ancillas leading; alpha * <0|U|0> ~ A.
struct BlockEncoding {
  OperatorPtr unitary;
  double alpha = 1.0;
  int ancillas = 0;
  double epsilon = 0.0;
  int system_qubits = 0;
  std::string name;

  std::size_t subject_dim() const { return std::size_t{1} << system_qubits; }
  // Top-left block (unscaled).
  CMatrix block() const;
  // alpha * block()
  CMatrix encoded() const;
};

struct VerificationRecord {
  std::string name;
  double alpha = 0.0;
  int ancillas = 0;
  double claimed_epsilon = 0.0;
  double measured_epsilon = 0.0;
  double subject_norm = 0.0;
  double unitarity_defect = 0.0;
  bool pass = false;
};

inline constexpr double kVerifySlack = 1e-9;

// Spectral distance between subject and alpha * block; pass when it is
// within the claimed epsilon (plus kVerifySlack) and U is unitary.
VerificationRecord verify_block_encoding(const BlockEncoding& be, const CMatrix& subject,
                                         const std::string& name = "");
std::string verification_json(const VerificationRecord& r);

// (G^dag (x) I)(I_a (x) SWAP)(G (x) I): a (1, a+s, 0) encoding of the reduced
// density of G|0>, whose last s qubits are the system.
BlockEncoding purified_density_encoding(OperatorPtr g, int a, int s, double epsilon = 0.0,
                                        const std::string& name = "");
BlockEncoding purified_density_encoding(const PreparedState& ps, double epsilon = 0.0,
                                        const std::string& name = "");
// I/n over the first n of 2^s basis states, purified by sum_i |i>|i>.
BlockEncoding encode_rho3(std::size_t active, int s);

struct StatePreparationPair {
  CMatrix P_L, P_R;
  CVector c, d;  // first columns
  double beta = 1.0;
  int b = 0;
  double epsilon_y = 0.0;
  std::vector<double> y;

  // sum_j |beta conj(c_j) d_j - y_j|
  double measured_epsilon_y() const;
};

// beta conj(c_j) d_j = y_j exactly, sign carried by d. A spare slot absorbs
// the normalisation slack when beta > |y|_1.
StatePreparationPair make_signed_pair(const std::vector<double>& y, double beta);
// Pushes d by eps in 2-norm and records the resulting epsilon_y.
StatePreparationPair perturb_pair(const StatePreparationPair& pair, double eps,
                                  std::mt19937_64& rng);

// (P_L^dag (x) I) SELECT (P_R (x) I). Encodings are padded with identity
// ancillas to a common count and must share alpha.
BlockEncoding lcu_combine(const StatePreparationPair& pair,
                          const std::vector<BlockEncoding>& encodings,
                          const std::string& name = "");

// Encodes A B with ancillas [a_A | a_B].
BlockEncoding multiply(const BlockEncoding& a, const BlockEncoding& b,
                       const std::string& name = "");
// One-ancilla unitary dilation of a contraction.
BlockEncoding dilation_encoding(const CMatrix& m, double alpha = 1.0, double epsilon = 0.0,
                                const std::string& name = "");

enum class NormCase { auto_detect, unit, general };
NormCase resolve_norm_case(const VertexSet& vs, NormCase requested);
const char* norm_case_name(NormCase c);

struct EncodingOptions {
  PrepOptions prep;
  NormCase norm_case = NormCase::auto_detect;
  bool use_classical_trace = false;  // verification mode: c from the exact trace
};

// Weight / degree states and their purified-density encodings, plus the
// classical references each one should reproduce.
struct EncodingComponents {
  NormCase norm_case = NormCase::general;
  std::optional<PreparedState> phi, psi;
  PreparedState degree;
  std::optional<BlockEncoding> rho0, rho1;
  BlockEncoding rho2, rho3;
  CMatrix rho0_ref, rho1_ref, rho2_ref, rho3_ref;
  double trace_D_estimate = 0.0;
  double trace_D_classical = 0.0;
  double trace_D_used = 0.0;
  double upsilon = 0.0;
  std::size_t active = 0;
  std::vector<VerificationRecord> records;
};

EncodingComponents build_components(const VertexSet& vs, const KernelParams& kp,
                                    const EncodingOptions& opt = {});

// n (n - 1) p0
double estimate_trace_D(const AmplificationStats& stats, std::size_t n);

struct CombinationSpec {
  double c = 0.0;       // weight-state coefficient
  double d_coef = 0.0;  // unit-norm path
  double e_coef = 0.0;
  int l = 0;            // common ancilla count
  double eps_l = 0.0;
  std::vector<double> y;
  double beta = 0.0;
};

struct CombinedEncoding {
  BlockEncoding enc;
  CombinationSpec spec;
  StatePreparationPair pair;
  CMatrix reference;  // what the combination encodes given exact components
};

// L / Tr(L) = -c rho1 + rho2 + c rho3 with c = Upsilon / Tr(D).
CombinedEncoding encode_calL(const EncodingComponents& comp);
// rho2 - d rho0 + e rho3, d = n a~ / Tr(D), e = a~ n / Tr(D).
CombinedEncoding encode_barL_unit_norm(const EncodingComponents& comp, const KernelParams& kp);
// Unit norms: a~ (rho0 - rho3). General: (Upsilon/n)(rho1 - rho3).
CombinedEncoding encode_W_over_n(const EncodingComponents& comp, const KernelParams& kp);

struct NegativePowerParams {
  double c_exp = 0.5;
  double kappa = 0.0;        // 0: max(2, ceil(1 / lambda_min))
  double varsigma1 = 1e-3;
  double zeta1 = 0.0;        // filled in: varsigma1 / kappa^(1+c), constant 1
};

struct SandwichEncoding {
  BlockEncoding enc;
  NegativePowerParams params;
  CMatrix a_block;  // encoded A, used again for eigenvector recovery
};

// Encodes A^-c B A^-c with A^-c realised by an idealised dilation oracle
// on the support of A. alpha = 4 kappa^(2c) alpha_B.
SandwichEncoding sandwich_negative_power(const BlockEncoding& a, const BlockEncoding& b,
                                         NegativePowerParams params);

}  // namespace qlap
