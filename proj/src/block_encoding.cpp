#include "qlap/block_encoding.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "qlap/error.hpp"

namespace qlap {

CMatrix BlockEncoding::block() const {
  require(unitary != nullptr, ErrorKind::contract, "block encoding has no unitary");
  require(unitary->qubits() == ancillas + system_qubits, ErrorKind::contract,
          "block encoding qubit count mismatch");
  return top_left_block(*unitary, ancillas);
}

CMatrix BlockEncoding::encoded() const { return alpha * block(); }

VerificationRecord verify_block_encoding(const BlockEncoding& be, const CMatrix& subject,
                                         const std::string& name) {
  require(subject.rows() == subject.cols() &&
              static_cast<std::size_t>(subject.rows()) == be.subject_dim(),
          ErrorKind::contract, "verify_block_encoding: subject dimension mismatch");
  VerificationRecord r;
  r.name = name.empty() ? be.name : name;
  r.alpha = be.alpha;
  r.ancillas = be.ancillas;
  r.claimed_epsilon = be.epsilon;
  r.measured_epsilon = operator_norm_distance(subject, be.encoded());
  r.subject_norm = spectral_norm(subject);
  r.unitarity_defect = unitarity_defect(*be.unitary);
  r.pass = r.measured_epsilon <= r.claimed_epsilon + kVerifySlack && r.unitarity_defect <= 1e-9;
  return r;
}

std::string verification_json(const VerificationRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "{\"name\":\"%s\",\"alpha\":%.17g,\"ancillas\":%d,\"claimed_epsilon\":%.17g,"
                "\"measured_epsilon\":%.17g,\"subject_norm\":%.17g,\"unitarity_defect\":%.17g,"
                "\"pass\":%s}",
                r.name.c_str(), r.alpha, r.ancillas, r.claimed_epsilon, r.measured_epsilon,
                r.subject_norm, r.unitarity_defect, r.pass ? "true" : "false");
  return buf;
}

BlockEncoding purified_density_encoding(OperatorPtr g, int a, int s, double epsilon,
                                        const std::string& name) {
  require(g != nullptr && g->qubits() == a + s && a >= 0 && s >= 1, ErrorKind::contract,
          "purification unitary does not match the register split");
  const int total = a + 2 * s;
  OperatorPtr gi = embed(g, 0, s);
  OperatorPtr v = product({gi, swap_ranges(total, a, a + s, s), adjoint(gi)});
  return BlockEncoding{v, 1.0, a + s, epsilon, s, name};
}

BlockEncoding purified_density_encoding(const PreparedState& ps, double epsilon,
                                        const std::string& name) {
  return purified_density_encoding(state_preparation_operator(ps.purification),
                                   ps.ancilla_qubits, ps.system_qubits, epsilon, name);
}

BlockEncoding encode_rho3(std::size_t active, int s) {
  const std::size_t dim = std::size_t{1} << s;
  require(active >= 1 && active <= dim, ErrorKind::contract, "rho3: active count out of range");
  CVector w = CVector::Zero(dim * dim);
  for (std::size_t i = 0; i < active; ++i) w(i * dim + i) = 1.0 / std::sqrt(double(active));
  return purified_density_encoding(state_preparation_operator(w), s, s, 0.0, "rho3");
}

double StatePreparationPair::measured_epsilon_y() const {
  double e = 0.0;
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    const double want = j < static_cast<Eigen::Index>(y.size()) ? y[j] : 0.0;
    e += std::abs(beta * std::conj(c(j)) * d(j) - want);
  }
  return e;
}

StatePreparationPair make_signed_pair(const std::vector<double>& y, double beta) {
  require(!y.empty(), ErrorKind::input, "state preparation pair needs coefficients");
  double l1 = 0.0;
  for (double v : y) {
    require(std::isfinite(v), ErrorKind::input, "non-finite LCU coefficient");
    l1 += std::abs(v);
  }
  require(l1 > 0, ErrorKind::input, "all LCU coefficients are zero");
  require(beta >= l1 * (1 - 1e-12), ErrorKind::input, "beta must be at least |y|_1");
  beta = std::max(beta, l1);
  const bool spare = beta > l1 * (1 + 1e-14);
  StatePreparationPair p;
  p.y = y;
  p.beta = beta;
  p.b = ceil_log2(y.size() + (spare ? 1 : 0), true);
  const std::size_t dim = std::size_t{1} << p.b;
  p.c = CVector::Zero(dim);
  p.d = CVector::Zero(dim);
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double m = std::sqrt(std::abs(y[j]));
    p.c(j) = m * std::sqrt(l1) / beta;
    p.d(j) = (y[j] < 0 ? -m : m) / std::sqrt(l1);
  }
  if (spare) p.c(y.size()) = std::sqrt(std::max(0.0, 1.0 - (l1 / beta) * (l1 / beta)));
  p.c.normalize();
  p.d.normalize();
  p.P_L = unitary_with_first_column(p.c);
  p.P_R = unitary_with_first_column(p.d);
  p.epsilon_y = p.measured_epsilon_y();
  return p;
}

StatePreparationPair perturb_pair(const StatePreparationPair& pair, double eps,
                                  std::mt19937_64& rng) {
  StatePreparationPair p = pair;
  p.d = perturb_unit(pair.d, eps, rng);
  p.P_R = unitary_with_first_column(p.d);
  p.epsilon_y = p.measured_epsilon_y();
  return p;
}

BlockEncoding lcu_combine(const StatePreparationPair& pair,
                          const std::vector<BlockEncoding>& encodings, const std::string& name) {
  require(!encodings.empty(), ErrorKind::contract, "lcu_combine: no encodings");
  require(encodings.size() == pair.y.size(), ErrorKind::contract,
          "lcu_combine: coefficient count does not match encoding count");
  require(pair.beta >= std::accumulate(pair.y.begin(), pair.y.end(), 0.0,
                                       [](double s, double v) { return s + std::abs(v); }) *
                           (1 - 1e-12),
          ErrorKind::input, "lcu_combine: beta below |y|_1");
  const int s = encodings.front().system_qubits;
  const double alpha = encodings.front().alpha;
  int l = 0;
  double eps_a = 0.0;
  for (const auto& e : encodings) {
    require(e.system_qubits == s, ErrorKind::contract, "lcu_combine: system sizes differ");
    require(std::abs(e.alpha - alpha) <= 1e-12 * std::max(1.0, alpha), ErrorKind::contract,
            "lcu_combine: encodings must share alpha");
    l = std::max(l, e.ancillas);
    eps_a = std::max(eps_a, e.epsilon);
  }
  std::vector<OperatorPtr> branches;
  for (const auto& e : encodings) branches.push_back(embed(e.unitary, l - e.ancillas, 0));
  const int total = pair.b + l + s;
  OperatorPtr pr = embed(dense_operator(pair.P_R), 0, l + s);
  OperatorPtr pl = embed(dense_operator(pair.P_L.adjoint()), 0, l + s);
  OperatorPtr u = product({pr, select_operator(pair.b, std::move(branches)), pl});
  require(u->qubits() == total, ErrorKind::contract, "lcu_combine: qubit count mismatch");
  return BlockEncoding{u, alpha * pair.beta, pair.b + l,
                       alpha * pair.epsilon_y + alpha * pair.beta * eps_a, s, name};
}

BlockEncoding multiply(const BlockEncoding& a, const BlockEncoding& b, const std::string& name) {
  require(a.system_qubits == b.system_qubits, ErrorKind::contract, "multiply: system sizes differ");
  const int s = a.system_qubits;
  const int total = a.ancillas + b.ancillas + s;
  std::vector<int> pos_a;
  for (int q = 0; q < a.ancillas; ++q) pos_a.push_back(q);
  for (int q = 0; q < s; ++q) pos_a.push_back(a.ancillas + b.ancillas + q);
  OperatorPtr ub = embed(b.unitary, a.ancillas, 0);
  OperatorPtr ua = on_qubits(a.unitary, total, pos_a);
  return BlockEncoding{product({ub, ua}), a.alpha * b.alpha, a.ancillas + b.ancillas,
                       a.alpha * b.epsilon + b.alpha * a.epsilon, s, name};
}

BlockEncoding dilation_encoding(const CMatrix& m, double alpha, double epsilon,
                                const std::string& name) {
  require(m.rows() == m.cols() && is_power_of_two(static_cast<std::uint64_t>(m.rows())),
          ErrorKind::contract, "dilation needs a square power-of-two matrix");
  require(spectral_norm(m) <= 1.0 + 1e-12, ErrorKind::range, "dilation needs a contraction");
  const int s = ceil_log2(static_cast<std::uint64_t>(m.rows()));
  return BlockEncoding{dense_operator(unitary_dilation(m)), alpha, 1, epsilon, s, name};
}

NormCase resolve_norm_case(const VertexSet& vs, NormCase requested) {
  if (requested != NormCase::auto_detect) return requested;
  return vs.unit_norm(1e-8) ? NormCase::unit : NormCase::general;
}

const char* norm_case_name(NormCase c) {
  switch (c) {
    case NormCase::auto_detect: return "auto";
    case NormCase::unit: return "unit";
    case NormCase::general: return "general";
  }
  return "?";
}

double estimate_trace_D(const AmplificationStats& stats, std::size_t n) {
  const double nn = static_cast<double>(n);
  return nn * (nn - 1.0) * stats.p0;
}

namespace {

CMatrix identity_on(std::size_t active, std::size_t dim) {
  CMatrix m = CMatrix::Zero(dim, dim);
  for (std::size_t i = 0; i < active; ++i) m(i, i) = 1.0;
  return m;
}

}  // namespace

EncodingComponents build_components(const VertexSet& vs, const KernelParams& kp,
                                    const EncodingOptions& opt) {
  EncodingComponents c;
  c.norm_case = resolve_norm_case(vs, opt.norm_case);
  c.active = vs.count;
  const std::size_t dim = vs.padded_count();
  const int s = vs.index_qubits();
  const double n = static_cast<double>(vs.count);
  const GraphMatrices g = build_graph(vs, kp);
  const TaylorWeights tw = build_taylor_weight_matrix(vs, kp);

  if (c.norm_case == NormCase::unit) {
    require(vs.unit_norm(1e-10), ErrorKind::input, "unit norm case requested for non-unit vertices");
    c.phi = build_phi_state(vs, kp, opt.prep);
    const double eps0 = phi_error_bound(vs.count, kp.p, std::max(opt.prep.eps_x, opt.prep.eps_a));
    c.rho0 = purified_density_encoding(*c.phi, 2.0 * eps0, "rho0");
    const double at = kp.a_tilde_sum;
    c.rho0_ref = (to_complex(build_taylor_weight_matrix_unit(vs, kp)) + at * identity_on(vs.count, dim)) /
                 (n * at);
    c.records.push_back(verify_block_encoding(*c.rho0, c.rho0_ref, "rho0"));
  }

  c.psi = build_psi_state(vs, kp, opt.prep);
  c.upsilon = c.psi->stats.Upsilon;
  const double eps1 = psi_error_bound(kp.a_sum, vs.count, kp.p, vs.max_norm(),
                                      std::max(opt.prep.eps_x, opt.prep.eps_a));
  c.rho1 = purified_density_encoding(*c.psi, 2.0 * eps1, "rho1");
  {
    RMatrix r1 = tw.off_diagonal;
    r1.diagonal() += tw.diagonal;
    c.rho1_ref = to_complex(r1) / tw.diagonal.sum();
  }
  c.records.push_back(verify_block_encoding(*c.rho1, c.rho1_ref, "rho1"));

  c.degree = build_degree_state(vs, kp, opt.prep);
  const double eps_d =
      opt.prep.distance.mode == EstimatorMode::noisy ? opt.prep.distance.eps : 0.0;
  const double eps2 = degree_error_bound(kp.lambda, eps_d, c.degree.stats.r);
  c.rho2 = purified_density_encoding(c.degree, 2.0 * eps2, "rho2");
  c.rho2_ref = to_complex(g.D) / g.trace_D;
  c.records.push_back(verify_block_encoding(c.rho2, c.rho2_ref, "rho2"));

  c.rho3 = encode_rho3(vs.count, s);
  c.rho3_ref = identity_on(vs.count, dim) / n;
  c.records.push_back(verify_block_encoding(c.rho3, c.rho3_ref, "rho3"));

  c.trace_D_classical = g.trace_D;
  c.trace_D_estimate = estimate_trace_D(c.degree.stats, vs.count);
  c.trace_D_used = opt.use_classical_trace ? c.trace_D_classical : c.trace_D_estimate;
  return c;
}

namespace {

CombinedEncoding combine(const std::vector<double>& y, double beta,
                         const std::vector<const BlockEncoding*>& parts,
                         const std::vector<const CMatrix*>& refs, const std::string& name) {
  CombinedEncoding out;
  out.pair = make_signed_pair(y, beta);
  std::vector<BlockEncoding> encs;
  out.reference = CMatrix::Zero(refs.front()->rows(), refs.front()->cols());
  for (std::size_t j = 0; j < parts.size(); ++j) {
    encs.push_back(*parts[j]);
    out.reference += y[j] * *refs[j];
    out.spec.l = std::max(out.spec.l, parts[j]->ancillas);
    out.spec.eps_l = std::max(out.spec.eps_l, parts[j]->epsilon);
  }
  out.enc = lcu_combine(out.pair, encs, name);
  out.spec.y = y;
  out.spec.beta = out.pair.beta;
  return out;
}

double l1(const std::vector<double>& y) {
  double s = 0.0;
  for (double v : y) s += std::abs(v);
  return s;
}

}  // namespace

CombinedEncoding encode_calL(const EncodingComponents& comp) {
  require(comp.rho1.has_value(), ErrorKind::contract, "encode_calL needs the weight state");
  require(comp.trace_D_used > 0, ErrorKind::degenerate, "degree trace is zero");
  const double c = comp.upsilon / comp.trace_D_used;
  const std::vector<double> y{-c, 1.0, c};
  CombinedEncoding out = combine(y, std::max(3.0, l1(y)), {&*comp.rho1, &comp.rho2, &comp.rho3},
                                 {&comp.rho1_ref, &comp.rho2_ref, &comp.rho3_ref}, "calL");
  out.spec.c = c;
  return out;
}

CombinedEncoding encode_barL_unit_norm(const EncodingComponents& comp, const KernelParams& kp) {
  require(comp.rho0.has_value(), ErrorKind::input, "unit-norm combination needs unit-norm vertices");
  require(comp.trace_D_used > 0, ErrorKind::degenerate, "degree trace is zero");
  const double n = static_cast<double>(comp.active);
  const double d = n * kp.a_tilde_sum / comp.trace_D_used;
  const double e = kp.a_tilde_sum * n / comp.trace_D_used;
  const std::vector<double> y{1.0, -d, e};
  CombinedEncoding out = combine(y, 1.0 + d + e, {&comp.rho2, &*comp.rho0, &comp.rho3},
                                 {&comp.rho2_ref, &comp.rho0_ref, &comp.rho3_ref}, "barL");
  out.spec.d_coef = d;
  out.spec.e_coef = e;
  return out;
}

CombinedEncoding encode_W_over_n(const EncodingComponents& comp, const KernelParams& kp) {
  if (comp.norm_case == NormCase::unit) {
    require(comp.rho0.has_value(), ErrorKind::contract, "unit-norm components missing rho0");
    const double at = kp.a_tilde_sum;
    const std::vector<double> y{at, -at};
    return combine(y, 2.0 * at, {&*comp.rho0, &comp.rho3}, {&comp.rho0_ref, &comp.rho3_ref},
                   "W_over_n");
  }
  require(comp.rho1.has_value(), ErrorKind::contract, "general components missing rho1");
  const double u = comp.upsilon / static_cast<double>(comp.active);
  const std::vector<double> y{u, -u};
  return combine(y, 2.0 * u, {&*comp.rho1, &comp.rho3}, {&comp.rho1_ref, &comp.rho3_ref},
                 "W_over_n");
}

SandwichEncoding sandwich_negative_power(const BlockEncoding& a, const BlockEncoding& b,
                                         NegativePowerParams params) {
  require(params.c_exp > 0 && params.c_exp <= 1, ErrorKind::input, "negative power must lie in (0, 1]");
  require(params.varsigma1 > 0 && params.varsigma1 <= 0.5, ErrorKind::input,
          "varsigma1 must lie in (0, 1/2]");
  SandwichEncoding out;
  out.a_block = a.encoded();
  const CMatrix herm = 0.5 * (out.a_block + out.a_block.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(herm);
  const RVector& ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  require(top > 0, ErrorKind::range, "negative power of a zero matrix");
  // Support: eigenvalues clearly above zero. Padding rows are exactly zero.
  double lmin = INFINITY;
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    require(ev(k) >= -1e-10, ErrorKind::range, "A is not positive semidefinite");
    if (ev(k) > 1e-10 * top) lmin = std::min(lmin, ev(k));
  }
  require(ev.maxCoeff() <= 1.0 + 1e-10, ErrorKind::range, "A exceeds the identity");
  if (params.kappa <= 0) params.kappa = std::max(2.0, std::ceil(1.0 / lmin));
  require(lmin >= 1.0 / params.kappa - 1e-12, ErrorKind::range,
          "kappa too small: I/kappa is not below A on its support");
  const double kc = std::pow(params.kappa, params.c_exp);
  params.zeta1 = params.varsigma1 / std::pow(params.kappa, 1.0 + params.c_exp);
  RVector inv = RVector::Zero(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    if (ev(k) > 1e-10 * top) inv(k) = std::pow(ev(k), -params.c_exp) / (2.0 * kc);
  const CMatrix m = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint();
  const BlockEncoding e = dilation_encoding(m, 2.0 * kc, 0.0, "A_neg_power");
  const BlockEncoding eb = multiply(e, b);
  out.enc = multiply(eb, e, "sandwich");
  out.enc.alpha = 4.0 * kc * kc * b.alpha;
  out.enc.epsilon = 4.0 * kc * b.alpha * params.varsigma1 + 4.0 * kc * kc * b.epsilon;
  out.params = params;
  return out;
}

}  // namespace qlap
