#include "qlap/state_prep.hpp"

#include <cmath>
#include <numbers>

#include "qlap/error.hpp"

namespace qlap {

double phi_error_bound(std::size_t n, int p, double eps_x) {
  return std::sqrt(static_cast<double>(n)) * p * p * eps_x;
}

double psi_error_bound(double a_sum, std::size_t n, int p, double max_norm, double eps_x) {
  return std::sqrt(a_sum * static_cast<double>(n)) * p * p *
         std::pow(std::max(1.0, max_norm), p) * eps_x;
}

double degree_error_bound(double lambda, double eps_d, double r) {
  return lambda * eps_d / (2.0 * std::sqrt(r));
}

int grover_iterations(double probability) {
  require(probability > 0 && probability <= 1 + 1e-12, ErrorKind::amplification,
          "amplitude amplification needs a nonzero success probability");
  const double theta = std::asin(std::sqrt(std::min(1.0, probability)));
  return static_cast<int>(std::floor(std::numbers::pi / (4.0 * theta)));
}

int diluted_grover_iterations(double probability) {
  require(probability > 0 && probability <= 1 + 1e-12, ErrorKind::amplification,
          "amplitude amplification needs a nonzero success probability");
  const double theta = std::asin(std::sqrt(std::min(1.0, probability)));
  return std::max(0, static_cast<int>(std::ceil(std::numbers::pi / (4.0 * theta) - 0.5 - 1e-12)));
}

AmplificationStats amplitude_amplification(SimState& s, const SimState::BasisPredicate& good) {
  const double total = s.norm();
  require(std::abs(total - 1.0) <= 1e-9, ErrorKind::contract,
          "amplitude amplification needs a normalised state");
  const double prob = s.weight(good);
  require(prob > 1e-14, ErrorKind::amplification,
          "good subspace has zero amplitude, amplification impossible");
  AmplificationStats st;
  st.initial_amplitude = prob;
  st.nominal_iterations = grover_iterations(prob);
  const double theta = std::asin(std::sqrt(std::min(1.0, prob)));
  const double left = std::pow(std::cos((2 * st.nominal_iterations + 1) * theta), 2);
  if (left < 1e-6) {
    st.iterations = st.nominal_iterations;
    st.residual = left;
  } else {
    // Dilute theta to pi / (4m + 2): m iterations then rotate exactly onto
    // the good subspace.
    st.iterations = diluted_grover_iterations(prob);
    st.residual = 0.0;
  }
  s.project(good);
  s.normalize();
  return st;
}

CVector perturb_unit(const CVector& v, double eps, std::mt19937_64& rng) {
  if (eps == 0.0) return v;
  require(eps > 0 && eps <= 2.0, ErrorKind::input, "perturbation size must lie in (0, 2]");
  require(v.size() >= 2, ErrorKind::input, "cannot perturb a one-dimensional state");
  std::normal_distribution<double> g;
  CVector u(v.size());
  for (;;) {
    for (Eigen::Index k = 0; k < u.size(); ++k) u(k) = g(rng);
    u -= v.dot(u) * v;
    if (u.norm() > 1e-6) break;
  }
  u.normalize();
  const double theta = 2.0 * std::asin(eps / 2.0);
  return std::cos(theta) * v + std::sin(theta) * u;
}

QramOracle::QramOracle(const VertexSet& vs, double eps_x, std::uint64_t seed)
    : vs_(&vs), eps_x_(eps_x) {
  require(eps_x >= 0, ErrorKind::input, "oracle error must be nonnegative");
  std::mt19937_64 rng(seed);
  const std::size_t m = vs.padded_dim();
  for (std::size_t i = 0; i < vs.padded_count(); ++i) {
    CVector st = CVector::Zero(m);
    if (vs.norms[i] > 0) {
      st = vs.vertex(i).cast<cplx>() / vs.norms[i];
      if (i < vs.count) st = perturb_unit(st, eps_x, rng);
    } else {
      st(0) = 1.0;
    }
    unitaries_.push_back(unitary_with_first_column(st));
    states_.push_back(std::move(st));
  }
}

CVector coefficient_amplitudes(const std::vector<double>& coeffs, double eps,
                               std::mt19937_64* rng) {
  require(!coeffs.empty(), ErrorKind::input, "no coefficients");
  double sum = 0.0;
  for (double c : coeffs) {
    require(c >= 0 && std::isfinite(c), ErrorKind::input, "coefficients must be nonnegative");
    sum += c;
  }
  require(sum > 0, ErrorKind::input, "all coefficients are zero");
  const int q = ceil_log2(coeffs.size(), true);
  CVector amp = CVector::Zero(std::size_t{1} << q);
  CVector head(coeffs.size());
  for (std::size_t k = 0; k < coeffs.size(); ++k) head(k) = std::sqrt(coeffs[k] / sum);
  if (eps > 0) {
    require(rng != nullptr, ErrorKind::contract, "perturbed coefficients need a generator");
    head = perturb_unit(head, eps, *rng);
  }
  amp.head(coeffs.size()) = head;
  return amp;
}

SimState prepare_coefficient_state(const std::vector<double>& coeffs, double eps,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const CVector amp = coefficient_amplitudes(coeffs, eps, &rng);
  const int q = ceil_log2(static_cast<std::uint64_t>(amp.size()));
  SimState s(RegisterLayout({{"coeff", q, RegisterKind::coefficient, std::nullopt}}));
  s.apply_unitary(unitary_with_first_column(amp), {"coeff"});
  return s;
}

CVector uniform_amplitudes(std::size_t active, int qubits) {
  require(active >= 1 && active <= (std::size_t{1} << qubits), ErrorKind::contract,
          "active count does not fit the register");
  CVector v = CVector::Zero(std::size_t{1} << qubits);
  v.head(active).setConstant(1.0 / std::sqrt(static_cast<double>(active)));
  return v;
}

void apply_R_U(SimState& s, const std::string& index_reg, const std::string& coeff_reg,
               const std::vector<std::string>& data_regs, const QramOracle& u) {
  const auto& lay = s.layout();
  const auto p = static_cast<std::uint64_t>(data_regs.size());
  for (const auto& d : data_regs) {
    const int sh = lay.dense_shift(d);
    const std::size_t mask = ((std::size_t{1} << lay.at(d).qubits) - 1) << sh;
    const double stray = s.weight([&](const BranchKey&, std::size_t x) { return (x & mask) != 0; });
    require(stray <= 1e-24, ErrorKind::contract, "data register " + d + " is not zeroed");
  }
  for (std::uint64_t l = 0; l < p; ++l) {
    s.apply_controlled(
        {coeff_reg, index_reg},
        [&](SimState::ControlValues v) -> std::optional<CMatrix> {
          const std::uint64_t k = v[0], i = v[1];
          if (k > p || i >= u.count() || l < p - k) return std::nullopt;
          return u.unitary(i);
        },
        {data_regs[l]});
  }
}

DistanceEstimator::DistanceEstimator(const QramOracle& data, FixedPointSpec spec,
                                     EstimatorConfig cfg)
    : spec_(spec) {
  const std::size_t n = data.data().padded_count();
  values_ = RMatrix::Zero(n, n);
  exact_ = RMatrix::Zero(n, n);
  if (cfg.mode == EstimatorMode::noisy) {
    require(cfg.eps > 0, ErrorKind::input, "distance estimation error must be positive");
    require(cfg.delta >= 0 && cfg.delta <= 0.5, ErrorKind::input, "delta must lie in [0, 1/2]");
  }
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0), coin(0.0, 1.0);
  for (std::size_t i = 0; i < data.count(); ++i)
    for (std::size_t j = 0; j < data.count(); ++j) {
      if (i == j) continue;
      const double ni = data.norm(i), nj = data.norm(j);
      const double ov = data.state(i).dot(data.state(j)).real();
      const double d2 = std::max(0.0, ni * ni + nj * nj - 2.0 * ni * nj * ov);
      exact_(i, j) = d2;
      double est = d2;
      if (cfg.mode == EstimatorMode::noisy) {
        est = d2 + cfg.eps * unif(rng);
        if (coin(rng) < 2.0 * cfg.delta) {
          est = coin(rng) * std::min(spec.max_value(), 2.0 * (d2 + cfg.eps) + 1.0);
          ++failures_;
        }
        est = std::clamp(est, 0.0, spec.max_value());
      }
      values_(i, j) = est;
    }
}

Label DistanceEstimator::label(std::size_t i, std::size_t j) const {
  return spec_.encode(values_(i, j));
}

void DistanceEstimator::compute(SimState& s, const std::string& i_reg, const std::string& j_reg,
                                const std::string& out) const {
  const auto io = s.layout().slot(out);
  const auto n = static_cast<std::uint64_t>(values_.rows());
  s.transform_labels({i_reg, j_reg}, [&](BranchKey& k, SimState::ControlValues v) {
    require(k[io] == 0, ErrorKind::contract, "distance register " + out + " is not zero");
    if (v[0] < n && v[1] < n) k[io] = label(v[0], v[1]);
  });
}

void DistanceEstimator::uncompute(SimState& s, const std::string& i_reg, const std::string& j_reg,
                                  const std::string& out) const {
  const auto io = s.layout().slot(out);
  const auto n = static_cast<std::uint64_t>(values_.rows());
  s.transform_labels({i_reg, j_reg}, [&](BranchKey& k, SimState::ControlValues v) {
    const Label want = (v[0] < n && v[1] < n) ? label(v[0], v[1]) : 0;
    require(k[io] == want, ErrorKind::contract, "uncompute of " + out + " does not match");
    k[io] = 0;
  });
}

void distance_estimation(SimState& s, const std::string& i_reg, const std::string& j_reg,
                         const std::string& out, const QramOracle& data, EstimatorConfig cfg) {
  DistanceEstimator(data, *s.layout().at(out).fixed, cfg).compute(s, i_reg, j_reg, out);
}

void InnerProductEstimator::compute(SimState& s, const std::string& row, const std::string& flag,
                                    const std::string& out) {
  const auto& lay = s.layout();
  require(lay.at(flag).qubits == 1, ErrorKind::contract, "flag register must be one qubit");
  if (cfg_.mode == EstimatorMode::noisy) {
    require(cfg_.eps > 0, ErrorKind::input, "inner product estimation error must be positive");
    require(cfg_.delta >= 0 && cfg_.delta <= 0.5, ErrorKind::input, "delta must lie in [0, 1/2]");
  }
  require(s.branch_count() == 1, ErrorKind::contract,
          "inner product estimation expects uncomputed arithmetic registers");
  const auto& v = s.branches().begin()->second;
  const std::size_t rows = std::size_t{1} << lay.at(row).qubits;
  const std::size_t fbit = std::size_t{1} << lay.dense_shift(flag);
  std::vector<cplx> dot(rows, 0.0);
  std::vector<double> n0(rows, 0.0), n1(rows, 0.0);
  for (std::size_t x = 0; x < static_cast<std::size_t>(v.size()); ++x) {
    if (x & fbit) continue;
    const auto i = lay.dense_value(x, row);
    dot[i] += std::conj(v(x)) * v(x | fbit);
    n0[i] += std::norm(v(x));
    n1[i] += std::norm(v(x | fbit));
  }
  const FixedPointSpec& spec = *lay.at(out).fixed;
  std::mt19937_64 rng(cfg_.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0), coin(0.0, 1.0);
  exact_.assign(rows, 0.0);
  values_.assign(rows, 0.0);
  labels_.assign(rows, 0);
  for (std::size_t i = 0; i < rows; ++i) {
    if (n0[i] == 0.0 || n1[i] == 0.0) continue;
    exact_[i] = dot[i].real() / std::sqrt(n0[i] * n1[i]);
    double est = exact_[i];
    if (cfg_.mode == EstimatorMode::noisy) {
      est += cfg_.eps * unif(rng);
      if (coin(rng) < 2.0 * cfg_.delta) est = coin(rng);
    }
    values_[i] = std::clamp(est, 0.0, 1.0);
    labels_[i] = spec.encode(values_[i]);
  }
  const auto io = lay.slot(out);
  s.transform_labels({row}, [&](BranchKey& k, SimState::ControlValues c) {
    require(k[io] == 0, ErrorKind::contract, "inner product register " + out + " is not zero");
    k[io] = labels_[c[0]];
  });
}

void InnerProductEstimator::uncompute(SimState& s, const std::string& row,
                                      const std::string& out) const {
  const auto io = s.layout().slot(out);
  s.transform_labels({row}, [&](BranchKey& k, SimState::ControlValues c) {
    require(k[io] == labels_[c[0]], ErrorKind::contract, "uncompute of " + out + " does not match");
    k[io] = 0;
  });
}

void inner_product_estimation(SimState& s, const std::string& row, const std::string& flag,
                              const std::string& out, EstimatorConfig cfg) {
  InnerProductEstimator(cfg).compute(s, row, flag, out);
}

namespace {

std::string reg_name(const std::string& base, int l) { return base + std::to_string(l); }

// Checks every arithmetic register is back to zero and returns the dense part.
CVector settled_dense(SimState& s, const char* what) {
  s.prune();
  require(s.branch_count() == 1, ErrorKind::contract,
          std::string(what) + ": arithmetic registers were not uncomputed");
  const auto& [key, v] = *s.branches().begin();
  for (Label l : key)
    require(l == 0, ErrorKind::contract, std::string(what) + ": arithmetic register left dirty");
  return v;
}

void finish(PreparedState& ps, const std::string& system, const char* what) {
  ps.purification = settled_dense(ps.state, what);
  ps.system_qubits = ps.state.layout().at(system).qubits;
  ps.ancilla_qubits = ps.state.layout().dense_qubits() - ps.system_qubits;
  ps.rho = partial_trace(ps.state, {system});
}

}  // namespace

PreparedState build_phi_state(const VertexSet& vs, const KernelParams& kp, const PrepOptions& opt) {
  vs.validate();
  require(vs.count >= 2, ErrorKind::input, "need at least two vertices");
  require(vs.unit_norm(1e-10), ErrorKind::contract,
          "unit-norm weight state needs unit-norm vertices; use the general-norm state");
  const int p = kp.p;
  const int qc = ceil_log2(static_cast<std::uint64_t>(p + 1), true);
  const int qi = vs.index_qubits(), qm = vs.dim_qubits();
  std::vector<Register> regs{{"coeff", qc, RegisterKind::coefficient, std::nullopt}};
  std::vector<std::string> data;
  for (int l = 0; l < p; ++l) {
    data.push_back(reg_name("data", l));
    regs.push_back({data.back(), qm, RegisterKind::index, std::nullopt});
  }
  regs.push_back({"index", qi, RegisterKind::index, std::nullopt});
  PreparedState ps{SimState(RegisterLayout(regs)), {}, {}, 0, 0, {}, {}, 0.0, 0, {}, {}};
  std::mt19937_64 rng(opt.seed);
  const QramOracle u(vs, opt.eps_x, rng());
  ps.state.apply_unitary(unitary_with_first_column(uniform_amplitudes(vs.count, qi)), {"index"});
  ps.state.apply_unitary(
      unitary_with_first_column(coefficient_amplitudes(kp.a_tilde, opt.eps_a, &rng)), {"coeff"});
  apply_R_U(ps.state, "index", "coeff", data, u);
  finish(ps, "index", "weight state");
  return ps;
}

PreparedState build_psi_state(const VertexSet& vs, const KernelParams& kp, const PrepOptions& opt) {
  vs.validate();
  require(vs.count >= 2, ErrorKind::input, "need at least two vertices");
  for (std::size_t i = 0; i < vs.count; ++i)
    require(vs.norms[i] > 0, ErrorKind::input, "general-norm weight state needs nonzero vertices");
  const int p = kp.p;
  const int B = opt.fixed_bits;
  const double maxn = vs.max_norm();
  const FixedPointSpec norm_spec = spec_for_range(maxn, B);
  const FixedPointSpec pow_spec = spec_for_range(std::pow(std::max(1.0, maxn), p), B);
  const FixedPointSpec sq_spec = spec_for_range(maxn * maxn, B);
  const FixedPointSpec exp_spec = spec_for_range(std::max(1.0, kp.lambda * maxn * maxn) + 1.0, B);
  const int order = opt.exp_order > 0 ? opt.exp_order : exp_order_for(kp.lambda * maxn * maxn, exp_spec);

  const int qc = ceil_log2(static_cast<std::uint64_t>(p + 1), true);
  const int qi = vs.index_qubits(), qm = vs.dim_qubits();
  auto arith = [&](const std::string& name, const FixedPointSpec& f) {
    return Register{name, f.bits, RegisterKind::arithmetic, f};
  };
  std::vector<Register> regs{{"flag", 1, RegisterKind::flag, std::nullopt},
                             {"coeff", qc, RegisterKind::coefficient, std::nullopt}};
  std::vector<std::string> data, norm3;
  for (int l = 0; l < p; ++l) {
    data.push_back(reg_name("data", l));
    regs.push_back({data.back(), qm, RegisterKind::index, std::nullopt});
  }
  for (int l = 0; l < p; ++l) {
    norm3.push_back(reg_name("norm3_", l));
    regs.push_back(arith(norm3.back(), norm_spec));
  }
  regs.push_back(arith("norm4a", norm_spec));
  regs.push_back(arith("norm4b", norm_spec));
  regs.push_back(arith("pow", pow_spec));
  regs.push_back(arith("sq", sq_spec));
  regs.push_back(arith("expo", exp_spec));
  regs.push_back(arith("prod", pow_spec));
  regs.push_back({"index", qi, RegisterKind::index, std::nullopt});

  PreparedState ps{SimState(RegisterLayout(regs)), {}, {}, 0, 0, {}, {}, 0.0, order, {}, {}};
  SimState& s = ps.state;
  const auto& lay = s.layout();

  // Rotation scale: the largest value the prod register can take.
  std::vector<Label> nl(vs.count);
  for (std::size_t i = 0; i < vs.count; ++i) nl[i] = norm_spec.encode(vs.norms[i]);
  double C = 0.0;
  for (std::size_t i = 0; i < vs.count; ++i) {
    const Label sq = fx_multiply(nl[i], norm_spec, nl[i], norm_spec, sq_spec);
    const Label ex = fx_exp_neg_lambda(sq, sq_spec, exp_spec, kp.lambda, order);
    Label pw = pow_spec.encode(1.0);
    for (int k = 0; k <= p; ++k) {
      if (k > 0) pw = fx_multiply(pw, pow_spec, nl[i], norm_spec, pow_spec);
      C = std::max(C, pow_spec.decode(fx_multiply(ex, exp_spec, pw, pow_spec, pow_spec)));
    }
  }
  require(C > 0, ErrorKind::range, "rotation scale is zero");
  ps.C = C;

  std::mt19937_64 rng(opt.seed);
  const QramOracle u(vs, opt.eps_x, rng());
  s.apply_unitary(unitary_with_first_column(uniform_amplitudes(vs.count, qi)), {"index"});
  s.apply_unitary(unitary_with_first_column(coefficient_amplitudes(kp.a, opt.eps_a, &rng)),
                  {"coeff"});

  std::vector<std::size_t> n3slots;
  for (const auto& r : norm3) n3slots.push_back(lay.slot(r));
  const auto s4a = lay.slot("norm4a"), s4b = lay.slot("norm4b");
  // R_O on register 3 (k copies) and the two register-4 copies; XOR form,
  // so applying it twice clears the copies.
  auto R_O = [&]() {
    s.transform_labels({"coeff", "index"}, [&](BranchKey& key, SimState::ControlValues v) {
      const std::uint64_t k = v[0], i = v[1];
      if (i >= vs.count || k > static_cast<std::uint64_t>(p)) return;
      for (std::uint64_t l = 0; l < k; ++l) key[n3slots[l]] ^= nl[i];
      key[s4a] ^= nl[i];
      key[s4b] ^= nl[i];
    });
  };

  R_O();
  qma_power(s, norm3, "coeff", "pow");
  qma_multiply(s, "norm4a", "norm4b", "sq");
  R_O();
  exp_neg_lambda_gate(s, "sq", "expo", kp.lambda, order);
  qma_multiply(s, "expo", "pow", "prod");
  controlled_rotation(s, "prod", "flag", C, RotationMode::amplitude);
  qma_multiply_uncompute(s, "expo", "pow", "prod");
  exp_neg_lambda_uncompute(s, "sq", "expo", kp.lambda, order);
  R_O();
  qma_multiply_uncompute(s, "norm4a", "norm4b", "sq");
  qma_power_uncompute(s, norm3, "coeff", "pow");
  R_O();
  settled_dense(s, "weight state");

  const auto flag_shift = lay.dense_shift("flag");
  ps.stats = amplitude_amplification(
      s, [&](const BranchKey&, std::size_t x) { return ((x >> flag_shift) & 1) == 0; });
  ps.stats.Upsilon =
      ps.stats.initial_amplitude * static_cast<double>(vs.count) * kp.a_sum * C * C;
  apply_R_U(s, "index", "coeff", data, u);
  finish(ps, "index", "weight state");
  return ps;
}

PreparedState build_degree_state(const VertexSet& vs, const KernelParams& kp,
                                 const PrepOptions& opt) {
  vs.validate();
  require(vs.count >= 2, ErrorKind::input, "need at least two vertices");
  const int B = opt.fixed_bits;
  const int qi = vs.index_qubits();
  std::mt19937_64 rng(opt.seed);
  const QramOracle u(vs, opt.eps_x, rng());

  double max_d2 = 0.0, r = INFINITY;
  for (std::size_t i = 0; i < vs.count; ++i)
    for (std::size_t j = 0; j < vs.count; ++j)
      if (i != j) {
        const double d2 = (vs.vertices.row(i) - vs.vertices.row(j)).squaredNorm();
        max_d2 = std::max(max_d2, d2);
        r = std::min(r, std::exp(-kp.lambda * d2));
      }
  require(r > 0, ErrorKind::degenerate, "minimum pair weight underflows to zero");
  const double noise = opt.distance.mode == EstimatorMode::noisy ? opt.distance.eps : 0.0;
  const FixedPointSpec dist_spec = spec_for_range(2.0 * (max_d2 + noise) + 1.0, B);
  // The Horner terms lambda x / j live in the output register too.
  const FixedPointSpec w_spec =
      spec_for_range(std::max(1.0, kp.lambda * (2.0 * (max_d2 + noise) + 1.0)) + 1.0, B);
  const FixedPointSpec ip_spec{B, 1};
  const int order =
      opt.exp_order > 0 ? opt.exp_order : exp_order_for(kp.lambda * (max_d2 + noise), w_spec);

  std::vector<Register> regs{
      {"amp", 1, RegisterKind::flag, std::nullopt},
      {"copy", qi, RegisterKind::index, std::nullopt},
      {"ctrl", 1, RegisterKind::flag, std::nullopt},
      {"col", qi, RegisterKind::index, std::nullopt},
      {"rot", 1, RegisterKind::flag, std::nullopt},
      {"dist", B, RegisterKind::arithmetic, dist_spec},
      {"weight", B, RegisterKind::arithmetic, w_spec},
      {"ip", B, RegisterKind::arithmetic, ip_spec},
      {"row", qi, RegisterKind::index, std::nullopt},
  };
  PreparedState ps{SimState(RegisterLayout(regs)), {}, {}, 0, 0, {}, {}, 0.0, order, {}, {}};
  SimState& s = ps.state;
  const auto& lay = s.layout();

  // (1) uniform pairs
  const CMatrix uni = unitary_with_first_column(uniform_amplitudes(vs.count, qi));
  s.apply_unitary(uni, {"row"});
  s.apply_unitary(uni, {"col"});
  // (2)-(3) distance and weight
  EstimatorConfig dcfg = opt.distance;
  if (dcfg.mode == EstimatorMode::noisy && dcfg.seed == 0) dcfg.seed = rng();
  const DistanceEstimator dist(u, dist_spec, dcfg);
  dist.compute(s, "row", "col", "dist");
  exp_neg_lambda_gate(s, "dist", "weight", kp.lambda, order);
  // (4) keep i != j
  ps.pair_stats = amplitude_amplification(s, [&](const BranchKey&, std::size_t x) {
    return lay.dense_value(x, "row") != lay.dense_value(x, "col");
  });
  // (5)-(6)
  CMatrix h(2, 2);
  h << 1, 1, 1, -1;
  h /= std::sqrt(2.0);
  s.apply_unitary(h, {"ctrl"});
  controlled_rotation(s, "weight", "rot", 1.0, RotationMode::amplitude, {{"ctrl", 0}});
  exp_neg_lambda_uncompute(s, "dist", "weight", kp.lambda, order);
  dist.uncompute(s, "row", "col", "dist");
  settled_dense(s, "degree state");
  // (7)
  EstimatorConfig icfg = opt.inner;
  if (icfg.mode == EstimatorMode::noisy && icfg.seed == 0) icfg.seed = rng();
  InnerProductEstimator ipe(icfg);
  ipe.compute(s, "row", "ctrl", "ip");
  ps.inner_products = ipe.values();
  ps.exact_inner_products = ipe.exact();
  // (8) R_p, then clear ip and the (ctrl, col, rot) workspace row by row.
  controlled_rotation(s, "ip", "amp", 1.0, RotationMode::sqrt_amplitude);
  ipe.uncompute(s, "row", "ip");
  const CVector v = settled_dense(s, "degree state");
  const std::size_t rows = std::size_t{1} << qi;
  const std::size_t work = std::size_t{1} << (qi + 2);
  std::vector<CVector> chi(rows, CVector::Zero(work)), chi1(rows, CVector::Zero(work));
  for (std::size_t x = 0; x < static_cast<std::size_t>(v.size()); ++x) {
    if (v(x) == cplx(0.0)) continue;
    const auto i = lay.dense_value(x, "row");
    const auto t = (lay.dense_value(x, "ctrl") << (qi + 1)) | (lay.dense_value(x, "col") << 1) |
                   lay.dense_value(x, "rot");
    (lay.dense_value(x, "amp") == 0 ? chi[i] : chi1[i])(t) += v(x);
  }
  std::vector<CMatrix> undo(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    CVector c = chi[i].norm() > 1e-12 ? chi[i] : chi1[i];
    if (c.norm() <= 1e-12) continue;
    c.normalize();
    undo[i] = unitary_with_first_column(c).adjoint();
  }
  s.apply_controlled(
      {"row"},
      [&](SimState::ControlValues cv) -> std::optional<CMatrix> {
        if (undo[cv[0]].size() == 0) return std::nullopt;
        return undo[cv[0]];
      },
      {"ctrl", "col", "rot"});
  {
    const std::size_t mask = (std::size_t{1} << lay.dense_shift("ctrl")) |
                             (((std::size_t{1} << qi) - 1) << lay.dense_shift("col")) |
                             (std::size_t{1} << lay.dense_shift("rot"));
    const double stray = s.weight([&](const BranchKey&, std::size_t x) { return (x & mask) != 0; });
    require(stray <= 1e-20, ErrorKind::contract, "degree state workspace not cleared");
  }
  // (9)
  const auto amp_shift = lay.dense_shift("amp");
  ps.stats = amplitude_amplification(
      s, [&](const BranchKey&, std::size_t x) { return ((x >> amp_shift) & 1) == 0; });
  ps.stats.p0 = ps.stats.initial_amplitude;
  ps.stats.r = r;
  const double n = static_cast<double>(vs.count);
  ps.stats.tau = n * (n - 1.0) * ps.stats.p0;
  // (10) copy the row label
  s.apply_controlled(
      {"row"},
      [&](SimState::ControlValues cv) -> std::optional<CMatrix> {
        if (cv[0] == 0) return std::nullopt;
        CMatrix x = CMatrix::Zero(rows, rows);
        for (std::size_t c = 0; c < rows; ++c) x(c ^ cv[0], c) = 1.0;
        return x;
      },
      {"copy"});
  // (11)
  finish(ps, "row", "degree state");
  return ps;
}

std::vector<CVector> vertex_branches(const PreparedState& ps, double scale) {
  const std::size_t sys = std::size_t{1} << ps.system_qubits;
  const std::size_t anc = static_cast<std::size_t>(ps.purification.size()) / sys;
  std::vector<CVector> out(sys, CVector::Zero(anc));
  for (std::size_t a = 0; a < anc; ++a)
    for (std::size_t i = 0; i < sys; ++i) out[i](a) = scale * ps.purification(a * sys + i);
  return out;
}

}  // namespace qlap
