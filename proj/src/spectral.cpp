#include "qlap/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "qlap/error.hpp"

namespace qlap {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

CMatrix hermitian_part(const CMatrix& a) {
  require(operator_norm_distance(a, a.adjoint()) <= 1e-8 * std::max(1.0, spectral_norm(a)),
          ErrorKind::contract, "encoded Hamiltonian is not Hermitian");
  return 0.5 * (a + a.adjoint());
}

// Nearest unitary (polar factor).
CMatrix polar_unitary(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

}  // namespace

const char* sim_path_name(SimPath p) {
  return p == SimPath::lcu_taylor ? "lcu_taylor" : "oracle_exponential";
}

int taylor_order_for(int segments, double eps) {
  require(eps > 0 && eps < 1, ErrorKind::input, "simulation eps must lie in (0, 1)");
  const double r = std::max(1, segments);
  for (int k = 1; k < 60; ++k) {
    const double rem = 2.0 * std::exp((k + 1) * std::log(std::numbers::ln2) - std::lgamma(k + 2.0));
    if (r * 2.0 * rem <= eps / 2.0) return k;
  }
  fail(ErrorKind::range, "no Taylor order reaches the requested simulation error");
}

SimulationResult simulate_hamiltonian(const BlockEncoding& be, const SimulationConfig& cfg) {
  require(cfg.t >= 0 && std::isfinite(cfg.t), ErrorKind::input, "simulation time must be >= 0");
  require(cfg.eps > 0 && cfg.eps < 1, ErrorKind::input, "simulation eps must lie in (0, 1)");
  SimulationResult r;
  r.path = cfg.path;
  r.t = cfg.t;
  r.eps = cfg.eps;
  r.alpha = be.alpha;
  r.ancillas = be.ancillas + 2;
  const CMatrix b0 = be.block();
  const CMatrix h = hermitian_part(be.alpha * b0);
  r.exact = hermitian_evolution(h, cfg.t);
  const auto dim = h.rows();
  if (cfg.path == SimPath::oracle_exponential) {
    r.unitary = r.exact;
    r.claimed_epsilon = cfg.t * be.epsilon;
  } else if (cfg.t == 0.0) {
    r.unitary = CMatrix::Identity(dim, dim);
    r.claimed_epsilon = cfg.eps;
  } else {
    r.segments = static_cast<int>(std::ceil(be.alpha * cfg.t / std::numbers::ln2 - 1e-12));
    r.order = cfg.order > 0 ? cfg.order : taylor_order_for(r.segments, cfg.eps);
    const double x = be.alpha * cfg.t / r.segments;
    CMatrix s = CMatrix::Identity(dim, dim), term = CMatrix::Identity(dim, dim);
    double beta_s = 1.0, coef = 1.0;
    for (int k = 1; k <= r.order; ++k) {
      term = term * (cplx(0, -1) * b0);
      coef *= x / k;
      beta_s += coef;
      s += coef * term;
    }
    require(beta_s <= 2.0 + 1e-12, ErrorKind::contract, "Taylor segment exceeds beta = 2");
    const CMatrix bb = s / 2.0;
    const CMatrix seg = 3.0 * bb - 4.0 * bb * bb.adjoint() * bb;
    r.unitary = CMatrix::Identity(dim, dim);
    for (int k = 0; k < r.segments; ++k) r.unitary = seg * r.unitary;
    r.query_count = 3L * r.segments * r.order;
    r.claimed_epsilon = cfg.eps;
  }
  r.measured_error = operator_norm_distance(r.unitary, r.exact);
  r.pass = r.measured_error <= r.claimed_epsilon + kVerifySlack;
  return r;
}

BlockEncoding lcu_taylor_circuit(const BlockEncoding& be, double t, int segments, int order) {
  require(segments >= 1 && order >= 1 && t > 0, ErrorKind::input, "bad Taylor circuit parameters");
  const int a = be.ancillas, s = be.system_qubits;
  const int work = order * a + s;
  require(work + 4 <= 22, ErrorKind::range, "Taylor circuit too large to simulate");
  const double x = be.alpha * t / segments;
  std::vector<double> y;
  std::vector<OperatorPtr> branches;
  double coef = 1.0, beta_s = 0.0;
  for (int k = 0; k <= order; ++k) {
    if (k > 0) coef *= x / k;
    y.push_back(coef);
    beta_s += coef;
    if (k == 0) {
      branches.push_back(nullptr);
      continue;
    }
    std::vector<OperatorPtr> factors;
    for (int c = 0; c < k; ++c) {
      std::vector<int> pos;
      for (int q = 0; q < a; ++q) pos.push_back(c * a + q);
      for (int q = 0; q < s; ++q) pos.push_back(order * a + q);
      factors.push_back(on_qubits(be.unitary, work, pos));
    }
    cplx ph = 1.0;
    for (int c = 0; c < k; ++c) ph *= cplx(0, -1);
    branches.push_back(scaled(product(std::move(factors)), ph));
  }
  require(beta_s <= 2.0 + 1e-12, ErrorKind::contract, "Taylor segment exceeds beta = 2");
  const double pad = (2.0 - beta_s) / 2.0;
  y.push_back(pad);
  y.push_back(-pad);
  branches.push_back(nullptr);
  branches.push_back(nullptr);
  const StatePreparationPair pair = make_signed_pair(y, 2.0);
  const int total = pair.b + work;
  const int anc = pair.b + order * a;
  OperatorPtr pr = embed(dense_operator(pair.P_R), 0, work);
  OperatorPtr pl = embed(dense_operator(pair.P_L.adjoint()), 0, work);
  OperatorPtr w = product({pr, select_operator(pair.b, std::move(branches)), pl});
  OperatorPtr refl = zero_reflection(total, anc);
  OperatorPtr oaa = scaled(product({w, refl, adjoint(w), refl, w}), -1.0);
  std::vector<OperatorPtr> segs(static_cast<std::size_t>(segments), oaa);
  return BlockEncoding{product(std::move(segs)), 1.0, anc, 0.0, s, "lcu_taylor_circuit"};
}

QpeOutcome run_qpe(const CMatrix& u, std::size_t active, const QpeConfig& cfg) {
  require(u.rows() == u.cols() && is_power_of_two(static_cast<std::uint64_t>(u.rows())),
          ErrorKind::contract, "QPE unitary must be square with power-of-two size");
  require(is_unitary(u, 1e-9), ErrorKind::contract, "QPE needs a unitary");
  require(cfg.bits >= 1 && cfg.bits <= 16, ErrorKind::input, "phase bits must lie in [1, 16]");
  require(cfg.shots >= 1, ErrorKind::input, "QPE needs at least one shot");
  const std::size_t dim = static_cast<std::size_t>(u.rows());
  require(active >= 1 && active <= dim, ErrorKind::contract, "QPE active count out of range");
  const int sq = ceil_log2(dim, true);
  const int b = cfg.bits;
  require(b + 2 * sq <= 24, ErrorKind::range, "QPE register too large");

  std::vector<Register> regs;
  std::vector<std::string> ph;
  for (int k = 0; k < b; ++k) {
    ph.push_back("ph" + std::to_string(k));
    regs.push_back({ph.back(), 1, RegisterKind::flag, std::nullopt});
  }
  regs.push_back({"sys", sq, RegisterKind::index, std::nullopt});
  regs.push_back({"ref", sq, RegisterKind::index, std::nullopt});
  SimState st{RegisterLayout(regs)};
  const auto& lay = st.layout();
  const int sys_shift = lay.dense_shift("sys"), ref_shift = lay.dense_shift("ref");
  CVector init = CVector::Zero(lay.dense_dim());
  for (std::size_t j = 0; j < active; ++j)
    init((j << sys_shift) | (j << ref_shift)) = 1.0 / std::sqrt(double(active));
  st.set_dense(init);

  CMatrix hd(2, 2);
  hd << 1, 1, 1, -1;
  hd /= std::sqrt(2.0);
  for (const auto& q : ph) st.apply_unitary(hd, {q});
  // ph0 is the most significant phase bit and drives the largest power.
  std::vector<CMatrix> pw(static_cast<std::size_t>(b));
  pw[0] = u.adjoint();
  for (int m = 1; m < b; ++m) pw[m] = pw[m - 1] * pw[m - 1];
  for (int k = 0; k < b; ++k) {
    const CMatrix& g = pw[b - 1 - k];
    st.apply_controlled(
        {ph[k]}, [&](SimState::ControlValues v) -> std::optional<CMatrix> {
          if (v[0] == 0) return std::nullopt;
          return g;
        },
        {"sys"});
  }
  // Inverse QFT.
  CMatrix sw = CMatrix::Zero(4, 4);
  sw(0, 0) = sw(1, 2) = sw(2, 1) = sw(3, 3) = 1.0;
  for (int i = 0; i < b / 2; ++i) st.apply_unitary(sw, {ph[i], ph[b - 1 - i]});
  for (int j = b - 1; j >= 0; --j) {
    for (int k = b - 1; k > j; --k) {
      CMatrix r = CMatrix::Identity(2, 2);
      r(1, 1) = std::polar(1.0, -kTwoPi / std::ldexp(1.0, k - j + 1));
      st.apply_controlled(
          {ph[k]}, [&](SimState::ControlValues v) -> std::optional<CMatrix> {
            if (v[0] == 0) return std::nullopt;
            return r;
          },
          {ph[j]});
    }
    st.apply_unitary(hd, {ph[j]});
  }

  const CVector& v = st.branches().begin()->second;
  const std::size_t bins = std::size_t{1} << b;
  QpeOutcome out;
  out.bits = b;
  out.t = cfg.t;
  out.probabilities.assign(bins, 0.0);
  out.bin_density.assign(bins, CMatrix::Zero(dim, dim));
  for (std::size_t y = 0; y < bins; ++y) {
    std::size_t base = 0;
    for (int k = 0; k < b; ++k)
      if ((y >> (b - 1 - k)) & 1) base |= std::size_t{1} << lay.dense_shift(ph[k]);
    CMatrix amp(dim, dim);  // rows: sys, cols: ref
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t r = 0; r < dim; ++r) amp(i, r) = v(base | (i << sys_shift) | (r << ref_shift));
    CMatrix rho = amp * amp.adjoint();
    const double p = rho.trace().real();
    out.probabilities[y] = p;
    if (p > 1e-300) out.bin_density[y] = rho / p;
  }
  double total = 0.0;
  for (double p : out.probabilities) total += p;
  for (double& p : out.probabilities) p /= total;
  out.samples = sample_indices(out.probabilities, cfg.shots, cfg.seed);
  out.histogram.assign(bins, 0);
  for (auto s : out.samples) ++out.histogram[s];
  return out;
}

std::vector<double> SpectralResult::eigenvalues() const {
  std::vector<double> v;
  for (const auto& c : clusters) v.push_back(c.value);
  return v;
}

SpectralResult extract_d_smallest(const QpeOutcome& q, const ExtractOptions& opt) {
  const std::size_t bins = q.histogram.size();
  require(bins >= 2 && q.t > 0, ErrorKind::contract, "empty QPE outcome");
  std::size_t shots = 0;
  for (auto h : q.histogram) shots += h;
  const std::size_t active = std::max<std::size_t>(1, opt.active);
  const std::size_t min_count =
      opt.min_count > 0 ? opt.min_count : std::max<std::size_t>(10, shots / (10 * active));
  auto cdist = [&](std::size_t a, std::size_t b) {
    const std::size_t d = a > b ? a - b : b - a;
    return std::min(d, bins - d);
  };
  std::vector<std::size_t> order(bins);
  for (std::size_t i = 0; i < bins; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return q.histogram[a] > q.histogram[b]; });
  std::vector<std::size_t> peaks;
  for (auto y : order) {
    if (q.histogram[y] < min_count) break;
    bool near = false;
    for (auto p : peaks) near = near || cdist(p, y) <= 2;
    if (!near) peaks.push_back(y);
  }
  SpectralResult res;
  const double nb = static_cast<double>(bins);
  for (auto p : peaks) {
    EigenCluster c;
    const std::size_t lo = (p + bins - 1) % bins, hi = (p + 1) % bins;
    const std::size_t nbh = q.histogram[hi] >= q.histogram[lo] ? hi : lo;
    const double off = nbh == hi ? 1.0 : -1.0;
    const double cp = double(q.histogram[p]), cn = double(q.histogram[nbh]);
    double phase = (double(p) + off * cn / (cp + cn)) / nb;
    if (phase >= 1.0) phase -= 1.0;
    if (opt.signed_phases && phase >= 0.5) phase -= 1.0;
    if (!opt.signed_phases && phase > 1.0 - 1.5 / nb) phase -= 1.0;
    c.phase = phase;
    c.value = kTwoPi * phase / q.t;
    const auto dim = q.bin_density.front().rows();
    CMatrix avg = CMatrix::Zero(dim, dim);
    for (std::size_t y = 0; y < bins; ++y) {
      if (q.histogram[y] == 0) continue;
      // nearest peak owns the bin
      std::size_t best = peaks.front();
      for (auto o : peaks)
        if (cdist(o, y) < cdist(best, y)) best = o;
      if (best != p || cdist(p, y) > 2) continue;
      avg += double(q.histogram[y]) * q.bin_density[y];
      c.count += q.histogram[y];
    }
    avg /= double(c.count);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (avg + avg.adjoint()));
    const RVector& ev = es.eigenvalues();
    const double top = ev(ev.size() - 1);
    int mult = 0;
    for (Eigen::Index k = ev.size() - 1; k >= 0 && ev(k) >= 0.25 * top; --k) ++mult;
    c.multiplicity = mult;
    c.basis = es.eigenvectors().rightCols(mult).rowwise().reverse();
    for (int k = 0; k < mult; ++k) {
      Eigen::Index at = 0;
      c.basis.col(k).cwiseAbs().maxCoeff(&at);
      const cplx z = c.basis(at, k);
      c.basis.col(k) *= std::conj(z) / std::abs(z);
    }
    res.all.push_back(std::move(c));
  }
  std::sort(res.all.begin(), res.all.end(),
            [](const EigenCluster& a, const EigenCluster& b) { return a.value < b.value; });
  std::vector<const EigenCluster*> nonzero;
  for (const auto& c : res.all) {
    if (opt.zero_threshold > 0 && std::abs(c.phase) <= opt.zero_threshold) {
      res.zero_weight += double(c.count) / double(shots);
      continue;
    }
    nonzero.push_back(&c);
  }
  if (opt.order == ExtractOrder::largest) std::reverse(nonzero.begin(), nonzero.end());
  require(nonzero.size() >= opt.d, ErrorKind::resolution,
          "only " + std::to_string(nonzero.size()) + " nonzero eigenphase clusters resolved, " +
              std::to_string(opt.d) + " requested");
  for (std::size_t k = 0; k < opt.d; ++k) res.clusters.push_back(*nonzero[k]);
  res.d = opt.d;
  return res;
}

std::vector<CVector> recover_Lr_eigenvectors(const SpectralResult& r, const CMatrix& rho2_block) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (rho2_block + rho2_block.adjoint()));
  const RVector& ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  require(top > 0, ErrorKind::degenerate, "degree block is zero");
  RVector inv = RVector::Zero(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    require(ev(k) >= -1e-10, ErrorKind::degenerate, "degree block is not positive");
    if (ev(k) > 1e-10 * top) inv(k) = 1.0 / std::sqrt(ev(k));
  }
  const CMatrix m = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint();
  std::vector<CVector> out;
  for (const auto& c : r.clusters)
    for (Eigen::Index k = 0; k < c.basis.cols(); ++k) {
      CVector w = m * c.basis.col(k);
      const double nw = w.norm();
      require(nw > 0, ErrorKind::degenerate, "eigenvector lies outside the degree support");
      out.push_back(w / nw);
    }
  return out;
}

const char* target_name(Target t) {
  switch (t) {
    case Target::L: return "L";
    case Target::Ls: return "Ls";
    case Target::Lr: return "Lr";
    case Target::W: return "W";
  }
  return "?";
}

Target parse_target(const std::string& s) {
  if (s == "L") return Target::L;
  if (s == "Ls") return Target::Ls;
  if (s == "Lr") return Target::Lr;
  if (s == "W") return Target::W;
  fail(ErrorKind::config, "unknown target '" + s + "' (expected L, Ls, Lr or W)");
}

namespace {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  } catch (const std::exception& e) {
    throw StageError(name, Error(ErrorKind::contract, e.what()));
  }
}

Json record_json(const VerificationRecord& r) {
  return Json{{"name", r.name},
              {"alpha", r.alpha},
              {"ancillas", r.ancillas},
              {"claimed_epsilon", r.claimed_epsilon},
              {"measured_epsilon", r.measured_epsilon},
              {"subject_norm", r.subject_norm},
              {"unitarity_defect", r.unitarity_defect},
              {"pass", r.pass}};
}

Json stats_json(const AmplificationStats& s) {
  return Json{{"initial_amplitude", s.initial_amplitude}, {"iterations", s.iterations},
              {"nominal_iterations", s.nominal_iterations}, {"residual", s.residual},
              {"Upsilon", s.Upsilon}, {"tau", s.tau}, {"p0", s.p0}, {"r", s.r}};
}

}  // namespace

PipelineResult full_pipeline(const VertexSet& vs, const KernelParams& kp,
                             const PipelineConfig& cfg) {
  PipelineResult out;
  out.target = cfg.target;
  Json& rep = out.report;
  rep["target"] = target_name(cfg.target);
  rep["n"] = vs.count;
  rep["m"] = vs.dim;
  rep["lambda"] = kp.lambda;
  rep["p"] = kp.p;
  rep["d"] = cfg.d;

  // graph-model: classical references
  struct Ref {
    GraphMatrices g;
    std::vector<double> values;
    std::vector<CVector> vectors;
    std::vector<double> full;  // every reference eigenvalue of the target
  };
  const Ref ref = stage("graph-model", [&] {
    Ref r;
    r.g = build_graph(vs, kp);
    const std::size_t n = vs.count;
    require(cfg.d >= 1 && cfg.d < std::max<std::size_t>(n, 2) + (cfg.target == Target::W ? 1 : 0),
            ErrorKind::config, "d must lie in [1, n-1]");
    if (cfg.target == Target::W) {
      const RMatrix wn = r.g.W_p.topLeftCorner(n, n) / double(n);
      const SpectralReference sr = full_eigensolve(wn);
      for (Eigen::Index k = 0; k < sr.eigenvalues.size(); ++k) r.full.push_back(sr.eigenvalues(k));
      for (std::size_t k = 0; k < cfg.d; ++k) {
        const Eigen::Index c = sr.eigenvalues.size() - 1 - static_cast<Eigen::Index>(k);
        r.values.push_back(sr.eigenvalues(c));
        CVector v = CVector::Zero(vs.padded_count());
        v.head(n) = sr.eigenvectors.col(c).cast<cplx>();
        r.vectors.push_back(v);
      }
    } else {
      const RMatrix m = cfg.target == Target::L ? RMatrix(r.g.L / r.g.trace_D) : r.g.L_s;
      const SpectralReference sr = classical_eigensolve(m, cfg.d);
      const SpectralReference all = full_eigensolve(m.topLeftCorner(n, n));
      for (Eigen::Index k = 0; k < all.eigenvalues.size(); ++k) r.full.push_back(all.eigenvalues(k));
      for (std::size_t k = 0; k < cfg.d; ++k) {
        r.values.push_back(sr.eigenvalues(k));
        CVector v = sr.eigenvectors.col(k).cast<cplx>();
        if (cfg.target == Target::Lr) {
          for (std::size_t i = 0; i < n; ++i) v(i) /= std::sqrt(r.g.D(i, i));
          v.normalize();
        }
        r.vectors.push_back(v);
      }
    }
    return r;
  });
  out.reference_eigenvalues = ref.values;
  rep["reference_eigenvalues"] = ref.values;

  // state-prep and the component encodings
  const EncodingComponents comp =
      stage("state-prep", [&] { return build_components(vs, kp, cfg.encoding); });
  rep["norm_case"] = norm_case_name(comp.norm_case);
  rep["trace_D"] = Json{{"estimate", comp.trace_D_estimate},
                        {"classical", comp.trace_D_classical},
                        {"used", comp.trace_D_used}};
  rep["upsilon"] = comp.upsilon;
  {
    Json amp;
    if (comp.psi) amp["weight_state"] = stats_json(comp.psi->stats);
    amp["degree_pairs"] = stats_json(comp.degree.pair_stats);
    amp["degree_state"] = stats_json(comp.degree.stats);
    rep["amplification"] = amp;
  }

  // block-encoding
  struct Target_ {
    BlockEncoding enc;
    CMatrix rho2_block;
  };
  const Target_ tgt = stage("block-encoding", [&] {
    Target_ t;
    out.records = comp.records;
    t.rho2_block = comp.rho2.encoded();
    if (cfg.target == Target::W) {
      const CombinedEncoding w = encode_W_over_n(comp, kp);
      out.records.push_back(verify_block_encoding(w.enc, w.reference, "W_over_n"));
      t.enc = w.enc;
    } else {
      const CombinedEncoding cl = encode_calL(comp);
      out.records.push_back(verify_block_encoding(cl.enc, cl.reference, "calL"));
      rep["combination"] = Json{{"c", cl.spec.c}, {"beta", cl.spec.beta}, {"l", cl.spec.l},
                                {"eps_l", cl.spec.eps_l}, {"y", cl.spec.y}};
      const CMatrix exact = to_complex(ref.g.L) / ref.g.trace_D;
      rep["calL_gap_to_exact"] = operator_norm_distance(exact, cl.enc.encoded());
      t.enc = cl.enc;
      if (cfg.target != Target::L) {
        const SandwichEncoding sw = sandwich_negative_power(comp.rho2, cl.enc, cfg.negative_power);
        out.records.push_back(verify_block_encoding(sw.enc, to_complex(ref.g.L_s), "sandwich_Ls"));
        rep["negative_power"] = Json{{"kappa", sw.params.kappa}, {"varsigma1", sw.params.varsigma1},
                                     {"zeta1", sw.params.zeta1}, {"c_exp", sw.params.c_exp}};
        t.enc = sw.enc;
      }
    }
    return t;
  });
  Json recs = Json::array();
  for (const auto& r : out.records) {
    recs.push_back(record_json(r));
    if (!r.pass) out.failures.push_back("encoding " + r.name + " failed verification");
  }
  rep["encoding_verifications"] = recs;

  if (cfg.verify_only) {
    out.pass = out.failures.empty();
    rep["verify_only"] = true;
    rep["pass"] = out.pass;
    rep["failures"] = out.failures;
    return out;
  }

  // simulation
  const bool signed_phases = cfg.target == Target::W;
  double bound = 0.0;
  if (cfg.target == Target::L)
    bound = 2.0 * tgt.rho2_block.diagonal().real().maxCoeff();
  else if (cfg.target == Target::W)
    bound = tgt.enc.alpha;
  else
    bound = 2.0;
  const double limit = signed_phases ? std::numbers::pi : kTwoPi;
  out.t = cfg.t > 0 ? cfg.t : 0.9 * limit / bound;
  out.resolution = kTwoPi / (out.t * std::ldexp(1.0, cfg.qpe.bits));
  const SimulationResult sim = stage("simulation", [&] {
    require(out.t * bound < limit, ErrorKind::range,
            "evolution time would wrap eigenphases around the unit circle");
    SimulationConfig sc{out.t, cfg.sim_eps, cfg.path, cfg.taylor_order};
    return simulate_hamiltonian(tgt.enc, sc);
  });
  out.simulation = sim;
  rep["simulation"] = Json{{"path", sim_path_name(sim.path)}, {"t", sim.t}, {"eps", sim.eps},
                           {"claimed_epsilon", sim.claimed_epsilon},
                           {"measured_error", sim.measured_error}, {"segments", sim.segments},
                           {"order", sim.order}, {"query_count", sim.query_count},
                           {"ancillas", sim.ancillas}, {"pass", sim.pass}};
  if (!sim.pass) out.failures.push_back("simulation error above its claim");

  // qpe
  const QpeOutcome qo = stage("qpe", [&] {
    QpeConfig qc = cfg.qpe;
    qc.t = out.t;
    const CMatrix u = sim.path == SimPath::lcu_taylor ? polar_unitary(sim.unitary) : sim.unitary;
    return run_qpe(u, vs.count, qc);
  });
  {
    Json hist = Json::array();
    for (std::size_t y = 0; y < qo.histogram.size(); ++y)
      if (qo.histogram[y]) hist.push_back(Json::array({y, qo.histogram[y]}));
    rep["qpe"] = Json{{"bits", cfg.qpe.bits}, {"shots", cfg.qpe.shots}, {"seed", cfg.qpe.seed},
                      {"histogram", hist}};
  }

  // extraction
  out.spectral = stage("extraction", [&] {
    ExtractOptions eo;
    eo.d = cfg.d;
    eo.active = vs.count;
    eo.signed_phases = signed_phases;
    eo.zero_threshold = signed_phases ? 0.0 : 1.5 / std::ldexp(1.0, cfg.qpe.bits);
    eo.order = cfg.target == Target::W ? ExtractOrder::largest : ExtractOrder::smallest_nonzero;
    return extract_d_smallest(qo, eo);
  });
  std::vector<CVector> vectors;
  for (const auto& c : out.spectral.clusters) vectors.push_back(c.basis.col(0));
  if (cfg.target == Target::Lr) {
    const auto recovered =
        stage("extraction", [&] { return recover_Lr_eigenvectors(out.spectral, tgt.rho2_block); });
    // first recovered column of each cluster
    vectors.clear();
    std::size_t at = 0;
    for (const auto& c : out.spectral.clusters) {
      vectors.push_back(recovered[at]);
      at += static_cast<std::size_t>(c.basis.cols());
    }
    const RMatrix& lr = ref.g.L_r;
    for (const auto& w : recovered) {
      const CVector lw = to_complex(lr) * w;
      const cplx mu = w.dot(lw) / w.squaredNorm();
      const double res = (lw - mu * w).norm();
      out.residuals.push_back(res);
      if (res > 1e-6) out.failures.push_back("L_r eigenvector residual above 1e-6");
    }
    rep["Lr_residuals"] = out.residuals;
  }
  const auto values = out.spectral.eigenvalues();
  rep["eigenvalues"] = values;
  rep["zero_weight"] = out.spectral.zero_weight;
  Json mult = Json::array();
  for (const auto& c : out.spectral.clusters) mult.push_back(c.multiplicity);
  rep["multiplicities"] = mult;
  for (std::size_t k = 0; k < ref.values.size(); ++k) {
    if (std::abs(values[k] - ref.values[k]) > out.resolution)
      out.failures.push_back("eigenvalue " + std::to_string(k) + " outside one phase bin");
    const auto& cl = out.spectral.clusters[k];
    double fid = 0.0;
    if (cfg.target == Target::Lr) {
      fid = std::norm(ref.vectors[k].dot(vectors[k]));
    } else {
      fid = (cl.basis.adjoint() * ref.vectors[k]).squaredNorm();
    }
    out.fidelities.push_back(fid);
    double gap = INFINITY;
    for (double o : ref.full)
      if (std::abs(o - ref.values[k]) > 1e-12) gap = std::min(gap, std::abs(o - ref.values[k]));
    if (gap > out.resolution && fid < 0.99)
      out.failures.push_back("eigenvector " + std::to_string(k) + " fidelity below 0.99");
  }
  rep["fidelities"] = out.fidelities;
  rep["resolution"] = out.resolution;
  out.pass = out.failures.empty();
  rep["pass"] = out.pass;
  rep["failures"] = out.failures;
  return out;
}

}  // namespace qlap
