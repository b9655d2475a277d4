#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "qlap/checks.hpp"
#include "qlap/error.hpp"
#include "qlap/harness.hpp"

namespace qlap {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// log-uniform in [lo, hi]
double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(uniform(rng, std::log(lo), std::log(hi)));
}

CVector random_unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CVector v(static_cast<Eigen::Index>(dim));
  for (auto& z : v) z = cplx(g(rng), g(rng));
  return v / v.norm();
}

CMatrix random_hermitian(std::size_t dim, double norm, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  const auto n = static_cast<Eigen::Index>(dim);
  CMatrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
  CMatrix h = (m + m.adjoint()) / 2.0;
  return h * (norm / spectral_norm(h));
}

CVector tensor_power(const CVector& v, int p) {
  CVector out = CVector::Ones(1);
  for (int k = 0; k < p; ++k) {
    CVector next(out.size() * v.size());
    for (Eigen::Index a = 0; a < out.size(); ++a)
      for (Eigen::Index b = 0; b < v.size(); ++b) next(a * v.size() + b) = out(a) * v(b);
    out = std::move(next);
  }
  return out;
}

struct Tally {
  std::size_t trials = 0, violations = 0;
  double max_ratio = 0.0;

  void add(double measured, double bound, double slack = 1e-12) {
    ++trials;
    if (measured > bound + slack) ++violations;
    if (bound > 0) max_ratio = std::max(max_ratio, measured / bound);
  }
  CheckResult result(std::string suite, std::string check) const {
    CheckResult r;
    r.suite = std::move(suite);
    r.check = std::move(check);
    r.trials = trials;
    r.violations = violations;
    r.max_ratio = max_ratio;
    r.pass = trials > 0 && violations == 0;
    return r;
  }
};

KernelParams kernel(double lambda, int p) { return KernelParams::make(lambda, p); }

}  // namespace

std::string CheckResult::json_line() const {
  Json j;
  j["suite"] = suite;
  j["check"] = check;
  j["trials"] = trials;
  j["violations"] = violations;
  j["max_ratio"] = max_ratio;
  j["pass"] = pass;
  if (!detail.empty()) j["detail"] = detail;
  return dump_json(j, -1);
}

VertexSet random_vertices(std::size_t n, std::size_t m, double lo, double hi,
                          std::mt19937_64& rng) {
  std::vector<std::vector<double>> rows;
  std::normal_distribution<double> g;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> r(m);
    double s = 0;
    for (auto& x : r) {
      x = g(rng);
      s += x * x;
    }
    const double len = lo == hi ? lo : uniform(rng, lo, hi);
    for (auto& x : r) x *= len / std::sqrt(s);
    rows.push_back(std::move(r));
  }
  return VertexSet::from_rows(rows);
}

CheckResult check_scaled_state_error(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tally t;
  for (std::size_t k = 0; k < trials; ++k) {
    const std::size_t dim = 2 + k % 7;
    const CVector x = random_unit(dim, rng);
    const double eps = uniform(rng, 0.0, 0.5);
    const CVector y = perturb_unit(x, eps, rng);
    double a = uniform(rng, 0.0, 3.0), b = uniform(rng, 0.0, 3.0);
    if (a < b) std::swap(a, b);
    t.add((a * x - b * y).norm(), (a - b) + b * eps);
  }
  return t.result("error_bounds", "scaled_state_error");
}

CheckResult check_tensor_power_error(std::size_t trials, std::uint64_t seed, int max_p) {
  std::mt19937_64 rng(seed);
  Tally t;
  for (std::size_t k = 0; k < trials; ++k) {
    const int p = 1 + static_cast<int>(k % static_cast<std::size_t>(max_p));
    const std::size_t dim = 2 + k % 3;
    const CVector x = random_unit(dim, rng);
    const CVector y = perturb_unit(x, uniform(rng, 0.0, 0.5), rng);
    t.add((tensor_power(x, p) - tensor_power(y, p)).norm(), p * (x - y).norm());
  }
  return t.result("error_bounds", "tensor_power_error");
}

std::vector<CheckResult> check_phi_chain(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tally per_vertex, global;
  for (std::size_t k = 0; k < trials; ++k) {
    const int p = 2 + static_cast<int>(k % 3);
    const VertexSet vs = random_vertices(4, 2, 1.0, 1.0, rng);
    const KernelParams kp = kernel(0.5, p);
    const double eps = log_uniform(rng, 1e-4, 1e-2);
    PrepOptions noisy;
    noisy.eps_x = eps;
    noisy.eps_a = eps;
    noisy.seed = rng();
    const PreparedState exact = build_phi_state(vs, kp);
    const PreparedState hat = build_phi_state(vs, kp, noisy);
    const double sn = std::sqrt(double(vs.count));
    const auto e = vertex_branches(exact, sn);
    const auto h = vertex_branches(hat, sn);
    const double vb = eps + 0.5 * p * (p + 1) * eps;
    for (std::size_t i = 0; i < vs.count; ++i) per_vertex.add((h[i] - e[i]).norm(), vb);
    global.add((hat.purification - exact.purification).norm(),
               phi_error_bound(vs.count, p, eps));
  }
  return {per_vertex.result("state_prep", "phi_per_vertex"),
          global.result("state_prep", "phi_global")};
}

std::vector<CheckResult> check_psi_chain(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tally vertexwise, global, regime;
  for (std::size_t k = 0; k < trials; ++k) {
    const int p = 2 + static_cast<int>(k % 2);
    const bool big = k % 2 == 1;
    const VertexSet vs = random_vertices(4, 2, big ? 0.5 : 0.3, big ? 1.5 : 1.0, rng);
    const KernelParams kp = kernel(0.5, p);
    const double eps = log_uniform(rng, 1e-4, 1e-2);
    PrepOptions noisy;
    noisy.eps_x = eps;
    noisy.eps_a = eps;
    noisy.seed = rng();
    const PreparedState exact = build_psi_state(vs, kp);
    const PreparedState hat = build_psi_state(vs, kp, noisy);
    const double su = std::sqrt(exact.stats.Upsilon), sh = std::sqrt(hat.stats.Upsilon);
    const double measured = (sh * hat.purification - su * exact.purification).norm() / su;

    double b34 = 0;
    for (std::size_t i = 0; i < vs.count; ++i)
      b34 += std::sqrt(kp.a_sum) * std::pow(std::max(1.0, vs.norms[i]), p) *
             (eps + 0.5 * p * (p + 1) * eps);
    b34 /= su;
    const double b35 = psi_error_bound(kp.a_sum, vs.count, p, vs.max_norm(), eps);
    vertexwise.add(measured, b34);
    global.add(measured, b35);

    // the max-norm factor shows up exactly when some norm exceeds one
    const double base = std::sqrt(kp.a_sum * double(vs.count)) * p * p * eps;
    const double factor = b35 / base;
    const double want = std::pow(std::max(1.0, vs.max_norm()), p);
    const bool above = vs.max_norm() > 1.0;
    regime.add(std::abs(factor - want) + ((factor > 1.0) != above ? 1.0 : 0.0), 1e-9 * want, 0);
  }
  auto r = regime.result("state_prep", "psi_norm_regime");
  r.max_ratio = 0.0;
  return {vertexwise.result("state_prep", "psi_vertexwise"),
          global.result("state_prep", "psi_global"), r};
}

CheckResult check_degree_chain(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tally t;
  for (std::size_t k = 0; k < trials; ++k) {
    const VertexSet vs = random_vertices(4, 2, 0.5, 1.5, rng);
    const KernelParams kp = kernel(0.5, 2 + static_cast<int>(k % 2));
    const double eps = log_uniform(rng, 1e-4, 1e-2);
    PrepOptions opt;
    opt.distance = {EstimatorMode::noisy, eps, 0.0, rng()};
    const PreparedState ps = build_degree_state(vs, kp, opt);
    const GraphMatrices g = build_graph(vs, kp);
    const double n1 = double(vs.count) - 1.0;
    double s = 0;
    for (std::size_t i = 0; i < vs.count; ++i) {
      const double dh = n1 * ps.inner_products[i];
      const double d = g.D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
      s += std::pow(std::sqrt(std::max(0.0, dh)) - std::sqrt(d), 2);
    }
    t.add(std::sqrt(s / g.trace_D), degree_error_bound(kp.lambda, eps, ps.stats.r));
  }
  return t.result("state_prep", "degree_state");
}

CheckResult check_exp_gate_exhaustive(int bits) {
  const FixedPointSpec sx{bits, 1}, so{bits, 1};
  Tally t;
  Json cases = Json::array();
  for (double lambda : {0.25, 0.5, 1.0}) {
    for (int order : {8, 12, 16}) {
      std::size_t before = t.violations;
      double worst = 0;
      for (Label x = 0; x <= sx.max_label(); ++x) {
        const double xv = sx.decode(x);
        const double got = so.decode(fx_exp_neg_lambda(x, sx, so, lambda, order));
        const double err = std::abs(got - std::exp(-lambda * xv));
        const double bound = exp_gate_error_bound(xv, lambda, order, so);
        t.add(err, bound, 0.0);
        worst = std::max(worst, err / bound);
      }
      cases.push_back({{"lambda", lambda}, {"order", order}, {"max_ratio", worst},
                       {"violations", t.violations - before}});
    }
  }
  auto r = t.result("arithmetic", "exp_gate_exhaustive_b" + std::to_string(bits));
  r.detail["cases"] = cases;
  return r;
}

CheckResult check_truncation_bound(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tally t;
  for (std::size_t k = 0; k < trials; ++k) {
    const VertexSet vs = random_vertices(4 + k % 5, 2 + k % 3, 0.2, 2.0, rng);
    const KernelParams kp = kernel(uniform(rng, 0.1, 1.0), 1 + static_cast<int>(k % 8));
    const TruncationReport rep = truncation_error_report(vs, kp);
    double worst = 0;
    for (Eigen::Index i = 0; i < rep.measured.rows(); ++i)
      for (Eigen::Index j = 0; j < rep.measured.cols(); ++j)
        // below 1e-13 the ratio only measures rounding
        if (rep.bound(i, j) > 1e-13) worst = std::max(worst, rep.measured(i, j) / rep.bound(i, j));
    ++t.trials;
    if (!rep.within) ++t.violations;
    t.max_ratio = std::max(t.max_ratio, worst);
  }
  return t.result("graph_model", "taylor_truncation");
}

CheckResult check_purified_encoding_exact(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tally t;
  for (std::size_t k = 0; k < trials; ++k) {
    const int a = 1 + static_cast<int>(k % 3), s = 1 + static_cast<int>((k / 3) % 3);
    const std::size_t na = std::size_t{1} << a, ns = std::size_t{1} << s;
    const CVector psi = random_unit(na * ns, rng);
    CMatrix rho = CMatrix::Zero(static_cast<Eigen::Index>(ns), static_cast<Eigen::Index>(ns));
    for (std::size_t x = 0; x < na; ++x)
      for (std::size_t i = 0; i < ns; ++i)
        for (std::size_t j = 0; j < ns; ++j)
          rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +=
              psi(static_cast<Eigen::Index>(x * ns + i)) *
              std::conj(psi(static_cast<Eigen::Index>(x * ns + j)));
    const BlockEncoding be = purified_density_encoding(state_preparation_operator(psi), a, s);
    const VerificationRecord rec = verify_block_encoding(be, rho);
    t.add(rec.measured_epsilon + rec.unitarity_defect, 1e-10, 0.0);
  }
  auto r = t.result("block_encoding", "purified_density_exact");
  r.max_ratio = 0.0;
  return r;
}

std::vector<CheckResult> check_lcu_error_law(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tally injected, exact;
  for (std::size_t k = 0; k < trials; ++k) {
    const std::size_t m = 2 + k % 3;
    const std::size_t dim = 4;
    const double eps_a = log_uniform(rng, 1e-4, 1e-2);
    std::vector<CMatrix> subjects;
    std::vector<BlockEncoding> noisy, clean;
    std::vector<double> y;
    for (std::size_t j = 0; j < m; ++j) {
      const CMatrix a = random_hermitian(dim, uniform(rng, 0.3, 0.9), rng);
      const CMatrix e = random_hermitian(dim, eps_a, rng);
      subjects.push_back(a);
      noisy.push_back(dilation_encoding(a + e, 1.0, eps_a));
      clean.push_back(dilation_encoding(a, 1.0, 0.0));
      y.push_back(uniform(rng, -1.0, 1.0));
    }
    double l1 = 0;
    for (double v : y) l1 += std::abs(v);
    const double beta = l1 * uniform(rng, 1.0, 2.0);
    const StatePreparationPair pair = make_signed_pair(y, beta);
    const StatePreparationPair bent = perturb_pair(pair, log_uniform(rng, 1e-4, 1e-2), rng);

    CMatrix target = CMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t j = 0; j < m; ++j) target += y[j] * subjects[j];

    const BlockEncoding be = lcu_combine(bent, noisy);
    const double law = 1.0 * bent.epsilon_y + 1.0 * beta * eps_a;
    injected.add(operator_norm_distance(be.encoded(), target), law, 1e-12);
    injected.add(std::abs(be.epsilon - law), 1e-12 * std::max(1.0, law), 0.0);
    injected.trials -= 1;

    const BlockEncoding be0 = lcu_combine(pair, clean);
    exact.add(operator_norm_distance(be0.encoded(), target), 1e-10, 0.0);
  }
  auto e = exact.result("block_encoding", "lcu_exact");
  e.max_ratio = 0.0;
  return {injected.result("block_encoding", "lcu_error_law"), e};
}

CheckResult check_qpe_exact_phases(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tally t;
  for (int bits : {2, 3, 4, 5}) {
    const std::size_t dim = 4;
    const std::size_t bins = std::size_t{1} << bits;
    const CMatrix q = unitary_with_first_column(random_unit(dim, rng));
    std::vector<std::size_t> want;
    CVector phases(static_cast<Eigen::Index>(dim));
    for (std::size_t j = 0; j < dim; ++j) {
      const std::size_t bin = std::uniform_int_distribution<std::size_t>(0, bins - 1)(rng);
      want.push_back(bin);
      // run_qpe powers u^dag, so exp(-i 2 pi bin / 2^b) reads out as bin
      phases(static_cast<Eigen::Index>(j)) =
          std::exp(cplx(0, -2.0 * std::numbers::pi * double(bin) / double(bins)));
    }
    const CMatrix u = q * phases.asDiagonal() * q.adjoint();
    QpeConfig cfg;
    cfg.bits = bits;
    cfg.shots = 64;
    cfg.seed = rng();
    const QpeOutcome out = run_qpe(u, dim, cfg);
    std::vector<double> expect(bins, 0.0);
    for (std::size_t b : want) expect[b] += 1.0 / double(dim);
    double err = 0;
    for (std::size_t b = 0; b < bins; ++b) err = std::max(err, std::abs(out.probabilities[b] - expect[b]));
    t.add(err, 1e-10, 0.0);
  }
  auto r = t.result("spectral", "qpe_exact_phases");
  r.max_ratio = 0.0;
  return r;
}

std::vector<CheckResult> check_simulation_grid(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tally contract;
  std::size_t trend_trials = 0, trend_violations = 0;
  Json rows = Json::array();
  for (std::size_t n : {2, 4}) {
    const VertexSet vs = random_vertices(n, 2, 0.3, 1.0, rng);
    const KernelParams kp = kernel(0.5, 4);
    const EncodingComponents comp = build_components(vs, kp);
    const CombinedEncoding cal = encode_calL(comp);
    std::map<std::pair<double, double>, long> queries;
    for (double eps : {1e-2, 1e-4}) {
      for (double time : {1.0, 2.0, 4.0}) {
        SimulationConfig sc;
        sc.t = time;
        sc.eps = eps;
        sc.path = SimPath::lcu_taylor;
        const SimulationResult sr = simulate_hamiltonian(cal.enc, sc);
        contract.add(sr.measured_error, eps, 0.0);
        queries[{eps, time}] = sr.query_count;
        rows.push_back({{"n", n}, {"eps", eps}, {"t", time}, {"alpha", sr.alpha},
                        {"segments", sr.segments}, {"order", sr.order},
                        {"queries", sr.query_count}, {"error", sr.measured_error}});
      }
    }
    for (double eps : {1e-2, 1e-4}) {
      // nondecreasing in alpha t
      for (auto [a, b] : {std::pair{1.0, 2.0}, std::pair{2.0, 4.0}}) {
        ++trend_trials;
        if (queries[{eps, b}] < queries[{eps, a}]) ++trend_violations;
      }
    }
    for (double time : {1.0, 2.0, 4.0}) {
      // 100x smaller eps must cost well under 100x the queries
      ++trend_trials;
      if (double(queries[{1e-4, time}]) >= 100.0 * double(queries[{1e-2, time}])) ++trend_violations;
    }
  }
  auto c = contract.result("spectral", "lcu_taylor_contract");
  c.detail["grid"] = rows;
  CheckResult tr;
  tr.suite = "spectral";
  tr.check = "query_count_trend";
  tr.trials = trend_trials;
  tr.violations = trend_violations;
  tr.pass = trend_trials > 0 && trend_violations == 0;
  return {c, tr};
}

CheckResult check_zero_mode_weight(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const VertexSet vs = random_vertices(4, 2, 0.3, 1.0, rng);
  const KernelParams kp = kernel(0.5, 4);
  PipelineConfig cfg;
  cfg.target = Target::L;
  cfg.d = 1;
  cfg.qpe.bits = 8;
  cfg.qpe.shots = 8192;
  cfg.qpe.seed = rng();
  const PipelineResult res = full_pipeline(vs, kp, cfg);
  const double p = 1.0 / double(vs.count);
  const double sigma = std::sqrt(p * (1 - p) / double(cfg.qpe.shots));
  const double dev = std::abs(res.spectral.zero_weight - p);
  CheckResult r;
  r.suite = "spectral";
  r.check = "zero_mode_weight";
  r.trials = 1;
  r.violations = dev <= 5 * sigma ? 0 : 1;
  r.max_ratio = dev / (5 * sigma);
  r.pass = r.violations == 0;
  r.detail = {{"zero_weight", res.spectral.zero_weight}, {"expected", p}, {"sigma", sigma}};
  return r;
}

std::vector<std::string> verify_suite(SuiteSize size, std::uint64_t seed) {
  const bool med = size == SuiteSize::medium;
  const std::size_t heavy = med ? 1000 : 100;
  std::vector<CheckResult> all;
  auto push = [&](std::vector<CheckResult> v) {
    for (auto& r : v) all.push_back(std::move(r));
  };
  all.push_back(check_scaled_state_error(1000, seed + 1));
  all.push_back(check_tensor_power_error(1000, seed + 2));
  all.push_back(check_truncation_bound(med ? 500 : 100, seed + 3));
  all.push_back(check_exp_gate_exhaustive(12));
  push(check_phi_chain(heavy, seed + 4));
  push(check_psi_chain(heavy, seed + 5));
  all.push_back(check_degree_chain(heavy, seed + 6));
  all.push_back(check_purified_encoding_exact(med ? 200 : 50, seed + 7));
  push(check_lcu_error_law(50, seed + 8));
  all.push_back(check_qpe_exact_phases(seed + 9));
  push(check_simulation_grid(seed + 10));
  all.push_back(check_zero_mode_weight(seed + 11));
  std::vector<std::string> out;
  for (const auto& r : all) out.push_back(r.json_line());
  return out;
}

}  // namespace qlap
