#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qlap/checks.hpp"
#include "qlap/error.hpp"
#include "qlap/spectral.hpp"
#include "oracle_values.hpp"
#include "test_support.hpp"

using namespace qlap;

namespace {

constexpr double kPi = std::numbers::pi;

CMatrix diag_unitary(const std::vector<double>& phases) {
  CMatrix u = CMatrix::Zero(phases.size(), phases.size());
  for (std::size_t j = 0; j < phases.size(); ++j) u(j, j) = std::exp(cplx(0, -2 * kPi * phases[j]));
  return u;
}

RVector classical_calL_eigs(const VertexSet& vs, const KernelParams& kp) {
  const auto g = build_graph(vs, kp);
  Eigen::SelfAdjointEigenSolver<RMatrix> es(g.L / g.trace_D);
  return es.eigenvalues();
}

}  // namespace

TEST_CASE("zero time gives the identity") {
  const auto comp = build_components(testing::cloud4(), KernelParams::make(0.5, 4));
  const auto cal = encode_calL(comp);
  for (SimPath path : {SimPath::oracle_exponential, SimPath::lcu_taylor}) {
    SimulationConfig sc;
    sc.t = 0.0;
    sc.path = path;
    const auto sr = simulate_hamiltonian(cal.enc, sc);
    const CMatrix b = testing::active_block(sr.unitary, 4);
    CHECK(operator_norm_distance(b, CMatrix::Identity(4, 4)) <= 1e-12);
  }
}

TEST_CASE("half Z for time pi is -iZ") {
  CMatrix z(2, 2);
  z << 0.5, 0, 0, -0.5;
  const auto be = dilation_encoding(z);
  CMatrix want(2, 2);
  want << cplx(0, -1), 0, 0, cplx(0, 1);
  SimulationConfig sc;
  sc.t = kPi;
  sc.eps = 1e-6;
  for (SimPath path : {SimPath::oracle_exponential, SimPath::lcu_taylor}) {
    sc.path = path;
    const auto sr = simulate_hamiltonian(be, sc);
    CHECK(operator_norm_distance(sr.unitary.topLeftCorner(2, 2), want) <= sc.eps);
    CHECK(sr.pass);
  }
}

TEST_CASE("both simulation paths agree at t = 2") {
  const auto comp = build_components(testing::cloud4(), KernelParams::make(0.5, 8));
  const auto cal = encode_calL(comp);
  SimulationConfig sc;
  sc.t = 2.0;
  sc.eps = 1e-4;
  const auto a = simulate_hamiltonian(cal.enc, sc);
  sc.path = SimPath::lcu_taylor;
  const auto b = simulate_hamiltonian(cal.enc, sc);
  CHECK(a.pass);
  CHECK(b.pass);
  CHECK(b.measured_error <= sc.eps);
  CHECK(operator_norm_distance(testing::active_block(a.unitary, 4),
                               testing::active_block(b.unitary, 4)) <= sc.eps);
  CHECK(b.ancillas == cal.enc.ancillas + 2);
  CHECK(b.query_count > 0);
}

TEST_CASE("gate-level taylor circuit matches the matrix path") {
  CMatrix h(2, 2);
  h << 0.3, 0.2, 0.2, -0.1;
  const auto be = dilation_encoding(h);
  SimulationConfig sc;
  sc.t = 1.0;
  sc.eps = 1e-6;
  sc.path = SimPath::lcu_taylor;
  const auto sr = simulate_hamiltonian(be, sc);
  const auto circ = lcu_taylor_circuit(be, sc.t, sr.segments, sr.order);
  CHECK(operator_norm_distance(circ.encoded(), sr.unitary.topLeftCorner(2, 2)) <= 1e-12);
  CHECK(operator_norm_distance(circ.encoded(), sr.exact) <= sc.eps);
}

TEST_CASE("taylor order is the smallest that meets the budget") {
  for (int r : {1, 3, 10}) {
    for (double eps : {1e-2, 1e-4, 1e-8}) {
      const int k = taylor_order_for(r, eps);
      auto bound = [&](int kk) { return r * 4.0 * std::pow(std::log(2.0), kk + 1) / std::tgamma(kk + 2.0); };
      CHECK(bound(k) <= eps / 2);
      if (k > 0) CHECK(bound(k - 1) > eps / 2);
    }
  }
  CHECK(taylor_order_for(1, 1e-8) >= taylor_order_for(1, 1e-2));
}

TEST_CASE("qpe with exactly representable phases") {
  QpeConfig cfg;
  cfg.bits = 2;
  cfg.shots = 400;
  cfg.seed = 5;
  const auto out = run_qpe(diag_unitary({0, 0.25, 0.5, 0.75}), 4, cfg);
  for (std::size_t b = 0; b < 4; ++b) CHECK(std::abs(out.probabilities[b] - 0.25) <= 1e-12);
  for (std::size_t b = 0; b < 4; ++b) {
    // the post-measurement state is the matching basis vector
    CHECK(std::abs(out.bin_density[b](b, b) - 1.0) <= 1e-12);
  }
  CHECK(check_qpe_exact_phases(11).violations == 0);
}

TEST_CASE("two-vertex graph has its nonzero phase at t / 2 pi") {
  const auto comp = build_components(VertexSet::from_rows({{0.6, 0}, {0, 0.8}}), KernelParams::make(0.5, 8));
  const auto cal = encode_calL(comp);
  SimulationConfig sc;
  sc.t = 2.0;  // eigenvalue 1 -> phase 1 / pi
  const auto sr = simulate_hamiltonian(cal.enc, sc);
  QpeConfig cfg;
  cfg.bits = 8;
  cfg.t = sc.t;
  const auto out = run_qpe(testing::active_block(sr.unitary, 2), 2, cfg);
  ExtractOptions eo;
  eo.d = 1;
  eo.zero_threshold = 1.5 / 256;
  eo.active = 2;
  const auto res = extract_d_smallest(out, eo);
  CHECK(std::abs(res.clusters[0].phase - sc.t / (2 * kPi)) <= 1.0 / 256);
  CHECK(std::abs(res.clusters[0].value - 1.0) <= 2 * kPi / (256 * sc.t));
}

TEST_CASE("n = 4 peaks sit within one bin of the classical phases") {
  const auto vs = testing::cloud4();
  const auto kp = KernelParams::make(0.5, 8);
  const auto cal = encode_calL(build_components(vs, kp));
  const RVector eigs = classical_calL_eigs(vs, kp);
  SimulationConfig sc;
  sc.t = 0.9 * 2 * kPi / eigs(3);
  const auto sr = simulate_hamiltonian(cal.enc, sc);
  QpeConfig cfg;
  cfg.bits = 8;
  cfg.shots = 4096;
  cfg.seed = 17;
  cfg.t = sc.t;
  const auto out = run_qpe(testing::active_block(sr.unitary, 4), 4, cfg);
  ExtractOptions eo;
  eo.d = 3;
  eo.zero_threshold = 1.5 / 256;
  eo.active = 4;
  const auto res = extract_d_smallest(out, eo);
  REQUIRE(res.clusters.size() == 3);
  for (int j = 0; j < 3; ++j) {
    const double want = eigs(j + 1) * sc.t / (2 * kPi);
    CHECK(std::abs(res.clusters[j].phase - want) <= 1.0 / 256);
  }
  // zero bin carries the constant vector with weight 1/n
  const double sigma = std::sqrt(0.25 * 0.75 / 4096);
  CHECK(std::abs(res.zero_weight - 0.25) <= 5 * sigma);
}

TEST_CASE("extraction returns eigenvectors of the classical operator") {
  const auto vs = testing::cloud4();
  const auto kp = KernelParams::make(0.5, 8);
  const auto g = build_graph(vs, kp);
  Eigen::SelfAdjointEigenSolver<RMatrix> es(g.L / g.trace_D);
  const double t = 0.9 * 2 * kPi / es.eigenvalues()(3);
  CVector ph(4);
  for (int k = 0; k < 4; ++k) ph(k) = std::exp(cplx(0, -t * es.eigenvalues()(k)));
  const CMatrix vecs = to_complex(RMatrix(es.eigenvectors()));
  const CMatrix u = vecs * ph.asDiagonal() * vecs.adjoint();
  QpeConfig cfg;
  cfg.bits = 10;
  cfg.t = t;
  cfg.seed = 3;
  const auto out = run_qpe(u, 4, cfg);
  ExtractOptions eo;
  eo.d = 3;
  eo.zero_threshold = 1.5 / 1024;
  eo.active = 4;
  const auto res = extract_d_smallest(out, eo);
  for (int j = 0; j < 3; ++j) {
    const CVector ref = to_complex(RMatrix(es.eigenvectors().col(j + 1)));
    const double fid = std::norm(ref.dot(res.clusters[j].basis.col(0)));
    CHECK(fid >= 0.99);
  }
}

TEST_CASE("a degenerate pair inside one bin cannot be split") {
  // phases 0.30 and 0.301 share a bin at 6 bits
  QpeConfig cfg;
  cfg.bits = 6;
  cfg.seed = 8;
  const auto out = run_qpe(diag_unitary({0.0, 0.3, 0.301, 0.6}), 4, cfg);
  ExtractOptions eo;
  eo.d = 3;
  eo.zero_threshold = 1.5 / 64;
  eo.active = 4;
  CHECK_THROWS_AS(extract_d_smallest(out, eo), Error);
  eo.d = 2;
  const auto res = extract_d_smallest(out, eo);
  CHECK(res.clusters[0].multiplicity == 2);
}

TEST_CASE("L_r eigenvector recovery") {
  // regular graph: rho2 = I/n leaves vectors alone
  SpectralResult r;
  EigenCluster c;
  c.basis = CMatrix::Zero(4, 1);
  c.basis(0, 0) = 0.5;
  c.basis(1, 0) = -0.5;
  c.basis(2, 0) = 0.5;
  c.basis(3, 0) = -0.5;
  r.clusters.push_back(c);
  auto v = recover_Lr_eigenvectors(r, CMatrix::Identity(4, 4) / 4.0);
  CHECK((v[0] - c.basis.col(0)).norm() <= 1e-14);

  // two vertices: mu = 2 eigenvector of L_r is D^-1/2 (1, -1) normalised
  const auto g2 = build_graph(VertexSet::from_rows({{0.6, 0}, {0, 0.8}}), KernelParams::make(0.5, 8));
  r.clusters[0].basis = CMatrix::Zero(2, 1);
  r.clusters[0].basis(0, 0) = 1 / std::sqrt(2.0);
  r.clusters[0].basis(1, 0) = -1 / std::sqrt(2.0);
  v = recover_Lr_eigenvectors(r, to_complex(g2.D / g2.trace_D));
  CHECK(std::abs(std::abs(v[0](0)) - 1 / std::sqrt(2.0)) <= 1e-12);
  CHECK(std::abs(v[0](0) + v[0](1)) <= 1e-12);

  // general instance: eigenvectors of L_s map to eigenvectors of L_r
  const auto g = build_graph(testing::cloud4(), KernelParams::make(0.5, 8));
  Eigen::SelfAdjointEigenSolver<RMatrix> es(g.L_s);
  r.clusters.clear();
  for (int j = 1; j < 4; ++j) {
    EigenCluster e;
    e.basis = to_complex(RMatrix(es.eigenvectors().col(j)));
    r.clusters.push_back(e);
  }
  v = recover_Lr_eigenvectors(r, to_complex(g.D / g.trace_D));
  for (int j = 0; j < 3; ++j) {
    const CVector lw = to_complex(g.L_r) * v[j];
    CHECK((lw - es.eigenvalues()(j + 1) * v[j]).norm() <= 1e-6);
  }
}

TEST_CASE("pipeline on two vertices") {
  PipelineConfig cfg;
  const auto res = full_pipeline(VertexSet::from_rows({{0.6, 0}, {0, 0.8}}), KernelParams::make(0.5, 8), cfg);
  CHECK(res.pass);
  REQUIRE(res.spectral.clusters.size() == 1);
  CHECK(std::abs(res.spectral.clusters[0].value - res.reference_eigenvalues[0]) <= res.resolution);
  for (const auto& rec : res.records) CHECK(rec.pass);
}

TEST_CASE("pipeline targets W and L_s") {
  PipelineConfig cfg;
  cfg.target = Target::W;
  cfg.d = 2;
  auto res = full_pipeline(testing::on_circle({0, 0.5, 1.7, 2.9}), KernelParams::make(0.5, 8), cfg);
  CHECK(res.pass);
  for (std::size_t j = 0; j < 2; ++j)
    CHECK(std::abs(res.spectral.clusters[j].value - res.reference_eigenvalues[j]) <= res.resolution);

  cfg.target = Target::Ls;
  cfg.d = 3;
  res = full_pipeline(testing::cloud4(), KernelParams::make(0.5, 8), cfg);
  CHECK(res.pass);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(std::abs(res.spectral.clusters[j].value - oracle::cloud4_Ls_eigs[j]) <= res.resolution);
    CHECK(res.fidelities[j] >= 0.99);
  }
}

TEST_CASE("property: lcu simulation contract and zero-mode weight") {
  for (const auto& r : check_simulation_grid(31)) {
    INFO(r.check);
    CHECK(r.violations == 0);
  }
  CHECK(check_zero_mode_weight(32).violations == 0);
}
