#include <doctest.h>

#include <cmath>
#include <random>

#include "oracle_values.hpp"
#include "qlap/block_encoding.hpp"
#include "qlap/checks.hpp"
#include "qlap/error.hpp"
#include "qlap/state_prep.hpp"
#include "test_support.hpp"

using namespace qlap;

namespace {

RMatrix real_block(const CMatrix& m, std::size_t n) {
  return testing::active_block(m, n).real();
}

}  // namespace

TEST_CASE("coefficient states") {
  SimState one = prepare_coefficient_state({1.0});
  CHECK(std::abs(one.flatten()(0) - 1.0) <= 1e-15);

  const CVector u = prepare_coefficient_state({1, 1, 1, 1}).flatten();
  for (int k = 0; k < 4; ++k) CHECK(std::abs(u(k) - 0.5) <= 1e-15);

  const auto kp = KernelParams::make(0.5, 3);
  const CVector a = prepare_coefficient_state(kp.a_tilde).flatten();
  for (int k = 0; k < 4; ++k) CHECK(std::abs(a(k) - oracle::amps_l05_p3[k]) <= 1e-12);
}

TEST_CASE("perturbed coefficient amplitudes sit exactly eps away") {
  std::mt19937_64 rng(8);
  const auto kp = KernelParams::make(0.5, 4);
  const CVector exact = coefficient_amplitudes(kp.a_tilde, 0.0, nullptr);
  for (double eps : {1e-4, 1e-2, 0.3}) {
    const CVector bent = coefficient_amplitudes(kp.a_tilde, eps, &rng);
    CHECK(std::abs((bent - exact).norm() - eps) <= 1e-12);
    CHECK(std::abs(bent.norm() - 1.0) <= 1e-12);
  }
}

TEST_CASE("oracle states carry the injected error") {
  const auto vs = testing::cloud4();
  const QramOracle clean(vs), noisy(vs, 1e-3, 5);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(std::abs(clean.state(i).norm() - 1.0) <= 1e-14);
    CHECK(std::abs((noisy.state(i) - clean.state(i)).norm() - 1e-3) <= 1e-12);
    CHECK(is_unitary(noisy.unitary(i)));
  }
}

TEST_CASE("R_U leaves the k = 0 branch alone and loads x on k = 1") {
  auto run = [](std::vector<std::vector<double>> rows, Label k) {
    const auto vs = VertexSet::from_rows(rows);
    const QramOracle u(vs);
    SimState s(RegisterLayout({{"coeff", 1, RegisterKind::coefficient, std::nullopt},
                               {"d0", 1, RegisterKind::index, std::nullopt},
                               {"idx", 1, RegisterKind::index, std::nullopt}}));
    CMatrix x(2, 2);
    x << 0, 1, 1, 0;
    if (k) s.apply_unitary(x, {"coeff"});
    apply_R_U(s, "idx", "coeff", {"d0"}, u);
    return s.marginal("d0");
  };
  auto m = run({{0, 1}, {1, 0}}, 0);
  CHECK(m.at(0) == doctest::Approx(1.0));
  m = run({{1, 0}, {0, 1}}, 1);
  CHECK(m.at(0) == doctest::Approx(1.0));
  m = run({{0, 1}, {1, 0}}, 1);
  CHECK(m.at(1) == doctest::Approx(1.0));
}

TEST_CASE("weight-state overlaps reproduce the truncated kernel") {
  const auto vs = testing::on_circle({0.3, 1.1, 2.5, 4.0});
  const auto kp = KernelParams::make(0.5, 2);
  const auto ps = build_phi_state(vs, kp);
  const auto phi = vertex_branches(ps, std::sqrt(4.0));
  const RMatrix wu = build_taylor_weight_matrix_unit(vs, kp);
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(phi[i].norm() - 1.0) <= 1e-12);
    for (int j = 0; j < 4; ++j)
      if (i != j) CHECK(std::abs(phi[i].dot(phi[j]) - wu(i, j) / kp.a_tilde_sum) <= 1e-12);
  }
}

TEST_CASE("antipodal pair weight state") {
  const auto vs = VertexSet::from_rows({{1, 0}, {-1, 0}});
  const auto ps = build_phi_state(vs, KernelParams::make(0.5, 4));
  CHECK(std::abs(ps.rho.matrix(0, 1) - oracle::antipodal_rho0_offdiag) <= 1e-12);
  CHECK(std::abs(ps.rho.matrix(0, 0) - 0.5) <= 1e-12);
  CHECK(std::abs(ps.rho.matrix(1, 1) - 0.5) <= 1e-12);
}

TEST_CASE("rho0 identity on four unit vertices") {
  const auto vs = testing::on_circle({0.2, 1.4, 2.2, 5.0});
  const auto kp = KernelParams::make(0.5, 3);
  const auto ps = build_phi_state(vs, kp);
  const RMatrix wp = build_taylor_weight_matrix(vs, kp).off_diagonal;
  const RMatrix lhs = 4 * kp.a_tilde_sum * real_block(ps.rho.matrix, 4) -
                      kp.a_tilde_sum * RMatrix::Identity(4, 4) - wp;
  CHECK(lhs.cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(spectral_norm(lhs) <= 1e-9);
  ps.rho.validate();
}

TEST_CASE("general weight state equals the unit one on unit norms") {
  const auto vs = testing::on_circle({0.2, 1.4, 2.2, 5.0});
  const auto kp = KernelParams::make(0.5, 3);
  const auto r0 = build_phi_state(vs, kp).rho.matrix;
  const auto r1 = build_psi_state(vs, kp).rho.matrix;
  CHECK(operator_norm_distance(r0, r1) <= 1e-9);
}

TEST_CASE("general weight state on mixed norms") {
  const auto vs = VertexSet::from_rows({{0.5, 0.1}, {-0.4, 1.3}, {1.1, -0.6}, {-0.2, -0.7}});
  const auto kp = KernelParams::make(0.5, 2);
  const auto ps = build_psi_state(vs, kp);
  const TaylorWeights tw = build_taylor_weight_matrix(vs, kp);
  RMatrix want = tw.off_diagonal;
  want.diagonal() = tw.diagonal;
  const RMatrix got = ps.stats.Upsilon * real_block(ps.rho.matrix, 4);
  CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(std::abs(ps.stats.Upsilon - tw.diagonal.sum()) <= 1e-9);
  CHECK_THROWS_AS(build_psi_state(VertexSet::from_rows({{1, 0}}), kp), Error);
}

TEST_CASE("distance estimation") {
  const auto vs = VertexSet::from_rows({{1, 0}, {0, 1}, {0.3, -0.2}, {-0.9, 0.4}});
  const QramOracle data(vs);
  const FixedPointSpec spec = spec_for_range(8.0, 40);
  const DistanceEstimator exact(data, spec, {});
  CHECK(exact.value(1, 1) == 0.0);
  CHECK(std::abs(exact.value(0, 1) - 2.0) <= 1e-12);

  // noise-free failure rate: every estimate within eps
  const double eps = 1e-2;
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const DistanceEstimator d(data, spec, {EstimatorMode::noisy, eps, 0.0, seed});
    inside += std::abs(d.value(2, 3) - d.exact(2, 3)) <= eps;
  }
  CHECK(inside == 200);

  // with failures the miss count is binomial in 2 delta
  const double delta = 0.05;
  int miss = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const DistanceEstimator d(data, spec, {EstimatorMode::noisy, eps, delta, seed});
    miss += std::abs(d.value(2, 3) - d.exact(2, 3)) > eps;
  }
  const double mean = 200 * 2 * delta, sd = std::sqrt(200 * 2 * delta * (1 - 2 * delta));
  CHECK(miss <= mean + 5 * sd);
}

TEST_CASE("inner product estimation of identical and orthogonal halves") {
  const FixedPointSpec f{20, 1};
  auto run = [&](bool same) {
    SimState s(RegisterLayout({{"flag", 1, RegisterKind::flag, std::nullopt},
                               {"data", 1, RegisterKind::index, std::nullopt},
                               {"row", 1, RegisterKind::index, std::nullopt},
                               {"ip", 20, RegisterKind::arithmetic, f}}));
    CVector v = CVector::Zero(8);
    // flag 0 half holds |0>, flag 1 half |0> or |1>, both rows
    for (int r = 0; r < 2; ++r) {
      v(0 * 4 + 0 * 2 + r) = 0.5;
      v(1 * 4 + (same ? 0 : 1) * 2 + r) = 0.5;
    }
    s.set_dense(v);
    InnerProductEstimator est({});
    est.compute(s, "row", "flag", "ip");
    return est.values();
  };
  for (double x : run(true)) CHECK(x == doctest::Approx(1.0).epsilon(1e-12));
  for (double x : run(false)) CHECK(std::abs(x) <= 1e-15);
}

TEST_CASE("degree state inner products give the degrees") {
  const auto vs = testing::cloud4();
  const auto kp = KernelParams::make(0.5, 4);
  const auto g = build_graph(vs, kp);
  const auto ps = build_degree_state(vs, kp);
  for (int i = 0; i < 4; ++i)
    CHECK(std::abs(3 * ps.inner_products[i] - g.D(i, i)) <= 1e-12);
  // noisy distances move them by at most lambda eps_d per entry sum
  const double eps = 1e-3;
  PrepOptions opt;
  opt.distance = {EstimatorMode::noisy, eps, 0.0, 3};
  const auto noisy = build_degree_state(vs, kp, opt);
  for (int i = 0; i < 4; ++i)
    CHECK(std::abs(noisy.inner_products[i] - g.D(i, i) / 3) <= kp.lambda * eps);
}

TEST_CASE("degree state of two vertices and of a regular graph") {
  const auto kp = KernelParams::make(0.5, 4);
  const auto two = build_degree_state(VertexSet::from_rows({{0.2, 0.1}, {1.4, -0.3}}), kp);
  CHECK(std::abs(two.rho.matrix(0, 0) - 0.5) <= 1e-12);
  CHECK(std::abs(two.rho.matrix(1, 1) - 0.5) <= 1e-12);
  const auto sq = build_degree_state(testing::square(), kp);
  CHECK(operator_norm_distance(testing::active_block(sq.rho.matrix, 4),
                               CMatrix::Identity(4, 4) / 4.0) <= 1e-12);
  CHECK(std::abs(sq.stats.p0 - std::exp(-1.0) * 2.0 / 3 - std::exp(-2.0) / 3) <= 1e-12);
}

TEST_CASE("degree state on an asymmetric graph") {
  const auto vs = testing::cloud4();
  const auto kp = KernelParams::make(0.5, 4);
  const auto g = build_graph(vs, kp);
  const auto ps = build_degree_state(vs, kp);
  for (int i = 0; i < 4; ++i)
    CHECK(std::abs(ps.rho.matrix(i, i).real() - g.D(i, i) / g.trace_D) <= 1e-12);
  CHECK(std::abs(estimate_trace_D(ps.stats, 4) - g.trace_D) <= 1e-9);
}

TEST_CASE("amplitude amplification examples") {
  SimState s(RegisterLayout({{"q", 2, RegisterKind::index, std::nullopt}}));
  auto good0 = [](const BranchKey&, std::size_t x) { return x == 0; };
  auto st = amplitude_amplification(s, good0);
  CHECK(st.iterations == 0);

  CVector v = CVector::Constant(4, 0.5);
  s.set_dense(v);
  st = amplitude_amplification(s, good0);
  CHECK(st.initial_amplitude == doctest::Approx(0.25));
  CHECK(st.iterations == 1);
  CHECK(st.residual <= 1e-15);
  CHECK(std::abs(std::abs(s.flatten()(0)) - 1.0) <= 1e-15);

  // i != j over a 4 x 4 uniform superposition
  SimState p(RegisterLayout({{"i", 2, RegisterKind::index, std::nullopt},
                             {"j", 2, RegisterKind::index, std::nullopt}}));
  p.set_dense(CVector::Constant(16, 0.25));
  auto off = [&](const BranchKey&, std::size_t x) {
    return p.layout().dense_value(x, "i") != p.layout().dense_value(x, "j");
  };
  st = amplitude_amplification(p, off);
  CHECK(st.initial_amplitude == doctest::Approx(0.75));
  CHECK(st.nominal_iterations == grover_iterations(0.75));
  CHECK(st.iterations == 1);
  CHECK(p.weight([&](const BranchKey& k, std::size_t x) { return !off(k, x); }) <= 1e-30);
  CHECK(std::abs(p.norm() - 1.0) <= 1e-14);
}

TEST_CASE("grover counts") {
  CHECK(grover_iterations(1.0) == 0);
  CHECK(grover_iterations(0.25) == 1);
  CHECK(grover_iterations(1.0 / 1024) == 25);
  CHECK_THROWS_AS(grover_iterations(0.0), Error);
}

TEST_CASE("error bound formulas") {
  CHECK(phi_error_bound(4, 3, 1e-3) == doctest::Approx(2 * 9 * 1e-3));
  const double a = KernelParams::make(0.5, 3).a_sum;
  CHECK(psi_error_bound(a, 4, 3, 0.8, 1e-3) == doctest::Approx(std::sqrt(4 * a) * 9e-3));
  CHECK(psi_error_bound(a, 4, 3, 1.5, 1e-3) ==
        doctest::Approx(std::sqrt(4 * a) * 9e-3 * std::pow(1.5, 3)));
  CHECK(degree_error_bound(0.5, 1e-2, 0.25) == doctest::Approx(0.5 * 1e-2 / 1.0));
}

TEST_CASE("property: weight-state error chains stay inside their bounds") {
  for (const auto& r : check_phi_chain(60, 101)) {
    INFO(r.check);
    CHECK(r.violations == 0);
  }
  for (const auto& r : check_psi_chain(40, 102)) {
    INFO(r.check);
    CHECK(r.violations == 0);
  }
  CHECK(check_degree_chain(40, 103).violations == 0);
}
