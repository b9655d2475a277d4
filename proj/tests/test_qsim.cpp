#include <doctest.h>

#include <cmath>
#include <random>

#include "qlap/error.hpp"
#include "qlap/qsim.hpp"

using namespace qlap;

namespace {

CMatrix hadamard() {
  CMatrix h(2, 2);
  h << 1, 1, 1, -1;
  return h / std::sqrt(2.0);
}

CMatrix random_unitary(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<CMatrix> qr(m);
  return qr.householderQ();
}

RegisterLayout two_qubits() {
  return RegisterLayout({{"a", 1, RegisterKind::index, std::nullopt},
                         {"b", 1, RegisterKind::index, std::nullopt}});
}

}  // namespace

TEST_CASE("hadamard on |0>") {
  SimState s(RegisterLayout({{"q", 1, RegisterKind::index, std::nullopt}}));
  s.apply_unitary(hadamard(), {"q"});
  const CVector f = s.flatten();
  CHECK(std::abs(f(0) - 1 / std::sqrt(2.0)) <= 1e-15);
  CHECK(std::abs(f(1) - 1 / std::sqrt(2.0)) <= 1e-15);
}

TEST_CASE("identity leaves a state alone") {
  std::mt19937_64 rng(2);
  SimState s(two_qubits());
  s.apply_unitary(random_unitary(4, rng), {"a", "b"});
  const CVector before = s.flatten();
  s.apply_unitary(CMatrix::Identity(2, 2), {"b"});
  CHECK((s.flatten() - before).norm() == 0.0);
}

TEST_CASE("property: random unitaries preserve the norm") {
  std::mt19937_64 rng(3);
  SimState s(two_qubits());
  for (int k = 0; k < 100; ++k) {
    s.apply_unitary(random_unitary(4, rng), {k % 2 ? "a" : "b", k % 2 ? "b" : "a"});
    CHECK(std::abs(s.norm() - 1.0) <= 1e-12);
  }
}

TEST_CASE("target order: first target is the most significant") {
  SimState s(two_qubits());
  CMatrix x(2, 2);
  x << 0, 1, 1, 0;
  s.apply_unitary(x, {"b"});
  CHECK(std::abs(s.flatten()(1) - 1.0) <= 1e-15);  // |a=0, b=1>
  CMatrix cnot = CMatrix::Zero(4, 4);
  cnot(0, 0) = cnot(1, 1) = cnot(2, 3) = cnot(3, 2) = 1;
  s.apply_unitary(cnot, {"b", "a"});  // b controls a
  CHECK(std::abs(s.flatten()(3) - 1.0) <= 1e-15);
}

TEST_CASE("partial trace of |00> and of a Bell state") {
  SimState s(two_qubits());
  auto rho = partial_trace(s, {"a"});
  CHECK(std::abs(rho.matrix(0, 0) - 1.0) <= 1e-15);
  CHECK(std::abs(rho.matrix(1, 1)) <= 1e-15);

  s.apply_unitary(hadamard(), {"a"});
  CMatrix cnot = CMatrix::Zero(4, 4);
  cnot(0, 0) = cnot(1, 1) = cnot(2, 3) = cnot(3, 2) = 1;
  s.apply_unitary(cnot, {"a", "b"});
  rho = partial_trace(s, {"b"});
  CHECK((rho.matrix - CMatrix::Identity(2, 2) / 2.0).norm() <= 1e-15);
  rho.validate();
}

TEST_CASE("partial trace over arithmetic branches matches a dense outer product") {
  const FixedPointSpec fx{3, 1};
  RegisterLayout lay({{"q", 1, RegisterKind::index, std::nullopt},
                      {"x", 3, RegisterKind::arithmetic, fx},
                      {"r", 1, RegisterKind::index, std::nullopt}});
  // three branches with labels 0, 3, 5
  CVector flat = CVector::Zero(32);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (int lbl : {0, 3, 5})
    for (int q = 0; q < 2; ++q)
      for (int r = 0; r < 2; ++r) flat(q * 16 + lbl * 2 + r) = cplx(g(rng), g(rng));
  flat.normalize();
  const SimState s = SimState::from_flat(lay, flat);
  CHECK(s.branch_count() == 3);
  CHECK((s.flatten() - flat).norm() <= 1e-15);

  // keep q and r: rho[(q r),(q' r')] = sum_x psi(q x r) conj(psi(q' x r'))
  CMatrix want = CMatrix::Zero(4, 4);
  for (int q = 0; q < 2; ++q)
    for (int r = 0; r < 2; ++r)
      for (int q2 = 0; q2 < 2; ++q2)
        for (int r2 = 0; r2 < 2; ++r2)
          for (int x = 0; x < 8; ++x)
            want(q * 2 + r, q2 * 2 + r2) += flat(q * 16 + x * 2 + r) * std::conj(flat(q2 * 16 + x * 2 + r2));
  CHECK((partial_trace(s, {"q", "r"}).matrix - want).norm() <= 1e-14);

  // keep the arithmetic register alone
  CMatrix wx = CMatrix::Zero(8, 8);
  for (int x = 0; x < 8; ++x)
    for (int x2 = 0; x2 < 8; ++x2)
      for (int q = 0; q < 2; ++q)
        for (int r = 0; r < 2; ++r) wx(x, x2) += flat(q * 16 + x * 2 + r) * std::conj(flat(q * 16 + x2 * 2 + r));
  CHECK((partial_trace(s, {"x"}).matrix - wx).norm() <= 1e-14);
}

TEST_CASE("operator norm distance") {
  const CMatrix i2 = CMatrix::Identity(2, 2);
  CHECK(operator_norm_distance(i2, i2) == 0.0);
  CHECK(operator_norm_distance(i2, CMatrix::Zero(2, 2)) == doctest::Approx(1.0).epsilon(1e-15));

  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  CMatrix a(8, 8), b(8, 8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      a(i, j) = cplx(g(rng), g(rng));
      b(i, j) = cplx(g(rng), g(rng));
    }
  // power iteration on (A-B)^dag (A-B)
  const CMatrix d = a - b;
  const CMatrix m = d.adjoint() * d;
  CVector v = CVector::Ones(8).normalized();
  double mu = 0;
  for (int it = 0; it < 5000; ++it) {
    const CVector w = m * v;
    mu = v.dot(w).real();
    v = w.normalized();
  }
  CHECK(std::abs(operator_norm_distance(a, b) - std::sqrt(mu)) <= 1e-8);
}

TEST_CASE("sampling |0> always gives zero") {
  SimState s(RegisterLayout({{"q", 2, RegisterKind::index, std::nullopt}}));
  const auto h = sample_measurement(s, "q", 1000, 1);
  REQUIRE(h.size() == 1);
  CHECK(h.begin()->first == 0);
  CHECK(h.begin()->second == 1000);
}

TEST_CASE("sampling |+> is binomial and replays under a seed") {
  SimState s(RegisterLayout({{"q", 1, RegisterKind::index, std::nullopt}}));
  s.apply_unitary(hadamard(), {"q"});
  const std::size_t shots = 10000;
  const auto h = sample_measurement(s, "q", shots, 77);
  const double sigma = std::sqrt(shots * 0.25);
  CHECK(std::abs(double(h.at(0)) - shots / 2.0) <= 5 * sigma);
  CHECK(h.at(0) + h.at(1) == shots);
  CHECK(sample_measurement(s, "q", shots, 77) == h);
}

TEST_CASE("fixed point encode and decode") {
  const FixedPointSpec f{8, 2};
  CHECK(f.frac_bits() == 6);
  CHECK(f.resolution() == 1.0 / 64);
  CHECK(f.max_value() == doctest::Approx(4.0 - 1.0 / 64));
  CHECK(f.decode(f.encode(1.25)) == 1.25);
  // ties to even
  CHECK(f.encode(1.0 / 128) == 0);
  CHECK(f.encode(3.0 / 128) == 2);
  CHECK_THROWS_AS(f.encode(4.0), Error);
  CHECK_THROWS_AS(f.encode(-0.5), Error);
}

TEST_CASE("label updates and marginals") {
  const FixedPointSpec fx{4, 1};
  SimState s(RegisterLayout({{"i", 1, RegisterKind::index, std::nullopt},
                             {"x", 4, RegisterKind::arithmetic, fx}}));
  s.apply_unitary(hadamard(), {"i"});
  s.transform_labels({"i"}, [](BranchKey& k, SimState::ControlValues c) { k[0] ^= c[0] ? 5 : 2; });
  CHECK(s.branch_count() == 2);
  const auto m = s.marginal("x");
  CHECK(m.at(2) == doctest::Approx(0.5));
  CHECK(m.at(5) == doctest::Approx(0.5));
  CHECK_THROWS_AS(
      s.transform_labels({}, [](BranchKey& k, SimState::ControlValues) { k[0] = 99; }), Error);
}

TEST_CASE("non-unitary gates are rejected") {
  SimState s(RegisterLayout({{"q", 1, RegisterKind::index, std::nullopt}}));
  CMatrix m(2, 2);
  m << 1, 1, 0, 1;
  CHECK_THROWS_AS(s.apply_unitary(m, {"q"}), Error);
}
