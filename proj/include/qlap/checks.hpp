#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qlap/graph_model.hpp"
#include "qlap/report.hpp"

namespace qlap {

// Outcome of one property check: `violations` out of `trials`, and the
// worst measured / bound ratio seen.
struct CheckResult {
  std::string suite, check;
  std::size_t trials = 0;
  std::size_t violations = 0;
  double max_ratio = 0.0;
  bool pass = false;
  Json detail = Json::object();

  std::string json_line() const;
};

// n vertices in m dimensions with norms drawn from [lo, hi]; lo == hi == 1
// gives unit vectors.
VertexSet random_vertices(std::size_t n, std::size_t m, double lo, double hi, std::mt19937_64& rng);

CheckResult check_scaled_state_error(std::size_t trials, std::uint64_t seed);
CheckResult check_tensor_power_error(std::size_t trials, std::uint64_t seed, int max_p = 5);
// eq17 per vertex and eq18 global, unit-norm weight state.
std::vector<CheckResult> check_phi_chain(std::size_t trials, std::uint64_t seed);
// eq34, eq35 and the max-norm regime check, general-norm weight state.
std::vector<CheckResult> check_psi_chain(std::size_t trials, std::uint64_t seed);
// eq54 on the degree state, noisy distances with delta = 0.
CheckResult check_degree_chain(std::size_t trials, std::uint64_t seed);
CheckResult check_exp_gate_exhaustive(int bits);
CheckResult check_truncation_bound(std::size_t trials, std::uint64_t seed);
CheckResult check_purified_encoding_exact(std::size_t trials, std::uint64_t seed);
std::vector<CheckResult> check_lcu_error_law(std::size_t trials, std::uint64_t seed);
CheckResult check_qpe_exact_phases(std::uint64_t seed);
// lcu_taylor error contract plus query-count trends over the eps, t, n grid.
std::vector<CheckResult> check_simulation_grid(std::uint64_t seed);
CheckResult check_zero_mode_weight(std::uint64_t seed);

}  // namespace qlap
