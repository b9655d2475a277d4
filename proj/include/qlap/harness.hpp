#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qlap/spectral.hpp"

namespace qlap {

// Flat key = value run configuration. Every field has a default; unknown
// keys are rejected.
struct RunConfig {
  std::string input;
  std::string output = "report.json";
  std::string target = "L";
  double lambda = 0.5;
  int p = 4;
  std::size_t d = 1;
  std::string norm_case = "auto";          // auto | unit | general
  std::string estimator_mode = "exact";    // exact | noisy
  double eps_x = 0.0;
  double eps_a = 0.0;
  double eps_d = 0.0;                      // distance estimation noise
  double eps_ip = 0.0;                     // inner product estimation noise
  double delta = 0.0;                      // estimator failure is 2 delta
  int fixed_bits = 56;
  std::string sim_path = "oracle_exponential";
  double sim_eps = 1e-3;
  int taylor_order = 0;
  double t = 0.0;
  int qpe_bits = 10;
  std::size_t qpe_shots = 8192;
  std::uint64_t seed = 1;
  double varsigma1 = 1e-3;
  bool classical_trace = false;

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);
  std::string to_text() const;
  // Semantic checks; throws config errors.
  void validate() const;
  PipelineConfig pipeline() const;
  Json to_json() const;
};

struct RunOutcome {
  int exit_code = 0;  // 0 ok, 1 verification failure, 2 I/O or config error
  std::string message;
  bool report_written = false;
};

// temp file + rename
void write_file_atomic(const std::string& path, const std::string& content);

RunOutcome run(const RunConfig& cfg, bool verify_only = false);

enum class SuiteSize { small, medium };
SuiteSize parse_suite_size(const std::string& s);

// One JSON object per line, one line per check. Deterministic.
std::vector<std::string> verify_suite(SuiteSize size, std::uint64_t seed = 20240601);

}  // namespace qlap
