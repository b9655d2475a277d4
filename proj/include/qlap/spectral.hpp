#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qlap/block_encoding.hpp"
#include "qlap/report.hpp"

namespace qlap {

enum class SimPath { oracle_exponential, lcu_taylor };
const char* sim_path_name(SimPath p);

struct SimulationConfig {
  double t = 1.0;
  double eps = 1e-3;
  SimPath path = SimPath::oracle_exponential;
  int order = 0;  // Taylor order K for lcu_taylor, 0 picks it from eps
};

struct SimulationResult {
  SimPath path = SimPath::oracle_exponential;
  double t = 0.0, eps = 0.0, alpha = 0.0;
  CMatrix unitary;  // encoded block, approximately exp(-iHt)
  CMatrix exact;    // exp(-iHt) of the encoded H
  double claimed_epsilon = 0.0;
  double measured_error = 0.0;
  int segments = 0;
  int order = 0;
  long query_count = 0;
  int ancillas = 0;  // a + 2
  bool pass = false;
};

// H = alpha * block of be. oracle_exponential: exact exponential of the
// verified block. lcu_taylor: r = ceil(alpha t / ln 2) segments, each a
// truncated Taylor LCU padded to beta = 2 and fixed by one oblivious
// amplitude amplification step (block 3B - 4BB^dag B).
SimulationResult simulate_hamiltonian(const BlockEncoding& be, const SimulationConfig& cfg);
// Smallest K with r * 2 * 2 (ln 2)^(K+1)/(K+1)! <= eps / 2.
int taylor_order_for(int segments, double eps);
// Gate-level version of the lcu_taylor path (fresh ancilla copies per
// Taylor factor, ancillas reused across segments). Small instances only.
BlockEncoding lcu_taylor_circuit(const BlockEncoding& be, double t, int segments, int order);

struct QpeConfig {
  int bits = 10;
  std::size_t shots = 8192;
  std::uint64_t seed = 1;
  double t = 1.0;
};

struct QpeOutcome {
  int bits = 0;
  double t = 0.0;
  std::vector<double> probabilities;     // per phase bin
  std::vector<CMatrix> bin_density;      // normalised system state per bin
  std::vector<std::size_t> samples;      // sampled bins, in draw order
  std::vector<std::size_t> histogram;    // per bin
};

// Textbook QPE with controlled powers of u^dag on the system half of
// sum_j |j>|j> / sqrt(active); phases come out as gamma t / 2 pi.
QpeOutcome run_qpe(const CMatrix& u, std::size_t active, const QpeConfig& cfg);

enum class ExtractOrder { smallest_nonzero, largest };

struct EigenCluster {
  double phase = 0.0;  // signed when requested
  double value = 0.0;  // 2 pi phase / t
  std::size_t count = 0;
  int multiplicity = 1;
  CMatrix basis;  // orthonormal columns
};

struct SpectralResult {
  std::vector<EigenCluster> clusters;  // returned, in extraction order
  std::vector<EigenCluster> all;       // every resolved cluster, ascending
  double zero_weight = 0.0;
  std::size_t d = 0;
  std::vector<double> eigenvalues() const;
};

struct ExtractOptions {
  std::size_t d = 1;
  double zero_threshold = 0.0;  // in phase units; 0 disables zero removal
  bool signed_phases = false;
  ExtractOrder order = ExtractOrder::smallest_nonzero;
  std::size_t min_count = 0;    // 0: max(10, shots / (10 active))
  std::size_t active = 0;
};

SpectralResult extract_d_smallest(const QpeOutcome& q, const ExtractOptions& opt);

// rho2^-1/2 v normalised, on the support of rho2.
std::vector<CVector> recover_Lr_eigenvectors(const SpectralResult& r, const CMatrix& rho2_block);

enum class Target { L, Ls, Lr, W };
const char* target_name(Target t);
Target parse_target(const std::string& s);

struct PipelineConfig {
  Target target = Target::L;
  std::size_t d = 1;
  EncodingOptions encoding;
  SimPath path = SimPath::oracle_exponential;
  double sim_eps = 1e-3;
  int taylor_order = 0;
  double t = 0.0;  // 0: 0.9 of the no-wraparound limit
  QpeConfig qpe;
  NegativePowerParams negative_power;
  bool verify_only = false;
};

struct PipelineResult {
  Target target = Target::L;
  SpectralResult spectral;
  std::vector<double> reference_eigenvalues;
  std::vector<double> fidelities;
  std::vector<double> residuals;  // L_r target
  std::vector<VerificationRecord> records;
  std::optional<SimulationResult> simulation;
  double t = 0.0;
  double resolution = 0.0;  // eigenvalue width of one phase bin
  bool pass = false;
  std::vector<std::string> failures;
  Json report;
};

// graph-model -> state-prep -> block-encoding -> simulation -> qpe ->
// extraction. Stage failures are rethrown as StageError.
PipelineResult full_pipeline(const VertexSet& vs, const KernelParams& kp,
                             const PipelineConfig& cfg);

}  // namespace qlap
