#include "qlap/harness.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "qlap/error.hpp"

namespace qlap {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  require(ec == std::errc() && ptr == v.data() + v.size() && std::isfinite(x), ErrorKind::config,
          "config key '" + key + "': '" + v + "' is not a number");
  return x;
}

template <class T>
T to_integer(const std::string& key, const std::string& v) {
  T x{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  require(ec == std::errc() && ptr == v.data() + v.size(), ErrorKind::config,
          "config key '" + key + "': '" + v + "' is not an integer");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(ErrorKind::config, "config key '" + key + "': '" + v + "' is not a boolean");
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> m = {
      {"input", [](RunConfig& c, auto&, auto& v) { c.input = unquote(v); }},
      {"output", [](RunConfig& c, auto&, auto& v) { c.output = unquote(v); }},
      {"target", [](RunConfig& c, auto&, auto& v) { c.target = unquote(v); }},
      {"lambda", [](RunConfig& c, auto& k, auto& v) { c.lambda = to_double(k, v); }},
      {"p", [](RunConfig& c, auto& k, auto& v) { c.p = to_integer<int>(k, v); }},
      {"d", [](RunConfig& c, auto& k, auto& v) { c.d = to_integer<std::size_t>(k, v); }},
      {"norm_case", [](RunConfig& c, auto&, auto& v) { c.norm_case = unquote(v); }},
      {"estimator_mode", [](RunConfig& c, auto&, auto& v) { c.estimator_mode = unquote(v); }},
      {"eps_x", [](RunConfig& c, auto& k, auto& v) { c.eps_x = to_double(k, v); }},
      {"eps_a", [](RunConfig& c, auto& k, auto& v) { c.eps_a = to_double(k, v); }},
      {"eps_d", [](RunConfig& c, auto& k, auto& v) { c.eps_d = to_double(k, v); }},
      {"eps_ip", [](RunConfig& c, auto& k, auto& v) { c.eps_ip = to_double(k, v); }},
      {"delta", [](RunConfig& c, auto& k, auto& v) { c.delta = to_double(k, v); }},
      {"fixed_bits", [](RunConfig& c, auto& k, auto& v) { c.fixed_bits = to_integer<int>(k, v); }},
      {"sim_path", [](RunConfig& c, auto&, auto& v) { c.sim_path = unquote(v); }},
      {"sim_eps", [](RunConfig& c, auto& k, auto& v) { c.sim_eps = to_double(k, v); }},
      {"taylor_order", [](RunConfig& c, auto& k, auto& v) { c.taylor_order = to_integer<int>(k, v); }},
      {"t", [](RunConfig& c, auto& k, auto& v) { c.t = to_double(k, v); }},
      {"qpe_bits", [](RunConfig& c, auto& k, auto& v) { c.qpe_bits = to_integer<int>(k, v); }},
      {"qpe_shots", [](RunConfig& c, auto& k, auto& v) { c.qpe_shots = to_integer<std::size_t>(k, v); }},
      {"seed", [](RunConfig& c, auto& k, auto& v) { c.seed = to_integer<std::uint64_t>(k, v); }},
      {"varsigma1", [](RunConfig& c, auto& k, auto& v) { c.varsigma1 = to_double(k, v); }},
      {"classical_trace", [](RunConfig& c, auto& k, auto& v) { c.classical_trace = to_bool(k, v); }},
  };
  return m;
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::config,
            "config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    require(it != setters().end(), ErrorKind::config, "unknown config key '" + key + "'");
    require(seen.insert(key).second, ErrorKind::config, "config key '" + key + "' repeated");
    it->second(c, key, val);
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorKind::io, "cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  RunConfig c = parse(ss.str());
  // Relative input paths are taken from the config file's directory.
  if (!c.input.empty() && std::filesystem::path(c.input).is_relative()) {
    const auto base = std::filesystem::path(path).parent_path();
    if (!base.empty() && !std::filesystem::exists(c.input)) c.input = (base / c.input).string();
  }
  return c;
}

std::string RunConfig::to_text() const {
  std::ostringstream o;
  o << "input = " << input << "\n"
    << "output = " << output << "\n"
    << "target = " << target << "\n"
    << "lambda = " << num(lambda) << "\n"
    << "p = " << p << "\n"
    << "d = " << d << "\n"
    << "norm_case = " << norm_case << "\n"
    << "estimator_mode = " << estimator_mode << "\n"
    << "eps_x = " << num(eps_x) << "\n"
    << "eps_a = " << num(eps_a) << "\n"
    << "eps_d = " << num(eps_d) << "\n"
    << "eps_ip = " << num(eps_ip) << "\n"
    << "delta = " << num(delta) << "\n"
    << "fixed_bits = " << fixed_bits << "\n"
    << "sim_path = " << sim_path << "\n"
    << "sim_eps = " << num(sim_eps) << "\n"
    << "taylor_order = " << taylor_order << "\n"
    << "t = " << num(t) << "\n"
    << "qpe_bits = " << qpe_bits << "\n"
    << "qpe_shots = " << qpe_shots << "\n"
    << "seed = " << seed << "\n"
    << "varsigma1 = " << num(varsigma1) << "\n"
    << "classical_trace = " << (classical_trace ? "true" : "false") << "\n";
  return o.str();
}

void RunConfig::validate() const {
  require(!input.empty(), ErrorKind::config, "config: input is required");
  parse_target(target);
  require(lambda > 0, ErrorKind::config, "config: lambda must be positive");
  require(p >= 0 && p <= 15, ErrorKind::config, "config: p must lie in [0, 15]");
  require(d >= 1, ErrorKind::config, "config: d must be at least 1");
  require(norm_case == "auto" || norm_case == "unit" || norm_case == "general", ErrorKind::config,
          "config: norm_case must be auto, unit or general");
  require(estimator_mode == "exact" || estimator_mode == "noisy", ErrorKind::config,
          "config: estimator_mode must be exact or noisy");
  require(eps_x >= 0 && eps_a >= 0 && eps_d >= 0 && eps_ip >= 0, ErrorKind::config,
          "config: error budgets must be nonnegative");
  require(delta >= 0 && delta <= 0.5, ErrorKind::config, "config: delta must lie in [0, 1/2]");
  if (estimator_mode == "noisy")
    require(eps_d > 0, ErrorKind::config, "config: noisy estimators need eps_d > 0");
  require(fixed_bits >= 8 && fixed_bits <= 62, ErrorKind::config,
          "config: fixed_bits must lie in [8, 62]");
  require(sim_path == "oracle_exponential" || sim_path == "lcu_taylor", ErrorKind::config,
          "config: sim_path must be oracle_exponential or lcu_taylor");
  require(sim_eps > 0 && sim_eps < 1, ErrorKind::config, "config: sim_eps must lie in (0, 1)");
  require(taylor_order >= 0, ErrorKind::config, "config: taylor_order must be >= 0");
  require(t >= 0, ErrorKind::config, "config: t must be >= 0");
  require(qpe_bits >= 1 && qpe_bits <= 16, ErrorKind::config, "config: qpe_bits must lie in [1, 16]");
  require(qpe_shots >= 1, ErrorKind::config, "config: qpe_shots must be positive");
  require(varsigma1 > 0 && varsigma1 <= 0.5, ErrorKind::config,
          "config: varsigma1 must lie in (0, 1/2]");
}

PipelineConfig RunConfig::pipeline() const {
  PipelineConfig pc;
  pc.target = parse_target(target);
  pc.d = d;
  pc.encoding.norm_case = norm_case == "unit"      ? NormCase::unit
                          : norm_case == "general" ? NormCase::general
                                                   : NormCase::auto_detect;
  pc.encoding.use_classical_trace = classical_trace;
  PrepOptions& po = pc.encoding.prep;
  po.eps_x = eps_x;
  po.eps_a = eps_a;
  po.seed = seed;
  po.fixed_bits = fixed_bits;
  if (estimator_mode == "noisy") {
    po.distance = {EstimatorMode::noisy, eps_d, delta, seed + 101};
    if (eps_ip > 0) po.inner = {EstimatorMode::noisy, eps_ip, delta, seed + 202};
  }
  pc.path = sim_path == "lcu_taylor" ? SimPath::lcu_taylor : SimPath::oracle_exponential;
  pc.sim_eps = sim_eps;
  pc.taylor_order = taylor_order;
  pc.t = t;
  pc.qpe.bits = qpe_bits;
  pc.qpe.shots = qpe_shots;
  pc.qpe.seed = seed;
  pc.negative_power.varsigma1 = varsigma1;
  return pc;
}

Json RunConfig::to_json() const {
  return Json{{"input", input},           {"target", target},
              {"lambda", lambda},         {"p", p},
              {"d", d},                   {"norm_case", norm_case},
              {"estimator_mode", estimator_mode},
              {"eps_x", eps_x},           {"eps_a", eps_a},
              {"eps_d", eps_d},           {"eps_ip", eps_ip},
              {"delta", delta},           {"fixed_bits", fixed_bits},
              {"sim_path", sim_path},     {"sim_eps", sim_eps},
              {"taylor_order", taylor_order},
              {"t", t},                   {"qpe_bits", qpe_bits},
              {"qpe_shots", qpe_shots},   {"seed", seed},
              {"varsigma1", varsigma1},   {"classical_trace", classical_trace}};
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    require(f.good(), ErrorKind::io, "cannot write " + tmp);
    f << content;
    f.flush();
    require(f.good(), ErrorKind::io, "write to " + tmp + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorKind::io, "cannot move report into place at " + path);
  }
}

RunOutcome run(const RunConfig& cfg, bool verify_only) {
  RunOutcome out;
  VertexSet vs;
  try {
    cfg.validate();
    vs = read_vertices(cfg.input);
  } catch (const Error& e) {
    out.exit_code = 2;
    out.message = std::string(error_kind_name(e.kind())) + " error: " + e.what();
    return out;
  }
  Json rep;
  rep["config"] = cfg.to_json();
  try {
    PipelineConfig pc = cfg.pipeline();
    pc.verify_only = verify_only;
    const KernelParams kp = KernelParams::make(cfg.lambda, cfg.p);
    PipelineResult r = full_pipeline(vs, kp, pc);
    for (auto it = r.report.begin(); it != r.report.end(); ++it) rep[it.key()] = it.value();
    out.exit_code = r.pass ? 0 : 1;
    out.message = r.pass ? "all verifications passed" : "verification failed";
    for (const auto& f : r.failures) out.message += "\n  " + f;
  } catch (const Error& e) {
    const auto* se = dynamic_cast<const StageError*>(&e);
    rep["pass"] = false;
    rep["error"] = Json{{"stage", se ? se->stage() : std::string("config")},
                        {"kind", error_kind_name(e.kind())},
                        {"message", e.what()}};
    const bool cfg_err = e.kind() == ErrorKind::config || e.kind() == ErrorKind::io;
    out.exit_code = cfg_err ? 2 : 1;
    out.message = std::string(error_kind_name(e.kind())) + " error: " + e.what();
    if (cfg_err) return out;
  }
  try {
    write_file_atomic(cfg.output, dump_json(rep) + "\n");
    out.report_written = true;
  } catch (const Error& e) {
    out.exit_code = 2;
    out.message = std::string("io error: ") + e.what();
  }
  return out;
}

SuiteSize parse_suite_size(const std::string& s) {
  if (s == "small") return SuiteSize::small;
  if (s == "medium") return SuiteSize::medium;
  fail(ErrorKind::config, "unknown suite size '" + s + "' (expected small or medium)");
}

}  // namespace qlap
