// Command-line front end. Talks to the library through the C interface only.
#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include "qlap/qlap.h"

namespace {

int report_error(qlap_status s) {
  std::cerr << "qlap: " << qlap_status_name(s) << " error: " << qlap_last_error() << "\n";
  return 2;
}

int cmd_run(const std::string& config, bool verify_only, const std::string& target,
            const std::string& seed, const std::string& out) {
  qlap_config* cfg = nullptr;
  qlap_status s = qlap_config_load(config.c_str(), &cfg);
  if (s != QLAP_OK) return report_error(s);
  auto set = [&](const char* key, const std::string& v) {
    if (s == QLAP_OK && !v.empty()) s = qlap_config_set(cfg, key, v.c_str());
  };
  set("target", target);
  set("seed", seed);
  set("output", out);
  if (s != QLAP_OK) {
    qlap_config_free(cfg);
    return report_error(s);
  }
  qlap_result* res = nullptr;
  s = qlap_run(cfg, verify_only ? 1 : 0, &res);
  qlap_config_free(cfg);
  if (s != QLAP_OK) return report_error(s);
  const int code = qlap_result_exit_code(res);
  const std::string msg = qlap_result_message(res);
  if (!msg.empty()) (code == 0 ? std::cout : std::cerr) << msg << "\n";
  qlap_result_free(res);
  return code;
}

int cmd_verify(const std::string& sizes, std::uint64_t seed, const std::string& out) {
  char* text = nullptr;
  int all_pass = 0;
  const qlap_status s = qlap_verify_suite(sizes.c_str(), seed, &text, &all_pass);
  if (s != QLAP_OK) return report_error(s);
  const std::string body = text;
  qlap_string_free(text);
  if (out.empty() || out == "-") {
    std::cout << body;
  } else {
    std::ofstream f(out, std::ios::binary);
    f << body;
    if (!f) {
      std::cerr << "qlap: io error: cannot write " << out << "\n";
      return 2;
    }
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph Laplacian eigensolver simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(qlap_version()));

  std::string config, target, seed, out;
  bool verify_only = false;
  auto* run = app.add_subcommand("run", "run the pipeline from a config file");
  run->add_option("--config", config, "key = value config file")->required();
  run->add_flag("--verify-only", verify_only, "stop after block-encoding verification");
  run->add_option("--target", target, "L, Ls, Lr or W");
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--out", out, "report path, overrides the config output");

  std::string sizes = "small", vout;
  std::uint64_t vseed = 20240601;
  auto* verify = app.add_subcommand("verify", "run the property suites");
  verify->add_option("--sizes", sizes, "small or medium");
  verify->add_option("--seed", vseed, "suite seed");
  verify->add_option("--out", vout, "JSON lines output, - for stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (*run) return cmd_run(config, verify_only, target, seed, out);
  return cmd_verify(sizes, vseed, vout);
}
