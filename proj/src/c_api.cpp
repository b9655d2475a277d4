#include "qlap/qlap.h"

#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>

#include "qlap/error.hpp"
#include "qlap/harness.hpp"

struct qlap_config {
  qlap::RunConfig cfg;
};

struct qlap_result {
  qlap::RunOutcome outcome;
};

namespace {

thread_local std::string g_last_error;

qlap_status status_of(qlap::ErrorKind k) {
  using qlap::ErrorKind;
  switch (k) {
    case ErrorKind::input: return QLAP_ERR_INPUT;
    case ErrorKind::contract: return QLAP_ERR_CONTRACT;
    case ErrorKind::overflow: return QLAP_ERR_OVERFLOW;
    case ErrorKind::range: return QLAP_ERR_RANGE;
    case ErrorKind::degenerate: return QLAP_ERR_DEGENERATE;
    case ErrorKind::amplification: return QLAP_ERR_AMPLIFICATION;
    case ErrorKind::resolution: return QLAP_ERR_RESOLUTION;
    case ErrorKind::verification: return QLAP_ERR_VERIFICATION;
    case ErrorKind::io: return QLAP_ERR_IO;
    case ErrorKind::config: return QLAP_ERR_CONFIG;
  }
  return QLAP_ERR_INTERNAL;
}

template <class F>
qlap_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return QLAP_OK;
  } catch (const qlap::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return QLAP_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return QLAP_ERR_INTERNAL;
  }
}

qlap_status null_arg(const char* what) {
  g_last_error = std::string("null argument: ") + what;
  return QLAP_ERR_NULL;
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size() + 1);
  return p;
}

}  // namespace

extern "C" {

const char* qlap_version(void) { return "0.1.0"; }

const char* qlap_last_error(void) { return g_last_error.c_str(); }

const char* qlap_status_name(qlap_status s) {
  switch (s) {
    case QLAP_OK: return "ok";
    case QLAP_ERR_INPUT: return "input";
    case QLAP_ERR_CONTRACT: return "contract";
    case QLAP_ERR_OVERFLOW: return "overflow";
    case QLAP_ERR_RANGE: return "range";
    case QLAP_ERR_DEGENERATE: return "degenerate";
    case QLAP_ERR_AMPLIFICATION: return "amplification";
    case QLAP_ERR_RESOLUTION: return "resolution";
    case QLAP_ERR_VERIFICATION: return "verification";
    case QLAP_ERR_IO: return "io";
    case QLAP_ERR_CONFIG: return "config";
    case QLAP_ERR_INTERNAL: return "internal";
    case QLAP_ERR_NULL: return "null";
  }
  return "unknown";
}

qlap_status qlap_config_load(const char* path, qlap_config** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new qlap_config{qlap::RunConfig::load(path)}; });
}

qlap_status qlap_config_parse(const char* text, qlap_config** out) {
  if (!text) return null_arg("text");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new qlap_config{qlap::RunConfig::parse(text)}; });
}

qlap_status qlap_config_set(qlap_config* cfg, const char* key, const char* value) {
  if (!cfg) return null_arg("cfg");
  if (!key) return null_arg("key");
  if (!value) return null_arg("value");
  return guarded([&] {
    // Re-parse the current text with the one line swapped, so the same
    // validation applies as for a file.
    std::istringstream in(cfg->cfg.to_text());
    std::ostringstream text;
    std::string line;
    const std::string k = key;
    while (std::getline(in, line))
      if (line.compare(0, k.size() + 3, k + " = ") != 0) text << line << '\n';
    text << k << " = " << value << '\n';
    cfg->cfg = qlap::RunConfig::parse(text.str());
  });
}

qlap_status qlap_config_text(const qlap_config* cfg, char** out) {
  if (!cfg) return null_arg("cfg");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = dup_string(cfg->cfg.to_text()); });
}

void qlap_config_free(qlap_config* cfg) { delete cfg; }

qlap_status qlap_run(const qlap_config* cfg, int verify_only, qlap_result** out) {
  if (!cfg) return null_arg("cfg");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new qlap_result{qlap::run(cfg->cfg, verify_only != 0)}; });
}

int qlap_result_exit_code(const qlap_result* r) { return r ? r->outcome.exit_code : 2; }

const char* qlap_result_message(const qlap_result* r) {
  return r ? r->outcome.message.c_str() : "";
}

int qlap_result_report_written(const qlap_result* r) {
  return r && r->outcome.report_written ? 1 : 0;
}

void qlap_result_free(qlap_result* r) { delete r; }

qlap_status qlap_verify_suite(const char* size, uint64_t seed, char** out_jsonl, int* all_pass) {
  if (!size) return null_arg("size");
  if (!out_jsonl) return null_arg("out_jsonl");
  *out_jsonl = nullptr;
  return guarded([&] {
    const auto lines = qlap::verify_suite(qlap::parse_suite_size(size), seed);
    std::string text;
    bool ok = true;
    for (const auto& l : lines) {
      text += l;
      text += '\n';
      if (!qlap::Json::parse(l).value("pass", false)) ok = false;
    }
    if (all_pass) *all_pass = ok ? 1 : 0;
    *out_jsonl = dup_string(text);
  });
}

void qlap_string_free(char* s) { std::free(s); }

}  // extern "C"
