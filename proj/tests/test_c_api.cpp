// Talks to the shared library only, through the C header.
#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>

#include "qlap/qlap.h"

namespace fs = std::filesystem;

namespace {

const std::string kData = QLAP_DATA_DIR;

std::string scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "qlap_test_c_api";
  fs::create_directories(dir);
  fs::remove(dir / name);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::strlen(qlap_version()) > 0);
  CHECK(std::string(qlap_status_name(QLAP_OK)) == "ok");
  CHECK(std::string(qlap_status_name(QLAP_ERR_CONFIG)) == "config");
  CHECK(std::string(qlap_status_name(static_cast<qlap_status>(99))) == "unknown");
}

TEST_CASE("null arguments are rejected with a status") {
  qlap_config* cfg = nullptr;
  CHECK(qlap_config_load(nullptr, &cfg) == QLAP_ERR_NULL);
  CHECK(qlap_config_parse("", nullptr) == QLAP_ERR_NULL);
  CHECK(qlap_config_set(nullptr, "p", "3") == QLAP_ERR_NULL);
  qlap_result* r = nullptr;
  CHECK(qlap_run(nullptr, 0, &r) == QLAP_ERR_NULL);
  CHECK(r == nullptr);
  CHECK(std::strlen(qlap_last_error()) > 0);
  // freeing null is a no-op
  qlap_config_free(nullptr);
  qlap_result_free(nullptr);
  qlap_string_free(nullptr);
}

TEST_CASE("parse errors map to the config status") {
  qlap_config* cfg = nullptr;
  CHECK(qlap_config_parse("colour = blue\n", &cfg) == QLAP_ERR_CONFIG);
  CHECK(cfg == nullptr);
  CHECK(std::string(qlap_last_error()).find("colour") != std::string::npos);
  CHECK(qlap_config_load((kData + "/no_such.cfg").c_str(), &cfg) == QLAP_ERR_IO);
}

TEST_CASE("set and text round trip") {
  qlap_config* cfg = nullptr;
  REQUIRE(qlap_config_parse("input = a.csv\n", &cfg) == QLAP_OK);
  CHECK(qlap_config_set(cfg, "p", "7") == QLAP_OK);
  CHECK(qlap_config_set(cfg, "target", "Ls") == QLAP_OK);
  CHECK(qlap_config_set(cfg, "no_such_key", "1") == QLAP_ERR_CONFIG);
  CHECK(qlap_config_set(cfg, "p", "seven") == QLAP_ERR_CONFIG);
  char* text = nullptr;
  REQUIRE(qlap_config_text(cfg, &text) == QLAP_OK);
  const std::string s(text);
  qlap_string_free(text);
  CHECK(s.find("p = 7") != std::string::npos);
  CHECK(s.find("target = Ls") != std::string::npos);
  CHECK(s.find("input = a.csv") != std::string::npos);
  qlap_config* again = nullptr;
  REQUIRE(qlap_config_parse(s.c_str(), &again) == QLAP_OK);
  char* text2 = nullptr;
  REQUIRE(qlap_config_text(again, &text2) == QLAP_OK);
  CHECK(s == text2);
  qlap_string_free(text2);
  qlap_config_free(again);
  qlap_config_free(cfg);
}

TEST_CASE("run the two-vertex toy through the library") {
  qlap_config* cfg = nullptr;
  REQUIRE(qlap_config_load((kData + "/pair.cfg").c_str(), &cfg) == QLAP_OK);
  const std::string out = scratch("pair.json");
  REQUIRE(qlap_config_set(cfg, "output", out.c_str()) == QLAP_OK);
  qlap_result* r = nullptr;
  REQUIRE(qlap_run(cfg, 0, &r) == QLAP_OK);
  CHECK(qlap_result_exit_code(r) == 0);
  CHECK(qlap_result_report_written(r) == 1);
  CHECK(fs::exists(out));
  CHECK(std::strlen(qlap_result_message(r)) > 0);
  qlap_result_free(r);

  const std::string out2 = scratch("pair_verify.json");
  REQUIRE(qlap_config_set(cfg, "output", out2.c_str()) == QLAP_OK);
  REQUIRE(qlap_run(cfg, 1, &r) == QLAP_OK);
  CHECK(qlap_result_exit_code(r) == 0);
  qlap_result_free(r);
  qlap_config_free(cfg);
}

TEST_CASE("missing input comes back as exit code 2") {
  qlap_config* cfg = nullptr;
  REQUIRE(qlap_config_load((kData + "/missing_input.cfg").c_str(), &cfg) == QLAP_OK);
  const std::string out = scratch("missing.json");
  REQUIRE(qlap_config_set(cfg, "output", out.c_str()) == QLAP_OK);
  qlap_result* r = nullptr;
  REQUIRE(qlap_run(cfg, 0, &r) == QLAP_OK);
  CHECK(qlap_result_exit_code(r) == 2);
  CHECK(qlap_result_report_written(r) == 0);
  CHECK_FALSE(fs::exists(out));
  qlap_result_free(r);
  qlap_config_free(cfg);
}

TEST_CASE("verify suite through the library") {
  char* lines = nullptr;
  int all = -1;
  CHECK(qlap_verify_suite("huge", 1, &lines, &all) == QLAP_ERR_CONFIG);
  CHECK(qlap_verify_suite("small", 1, nullptr, &all) == QLAP_ERR_NULL);
  REQUIRE(qlap_verify_suite("small", 20240601, &lines, &all) == QLAP_OK);
  CHECK(all == 1);
  const std::string s(lines);
  qlap_string_free(lines);
  CHECK(s.find("\"scaled_state_error\"") != std::string::npos);
  CHECK(s.find("\"tensor_power_error\"") != std::string::npos);
  CHECK(s.back() == '\n');
}
