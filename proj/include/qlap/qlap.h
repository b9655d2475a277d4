/* C interface to the qlap core. All handles are opaque; every call that can
   fail returns a qlap_status and leaves a message for qlap_last_error(). */
#ifndef QLAP_QLAP_H
#define QLAP_QLAP_H

#include <stdint.h>

#if defined(QLAP_BUILDING_LIBRARY)
#define QLAP_API __attribute__((visibility("default")))
#else
#define QLAP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qlap_status {
  QLAP_OK = 0,
  QLAP_ERR_INPUT = 1,
  QLAP_ERR_CONTRACT = 2,
  QLAP_ERR_OVERFLOW = 3,
  QLAP_ERR_RANGE = 4,
  QLAP_ERR_DEGENERATE = 5,
  QLAP_ERR_AMPLIFICATION = 6,
  QLAP_ERR_RESOLUTION = 7,
  QLAP_ERR_VERIFICATION = 8,
  QLAP_ERR_IO = 9,
  QLAP_ERR_CONFIG = 10,
  QLAP_ERR_INTERNAL = 11,
  QLAP_ERR_NULL = 12
} qlap_status;

typedef struct qlap_config qlap_config;
typedef struct qlap_result qlap_result;

QLAP_API const char* qlap_version(void);
/* Message of the last failed call on this thread, "" if none. */
QLAP_API const char* qlap_last_error(void);
QLAP_API const char* qlap_status_name(qlap_status s);

QLAP_API qlap_status qlap_config_load(const char* path, qlap_config** out);
QLAP_API qlap_status qlap_config_parse(const char* text, qlap_config** out);
/* Overrides one key, same syntax as a config line. */
QLAP_API qlap_status qlap_config_set(qlap_config* cfg, const char* key, const char* value);
/* Caller frees with qlap_string_free. */
QLAP_API qlap_status qlap_config_text(const qlap_config* cfg, char** out);
QLAP_API void qlap_config_free(qlap_config* cfg);

/* Runs the pipeline and writes the report named by the config's output key.
   QLAP_OK means the run completed; its verdict is in the result. */
QLAP_API qlap_status qlap_run(const qlap_config* cfg, int verify_only, qlap_result** out);
/* 0 pass, 1 verification failure, 2 I/O or config error. */
QLAP_API int qlap_result_exit_code(const qlap_result* r);
QLAP_API const char* qlap_result_message(const qlap_result* r);
QLAP_API int qlap_result_report_written(const qlap_result* r);
QLAP_API void qlap_result_free(qlap_result* r);

/* Property suites as JSON lines. size is "small" or "medium". *all_pass is
   set to 1 when every check passed. Caller frees *out_jsonl. */
QLAP_API qlap_status qlap_verify_suite(const char* size, uint64_t seed, char** out_jsonl,
                                       int* all_pass);

QLAP_API void qlap_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
