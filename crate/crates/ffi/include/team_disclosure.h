#ifndef TEAM_DISCLOSURE_H
#define TEAM_DISCLOSURE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every call.
typedef enum TdStatus {
  // Success.
  TD_STATUS_OK = 0,
  // A required pointer was null.
  TD_STATUS_NULL_POINTER = 1,
  // A string argument was not UTF-8.
  TD_STATUS_INVALID_UTF8 = 2,
  // The input was malformed or inconsistent.
  TD_STATUS_INVALID_INPUT = 3,
  // The instance exceeds a search cap.
  TD_STATUS_COMPUTE_CAP = 4,
  // Internal error.
  TD_STATUS_PANIC = 5,
} TdStatus;

// Opaque joint outcome distribution.
typedef struct TdDistribution TdDistribution;

// Opaque deliberation protocol.
typedef struct TdProtocol TdProtocol;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Free with
// [`td_string_free`].
char *td_last_error(void);

// Frees a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or a string returned by this library and not yet freed.
void td_string_free(char *s);

// Parses a protocol such as `k_majority:3,2`, `leader:3,1`, `custom:3;1,2;2,3`
// or its JSON form.
//
// # Safety
// `spec` must be a nul-terminated string and `out` writable.
enum TdStatus td_protocol_parse(const char *spec, struct TdProtocol **out);

// Releases a protocol. Null is ignored.
//
// # Safety
// `p` must be null or a live handle from [`td_protocol_parse`].
void td_protocol_free(struct TdProtocol *p);

// Team size of a protocol.
//
// # Safety
// `p` must be a live handle and `out` writable.
enum TdStatus td_protocol_members(const struct TdProtocol *p, size_t *out);

// Whether every pivotal coalition contains a strictly smaller group that can
// block disclosure alone.
//
// # Safety
// `p` must be a live handle and `out` writable.
enum TdStatus td_protocol_requires_more_consensus(const struct TdProtocol *p, bool *out);

// Parses a distribution such as `independent:1/2` or its JSON form. `members`
// expands single-value shorthand; pass 0 when every member is listed.
//
// # Safety
// `spec` must be a nul-terminated string and `out` writable.
enum TdStatus td_distribution_parse(const char *spec, size_t members, struct TdDistribution **out);

// Releases a distribution. Null is ignored.
//
// # Safety
// `d` must be null or a live handle from [`td_distribution_parse`].
void td_distribution_free(struct TdDistribution *d);

// All equilibria as a JSON array with exact rational strings.
//
// # Safety
// Handles must be live and `out_json` writable.
enum TdStatus td_solve(const struct TdProtocol *p, const struct TdDistribution *d, char **out_json);

// Effort gains per consensus level for a binary environment given as JSON,
// returned as a JSON array of exact strings, plus the optimal level.
//
// # Safety
// `env_json` must be a nul-terminated string; outputs must be writable.
enum TdStatus td_binary_gains(const char *env_json, char **out_json, size_t *out_k_star);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* TEAM_DISCLOSURE_H */
