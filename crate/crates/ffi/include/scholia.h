#ifndef SCHOLIA_H
#define SCHOLIA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum {
  SCHOLIA_STATUS_OK = 0,
  // A required pointer argument was null.
  SCHOLIA_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  SCHOLIA_STATUS_INVALID_UTF8 = 2,
  // An argument was well-formed text but not acceptable.
  SCHOLIA_STATUS_INVALID_ARGUMENT = 3,
  // The requested item, panel or identifier does not exist.
  SCHOLIA_STATUS_NOT_FOUND = 4,
  // An identifier matched several items.
  SCHOLIA_STATUS_AMBIGUOUS = 5,
  // The endpoint or entity API failed.
  SCHOLIA_STATUS_UPSTREAM = 6,
  // A file could not be read or written.
  SCHOLIA_STATUS_IO = 7,
  // The library panicked; the handle should not be used again.
  SCHOLIA_STATUS_PANIC = 8,
} ScholiaStatus;

// Opaque client handle: endpoint and entity API clients plus a runtime.
typedef struct ScholiaClient ScholiaClient;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static string; never free it.
const char *scholia_version(void);

// Message of the last failed call on this thread, or null after a success.
// The pointer stays valid until the next call into the library on this thread.
const char *scholia_last_error(void);

// Releases a string returned through an `out` parameter. Null is ignored.
//
// # Safety
// `s` is null or was produced by this library and not yet freed.
void scholia_string_free(char *s);

// Creates a client. Null URLs fall back to the `SCHOLIA_ENDPOINT` and
// `SCHOLIA_API_URL` environment variables, then to the public services.
//
// # Safety
// String arguments are null or NUL-terminated; `out` is valid for one write.
ScholiaStatus scholia_client_new(const char *sparql_endpoint,
                                 const char *entity_api_url,
                                 ScholiaClient **out);

// Destroys a client. Null is ignored.
//
// # Safety
// `client` is null or a live handle that is not used afterwards.
void scholia_client_free(ScholiaClient *client);

// Writes the SPARQL text behind a panel to `out`. No network access.
// A null `language` means English.
//
// # Safety
// String arguments are null or NUL-terminated; `out` is null or valid for one write.
ScholiaStatus scholia_build_panel_query(const char *aspect_name,
                                        const char *panel,
                                        const char *subject,
                                        const char *language,
                                        char **out);

// Runs a panel and writes the JSON response the HTTP API would serve.
//
// # Safety
// `client` is a live handle; strings are NUL-terminated; `out` is null or valid for one write.
ScholiaStatus scholia_client_panel_json(const ScholiaClient *client,
                                        const char *aspect_name,
                                        const char *panel,
                                        const char *subject,
                                        char **out);

// Writes the aspect path segment an item is shown under (e.g. "author").
//
// # Safety
// `client` is a live handle; `subject` is NUL-terminated; `out` is null or valid for one write.
ScholiaStatus scholia_client_guess_aspect(const ScholiaClient *client,
                                          const char *subject,
                                          char **out);

// Resolves an external identifier (`doi`, `orcid`, `twitter`, `github`)
// to the one item carrying it and writes its id.
//
// # Safety
// `client` is a live handle; strings are NUL-terminated; `out` is null or valid for one write.
ScholiaStatus scholia_client_resolve(const ScholiaClient *client,
                                     const char *kind,
                                     const char *value,
                                     char **out);

// Writes a .bib file for the item keys cited in a LaTeX .aux file. A null
// `bib_path` writes next to the aux file. The JSON report (written count,
// skipped keys, per-item failures, output path) goes to `report_out`.
// Per-item failures do not make the call fail.
//
// # Safety
// `client` is a live handle; paths are null or NUL-terminated; `report_out` is null or valid for one write.
ScholiaStatus scholia_client_write_bib(const ScholiaClient *client,
                                       const char *aux_path,
                                       const char *bib_path,
                                       char **report_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCHOLIA_H */
