#ifndef ECQED_H
#define ECQED_H

/* C interface to the emotion-cause quadruple extraction toolkit.
 *
 * All functions return ecqed_status; ECQED_OK means success.  On failure the
 * thread-local message from ecqed_last_error() describes the problem.  Strings
 * returned through char** parameters are heap-allocated; release them with
 * ecqed_free_string().  Handles are created and destroyed by the matching
 * open/close pair; passing NULL where a handle or path is required yields
 * ECQED_ERR_CONFIG.
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ecqed_status {
  ECQED_OK = 0,
  ECQED_ERR_DATA = 1,     /* malformed or inconsistent input data */
  ECQED_ERR_CONFIG = 2,   /* invalid configuration or argument */
  ECQED_ERR_NUMERIC = 3,  /* NaN/Inf or numeric contract violation */
  ECQED_ERR_ARTIFACT = 4  /* unreadable/incompatible checkpoint or output */
} ecqed_status;

typedef struct ecqed_corpus ecqed_corpus;
typedef struct ecqed_model ecqed_model;

const char* ecqed_version(void);

/* Message for the most recent failing call on this thread ("" if none).
 * Valid until the next library call on the same thread. */
const char* ecqed_last_error(void);

void ecqed_free_string(char* s);

/* --- corpus ------------------------------------------------------------- */

ecqed_status ecqed_corpus_open(ecqed_corpus** out);

/* Adds every dialog found under dir: *.json files are source-format records
 * (split inferred from the file name), *.ndjson / *.jsonl are canonical.
 * failures_json_out, when non-NULL, receives a JSON array with one message
 * per rejected dialog.  Returns ECQED_ERR_DATA if any dialog was rejected;
 * dialogs that parsed cleanly are still added. */
ecqed_status ecqed_corpus_ingest_dir(ecqed_corpus* corpus, const char* dir,
                                     char** failures_json_out);

ecqed_status ecqed_corpus_read_ndjson(ecqed_corpus* corpus, const char* path);
ecqed_status ecqed_corpus_write_ndjson(const ecqed_corpus* corpus,
                                       const char* path);

/* Corpus statistics (per-split counts, type histograms, overlap ratio). */
ecqed_status ecqed_corpus_stats_json(const ecqed_corpus* corpus,
                                     char** json_out);

/* Validation issues across all dialogs as a JSON array (empty = clean). */
ecqed_status ecqed_corpus_validate_json(const ecqed_corpus* corpus,
                                        char** json_out);

ecqed_status ecqed_corpus_dialog_count(const ecqed_corpus* corpus,
                                       int64_t* out);

void ecqed_corpus_close(ecqed_corpus* corpus);

/* --- training & model artifacts ----------------------------------------- */

/* Parses and validates a flat config document, returning the effective
 * configuration with every key filled in (defaults applied). */
ecqed_status ecqed_config_normalize(const char* config_json, char** json_out);

/* Trains on the corpus train split, selecting by validation quadruple F1.
 * config_json is the flat config document (unknown keys rejected).
 * log_path, when non-NULL, receives one JSON line per epoch. */
ecqed_status ecqed_train(const ecqed_corpus* corpus, const char* config_json,
                         const char* log_path, ecqed_model** out);

ecqed_status ecqed_model_open(const char* path, ecqed_model** out);
ecqed_status ecqed_model_save(const ecqed_model* model, const char* path);
ecqed_status ecqed_model_config_json(const ecqed_model* model,
                                     char** json_out);
ecqed_status ecqed_model_metadata_json(const ecqed_model* model,
                                       char** json_out);
void ecqed_model_close(ecqed_model* model);

/* --- prediction & evaluation -------------------------------------------- */

/* Predictions document: a JSON object mapping dialog id to an array of
 * {"emotion_idx", "cause_idx", "emotion_type", "cause_type"} records. */
ecqed_status ecqed_predict_json(const ecqed_model* model,
                                const ecqed_corpus* corpus,
                                char** predictions_json_out);

/* Runs the model over the corpus and scores against its gold quadruples. */
ecqed_status ecqed_evaluate(const ecqed_model* model,
                            const ecqed_corpus* corpus,
                            char** report_json_out);

/* Scores an external predictions document against the corpus gold labels.
 * The document must cover exactly the dialogs present in the corpus. */
ecqed_status ecqed_evaluate_predictions(const ecqed_corpus* gold,
                                        const char* predictions_json,
                                        char** report_json_out);

/* Gold quadruples re-emitted as a predictions document (debugging aid). */
ecqed_status ecqed_gold_predictions_json(const ecqed_corpus* corpus,
                                         char** json_out);

/* End-to-end prediction throughput (median utterances/second over reps timed
 * passes after one warm-up).  one_grid_model may be NULL; when present the
 * report also carries the multi-grid / one-grid ratio. */
ecqed_status ecqed_benchmark(const ecqed_model* model,
                             const ecqed_model* one_grid_model,
                             const ecqed_corpus* corpus, int reps,
                             char** json_out);

#ifdef __cplusplus
}
#endif

#endif /* ECQED_H */
