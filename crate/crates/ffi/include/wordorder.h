#ifndef WORDORDER_H
#define WORDORDER_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WoStatus {
  WO_STATUS_OK = 0,
  WO_STATUS_NULL_POINTER = 1,
  WO_STATUS_INVALID_UTF8 = 2,
  WO_STATUS_INVALID_ARGUMENT = 3,
  WO_STATUS_PARSE = 4,
  WO_STATUS_DECODE = 5,
  WO_STATUS_BUFFER_TOO_SMALL = 6,
  WO_STATUS_PANIC = 7,
} WoStatus;

typedef enum WoSmoothing {
  WO_SMOOTHING_MLE = 0,
  WO_SMOOTHING_KNESER_NEY = 1,
} WoSmoothing;

typedef struct WoConstraintState WoConstraintState;

typedef struct WoConstraintTree WoConstraintTree;

typedef struct WoNgramModel WoNgramModel;

typedef struct WoDecodeOptions {
  uint32_t beam_size;
  bool constrained;
  bool length_norm;
  /**
   * 0 selects the default.
   */
  uint32_t max_len;
  bool null_input;
} WoDecodeOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, statically allocated.
 */
const char *wo_version(void);

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next library call on the same thread.
 */
const char *wo_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void wo_string_free(char *s);

struct WoDecodeOptions wo_decode_options_default(void);

/**
 * Trains an n-gram model on a newline-separated corpus. The vocabulary is
 * the corpus tokens plus the special tokens.
 *
 * # Safety
 * `corpus` must be a valid C string and `out` a valid pointer.
 */
enum WoStatus wo_ngram_train(const char *corpus,
                             uint32_t order,
                             enum WoSmoothing kind,
                             double discount,
                             struct WoNgramModel **out);

/**
 * Parses a model file's contents.
 *
 * # Safety
 * `model_text` must be a valid C string and `out` a valid pointer.
 */
enum WoStatus wo_ngram_load(const char *model_text,
                            enum WoSmoothing kind,
                            double discount,
                            struct WoNgramModel **out);

/**
 * Serializes a model; free the result with [`wo_string_free`].
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum WoStatus wo_ngram_to_text(const struct WoNgramModel *model, char **out);

/**
 * # Safety
 * `model` must be NULL or a live handle; it is invalid afterwards.
 */
void wo_ngram_free(struct WoNgramModel *model);

/**
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum WoStatus wo_ngram_vocab_size(const struct WoNgramModel *model, size_t *out);

/**
 * Maps subwords to model token ids (unknown subwords to `<unk>`).
 *
 * # Safety
 * `model` must be a live handle, `subwords` a valid C string, `buf` valid
 * for `cap` writes and `len` a valid pointer.
 */
enum WoStatus wo_ngram_encode(const struct WoNgramModel *model,
                              const char *subwords,
                              uint32_t *buf,
                              size_t cap,
                              size_t *len);

/**
 * Log-probability of a subword sequence (without end of sentence).
 *
 * # Safety
 * `model` must be a live handle, `subwords` a valid C string and `out` a
 * valid pointer.
 */
enum WoStatus wo_ngram_score(const struct WoNgramModel *model, const char *subwords, double *out);

/**
 * Orders one input sentence. `out_words` receives the best output as
 * space-separated words (free with [`wo_string_free`]); `out_logscore`
 * may be NULL.
 *
 * # Safety
 * `model` must be a live handle, `input` a valid C string, `options`
 * NULL (defaults) or valid, and `out_words` a valid pointer.
 */
enum WoStatus wo_order(const struct WoNgramModel *model,
                       const char *input,
                       const struct WoDecodeOptions *options,
                       char **out_words,
                       double *out_logscore);

/**
 * Corpus BLEU (0 to 100) of newline-separated hypotheses against
 * newline-separated references, tokens split on whitespace.
 *
 * # Safety
 * `hyps` and `refs` must be valid C strings and `out` a valid pointer.
 */
enum WoStatus wo_bleu(const char *hyps, const char *refs, double *out);

/**
 * Builds a prefix tree over `n_words` words; word `i` is the next
 * `word_lens[i]` ids of `ids`.
 *
 * # Safety
 * `ids` must be valid for the sum of `word_lens` reads, `word_lens` for
 * `n_words` reads, and `out` a valid pointer.
 */
enum WoStatus wo_constraint_tree_new(const uint32_t *ids,
                                     const size_t *word_lens,
                                     size_t n_words,
                                     struct WoConstraintTree **out);

/**
 * # Safety
 * `tree` must be NULL or a live handle; it is invalid afterwards.
 */
void wo_constraint_tree_free(struct WoConstraintTree *tree);

/**
 * Total subword count over all words.
 *
 * # Safety
 * `tree` must be a live handle and `out` a valid pointer.
 */
enum WoStatus wo_constraint_tree_subword_count(const struct WoConstraintTree *tree, size_t *out);

/**
 * Fresh traversal state at the root.
 *
 * # Safety
 * `tree` must be a live handle and `out` a valid pointer.
 */
enum WoStatus wo_constraint_state_new(const struct WoConstraintTree *tree,
                                      struct WoConstraintState **out);

/**
 * # Safety
 * `state` must be a live handle and `out` a valid pointer.
 */
enum WoStatus wo_constraint_state_clone(const struct WoConstraintState *state,
                                        struct WoConstraintState **out);

/**
 * # Safety
 * `state` must be NULL or a live handle; it is invalid afterwards.
 */
void wo_constraint_state_free(struct WoConstraintState *state);

/**
 * Valid next ids in ascending order. When `cap` is too small, `len`
 * still receives the required length.
 *
 * # Safety
 * Handles must be live, `buf` valid for `cap` writes and `len` valid.
 */
enum WoStatus wo_constraint_valid_next(const struct WoConstraintTree *tree,
                                       const struct WoConstraintState *state,
                                       uint32_t *buf,
                                       size_t cap,
                                       size_t *len);

/**
 * Consumes `token` in place. An invalid token fails with
 * `WO_STATUS_INVALID_ARGUMENT` and leaves the state unchanged.
 *
 * # Safety
 * Handles must be live.
 */
enum WoStatus wo_constraint_advance(const struct WoConstraintTree *tree,
                                    struct WoConstraintState *state,
                                    uint32_t token);

/**
 * # Safety
 * Handles must be live and `out` a valid pointer.
 */
enum WoStatus wo_constraint_is_exhausted(const struct WoConstraintTree *tree,
                                         const struct WoConstraintState *state,
                                         bool *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WORDORDER_H */
