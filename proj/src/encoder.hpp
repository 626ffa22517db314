#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>
#include <vector>

#include "types.hpp"

namespace ecqed {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Produces one contextual vector per utterance. Adapters must be
// deterministic for fixed weights/seed.
class EncoderAdapter {
 public:
  virtual ~EncoderAdapter() = default;
  virtual const std::string& name() const = 0;
  virtual int hidden_size() const = 0;
  // true when the trainer may update adapter weights (own learning rate group)
  virtual bool fine_tunable() const { return false; }
  // 0 = unbounded; bounded adapters chunk long dialogs via plan_chunks
  virtual int max_context_tokens() const { return 0; }
  virtual Matrix encode(const Dialog& d) const = 0;
};

// Contract-level wrapper: shape and finiteness checks, errors name the dialog.
Matrix encode_utterances(const Dialog& d, const EncoderAdapter& enc);

// Deterministic hash-based embedder: unit vector per normalized utterance
// text, mixed with the previous row for minimal context sensitivity.
Matrix toy_encode(const Dialog& d, int dim, uint64_t seed);

// Selector strings: "toy:<dim>:<seed>" or "precomputed:<path>".
// Relative precomputed paths fall back to $ECQED_CACHE_DIR.
std::unique_ptr<EncoderAdapter> make_adapter(const std::string& selector);

// Overlapping chunk layout for dialogs exceeding a bounded context window.
// Chunks split at utterance boundaries with a stride of half a window; each
// utterance is read from the chunk where it sits most centrally.
struct ChunkPlan {
  struct Chunk {
    int first_utt = 0;  // inclusive
    int last_utt = 0;   // inclusive
    int token_begin = 0;
    int token_end = 0;
  };
  std::vector<Chunk> chunks;
  std::vector<int> source_chunk;  // utterance -> chunk it is read from
};

// token_lengths holds the wrapped length of each utterance. Throws DataError
// when a single utterance alone exceeds the window.
ChunkPlan plan_chunks(const std::vector<int>& token_lengths, int window);

}  // namespace ecqed
