#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "types.hpp"

namespace ecqed {

// Cell tag of an emotion grid: a cause type or NONE ("no pair here").
// The first four values coincide with CauseType.
enum class Tag : uint8_t {
  H = 0,
  I = 1,
  N = 2,
  S = 3,
  NONE = 4,
};
inline constexpr int kNumTags = 5;  // classification is over {H,I,N,S,NONE}

inline Tag tag_of(CauseType c) { return static_cast<Tag>(c); }
inline CauseType cause_of(Tag t) { return static_cast<CauseType>(t); }

// Six N x N upper-triangular grids, one per emotion type.
// Cell (row, col) = (cause index, emotion index), both 0-based here;
// every cell with row > col stays NONE.
class TagGridSet {
 public:
  TagGridSet() = default;
  explicit TagGridSet(int n) : n_(n) {
    for (auto& g : grids_) g.assign(static_cast<size_t>(n) * n, Tag::NONE);
  }

  int n() const { return n_; }
  Tag at(EmotionType e, int row, int col) const {
    return grids_[static_cast<size_t>(e)][static_cast<size_t>(row) * n_ + col];
  }
  void set(EmotionType e, int row, int col, Tag t);

  long non_none_cells() const;

 private:
  int n_ = 0;
  std::array<std::vector<Tag>, kNumEmotions> grids_;
};

// One-grid baseline: a single N x N grid over 24 emotion x cause composite
// tags plus NONE. Cannot represent two quadruples sharing a cell.
inline constexpr int kOneGridNone = kNumEmotions * kNumCauseTypes;  // 24
inline constexpr int kNumOneGridTags = kOneGridNone + 1;            // 25

class OneGridTagging {
 public:
  OneGridTagging() = default;
  explicit OneGridTagging(int n)
      : n_(n), cells_(static_cast<size_t>(n) * n, static_cast<uint8_t>(kOneGridNone)) {}

  int n() const { return n_; }
  int at(int row, int col) const { return cells_[static_cast<size_t>(row) * n_ + col]; }
  void set(int row, int col, int composite);

 private:
  int n_ = 0;
  std::vector<uint8_t> cells_;
};

int composite_tag(EmotionType e, CauseType c);
std::string composite_tag_name(int composite);            // e.g. "SU-H"
int parse_composite_tag(const std::string& name);         // throws DataError if unknown

TagGridSet encode_grids(const Dialog& d);
QuadrupleSet decode_grids(const TagGridSet& g);

struct OneGridEncoding {
  OneGridTagging grid;
  long conflict_count = 0;  // quadruples displaced by cell collisions
};
OneGridEncoding encode_one_grid(const Dialog& d);
QuadrupleSet decode_one_grid(const OneGridTagging& g);

// sparse debug/fixture serialization: lists of (row, col, tag), 1-based
nlohmann::json grids_to_json(const TagGridSet& g);
TagGridSet grids_from_json(const nlohmann::json& j);
nlohmann::json one_grid_to_json(const OneGridTagging& g);
OneGridTagging one_grid_from_json(const nlohmann::json& j);

}  // namespace ecqed
