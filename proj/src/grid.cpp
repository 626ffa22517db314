#include "grid.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

namespace ecqed {

using nlohmann::json;

void TagGridSet::set(EmotionType e, int row, int col, Tag t) {
  if (row < 0 || col < 0 || row >= n_ || col >= n_) {
    throw DataError("grid cell out of range");
  }
  if (t != Tag::NONE && row > col) {
    throw DataError("tag below the diagonal: cause would follow its emotion");
  }
  grids_[static_cast<size_t>(e)][static_cast<size_t>(row) * n_ + col] = t;
}

long TagGridSet::non_none_cells() const {
  long count = 0;
  for (const auto& g : grids_) {
    for (Tag t : g) {
      if (t != Tag::NONE) count++;
    }
  }
  return count;
}

void OneGridTagging::set(int row, int col, int composite) {
  if (row < 0 || col < 0 || row >= n_ || col >= n_) {
    throw DataError("grid cell out of range");
  }
  if (composite < 0 || composite >= kNumOneGridTags) {
    throw DataError("composite tag id out of range");
  }
  if (composite != kOneGridNone && row > col) {
    throw DataError("tag below the diagonal: cause would follow its emotion");
  }
  cells_[static_cast<size_t>(row) * n_ + col] = static_cast<uint8_t>(composite);
}

int composite_tag(EmotionType e, CauseType c) {
  return static_cast<int>(e) * kNumCauseTypes + static_cast<int>(c);
}

std::string composite_tag_name(int composite) {
  if (composite == kOneGridNone) return "NONE";
  const auto e = static_cast<EmotionType>(composite / kNumCauseTypes);
  const auto c = static_cast<CauseType>(composite % kNumCauseTypes);
  return emotion_code(e) + "-" + cause_letter(c);
}

int parse_composite_tag(const std::string& name) {
  if (name == "NONE") return kOneGridNone;
  for (int id = 0; id < kOneGridNone; ++id) {
    if (composite_tag_name(id) == name) return id;
  }
  throw DataError("unknown composite tag '" + name + "'");
}

TagGridSet encode_grids(const Dialog& d) {
  TagGridSet g(d.size());
  for (const auto& q : d.quadruples) {
    g.set(q.emotion_type, q.cause_idx - 1, q.emotion_idx - 1, tag_of(q.cause_type));
  }
  return g;
}

QuadrupleSet decode_grids(const TagGridSet& g) {
  QuadrupleSet out;
  for (int e = 0; e < kNumEmotions; ++e) {
    for (int row = 0; row < g.n(); ++row) {
      for (int col = 0; col < g.n(); ++col) {
        const Tag t = g.at(static_cast<EmotionType>(e), row, col);
        if (t == Tag::NONE) continue;
        out.insert({col + 1, row + 1, static_cast<EmotionType>(e), cause_of(t)});
      }
    }
  }
  return out;
}

OneGridEncoding encode_one_grid(const Dialog& d) {
  OneGridEncoding enc;
  enc.grid = OneGridTagging(d.size());
  // d.quadruples iterates in canonical order (emotion index, cause index,
  // emotion type); the first quadruple claiming a cell keeps it.
  std::set<std::pair<int, int>> taken;
  std::vector<Quadruple> ordered(d.quadruples.begin(), d.quadruples.end());
  std::sort(ordered.begin(), ordered.end(), [](const Quadruple& a, const Quadruple& b) {
    if (a.cause_idx != b.cause_idx) return a.cause_idx < b.cause_idx;
    if (a.emotion_idx != b.emotion_idx) return a.emotion_idx < b.emotion_idx;
    if (a.emotion_type != b.emotion_type) {
      return emotion_name(a.emotion_type) < emotion_name(b.emotion_type);
    }
    return cause_name(a.cause_type) < cause_name(b.cause_type);
  });
  for (const auto& q : ordered) {
    const std::pair<int, int> cell{q.cause_idx - 1, q.emotion_idx - 1};
    if (!taken.insert(cell).second) {
      enc.conflict_count++;
      continue;
    }
    enc.grid.set(cell.first, cell.second, composite_tag(q.emotion_type, q.cause_type));
  }
  return enc;
}

QuadrupleSet decode_one_grid(const OneGridTagging& g) {
  QuadrupleSet out;
  for (int row = 0; row < g.n(); ++row) {
    for (int col = 0; col < g.n(); ++col) {
      const int composite = g.at(row, col);
      if (composite == kOneGridNone) continue;
      out.insert({col + 1, row + 1,
                  static_cast<EmotionType>(composite / kNumCauseTypes),
                  static_cast<CauseType>(composite % kNumCauseTypes)});
    }
  }
  return out;
}

json grids_to_json(const TagGridSet& g) {
  json grids = json::object();
  for (int e = 0; e < kNumEmotions; ++e) {
    json cells = json::array();
    for (int row = 0; row < g.n(); ++row) {
      for (int col = 0; col < g.n(); ++col) {
        const Tag t = g.at(static_cast<EmotionType>(e), row, col);
        if (t == Tag::NONE) continue;
        cells.push_back({row + 1, col + 1, std::string(1, cause_letter(cause_of(t)))});
      }
    }
    grids[emotion_name(static_cast<EmotionType>(e))] = cells;
  }
  return {{"n", g.n()}, {"grids", grids}};
}

TagGridSet grids_from_json(const json& j) {
  TagGridSet g(j.at("n").get<int>());
  for (const auto& [name, cells] : j.at("grids").items()) {
    auto e = parse_emotion_type(name);
    if (!e) throw DataError("unknown emotion grid '" + name + "'");
    for (const auto& cell : cells) {
      const std::string letter = cell.at(2).get<std::string>();
      Tag t = Tag::NONE;
      switch (letter.empty() ? '?' : letter[0]) {
        case 'H': t = Tag::H; break;
        case 'I': t = Tag::I; break;
        case 'N': t = Tag::N; break;
        case 'S': t = Tag::S; break;
        default: throw DataError("unknown tag '" + letter + "'");
      }
      g.set(*e, cell.at(0).get<int>() - 1, cell.at(1).get<int>() - 1, t);
    }
  }
  return g;
}

json one_grid_to_json(const OneGridTagging& g) {
  json cells = json::array();
  for (int row = 0; row < g.n(); ++row) {
    for (int col = 0; col < g.n(); ++col) {
      const int composite = g.at(row, col);
      if (composite == kOneGridNone) continue;
      cells.push_back({row + 1, col + 1, composite_tag_name(composite)});
    }
  }
  return {{"n", g.n()}, {"cells", cells}};
}

OneGridTagging one_grid_from_json(const json& j) {
  OneGridTagging g(j.at("n").get<int>());
  for (const auto& cell : j.at("cells")) {
    g.set(cell.at(0).get<int>() - 1, cell.at(1).get<int>() - 1,
          parse_composite_tag(cell.at(2).get<std::string>()));
  }
  return g;
}

}  // namespace ecqed
