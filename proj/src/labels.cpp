#include "labels.hpp"

#include <algorithm>
#include <cctype>

namespace ecqed {

namespace {

const std::array<std::string, kNumEmotions> kEmotionNames = {
    "anger", "disgust", "fear", "happiness", "sadness", "surprise"};

const std::array<std::string, kNumEmotions> kEmotionCodes = {
    "AG", "DI", "FE", "HA", "SA", "SU"};

const std::array<std::string, kNumCauseTypes> kCauseNames = {
    "hybrid", "inter-personal", "no-context", "self-contagion"};

const std::array<std::string, kNumSplits> kSplitNames = {"train", "val", "test"};

}  // namespace

const std::string& emotion_name(EmotionType e) {
  return kEmotionNames[static_cast<size_t>(e)];
}

const std::string& emotion_code(EmotionType e) {
  return kEmotionCodes[static_cast<size_t>(e)];
}

const std::string& cause_name(CauseType c) {
  return kCauseNames[static_cast<size_t>(c)];
}

char cause_letter(CauseType c) {
  static constexpr std::array<char, kNumCauseTypes> letters = {'H', 'I', 'N', 'S'};
  return letters[static_cast<size_t>(c)];
}

const std::string& split_name(Split s) {
  return kSplitNames[static_cast<size_t>(s)];
}

std::optional<EmotionType> parse_emotion_type(std::string_view raw) {
  const std::string s = normalize_text(raw);
  if (s == "anger" || s == "angry") return EmotionType::anger;
  if (s == "disgust" || s == "disgusted") return EmotionType::disgust;
  if (s == "fear" || s == "afraid" || s == "scared") return EmotionType::fear;
  if (s == "happiness" || s == "happy" || s == "excited") return EmotionType::happiness;
  if (s == "sadness" || s == "sad") return EmotionType::sadness;
  if (s == "surprise" || s == "surprised") return EmotionType::surprise;
  return std::nullopt;
}

std::optional<std::optional<EmotionType>> parse_emotion_label(std::string_view raw) {
  const std::string s = normalize_text(raw);
  if (s == "neutral" || s == "no_emotion" || s == "no emotion" || s == "none") {
    return std::optional<EmotionType>{};
  }
  if (auto e = parse_emotion_type(raw)) return std::optional<EmotionType>{*e};
  return std::nullopt;
}

std::optional<CauseType> parse_cause_type(std::string_view raw) {
  std::string s = normalize_text(raw);
  std::replace(s.begin(), s.end(), '_', '-');
  std::replace(s.begin(), s.end(), ' ', '-');
  if (s == "hybrid") return CauseType::hybrid;
  if (s == "inter-personal" || s == "interpersonal") return CauseType::inter_personal;
  if (s == "no-context" || s == "nocontext") return CauseType::no_context;
  if (s == "self-contagion" || s == "selfcontagion") return CauseType::self_contagion;
  return std::nullopt;
}

std::optional<Split> parse_split(std::string_view raw) {
  const std::string s = normalize_text(raw);
  if (s == "train" || s == "training") return Split::train;
  if (s == "val" || s == "valid" || s == "validation" || s == "dev") return Split::val;
  if (s == "test") return Split::test;
  return std::nullopt;
}

std::string normalize_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_space = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      in_space = !out.empty();
      continue;
    }
    if (in_space) out.push_back(' ');
    in_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

}  // namespace ecqed
