#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ecqed {

// Emotion types in canonical (alphabetical) order. This order is also the
// grid order and the tie-break order for one-grid conflicts.
enum class EmotionType : uint8_t {
  anger = 0,
  disgust = 1,
  fear = 2,
  happiness = 3,
  sadness = 4,
  surprise = 5,
};
inline constexpr int kNumEmotions = 6;

// Cause types in tag order {H, I, N, S}.
enum class CauseType : uint8_t {
  hybrid = 0,
  inter_personal = 1,
  no_context = 2,
  self_contagion = 3,
};
inline constexpr int kNumCauseTypes = 4;

enum class Split : uint8_t { train = 0, val = 1, test = 2 };
inline constexpr int kNumSplits = 3;

const std::string& emotion_name(EmotionType e);
const std::string& emotion_code(EmotionType e);  // two-letter code, e.g. "SU"
const std::string& cause_name(CauseType c);
char cause_letter(CauseType c);  // 'H', 'I', 'N', 'S'
const std::string& split_name(Split s);

// Normalizes synonyms ("happy" -> happiness, "angry" -> anger, ...).
// Returns nullopt for unknown labels. "neutral" is not an emotion type;
// use parse_emotion_label for utterance labels.
std::optional<EmotionType> parse_emotion_type(std::string_view raw);

// Utterance label: an emotion type or neutral (nullopt). The outer optional
// is empty when the label is unknown.
std::optional<std::optional<EmotionType>> parse_emotion_label(std::string_view raw);

std::optional<CauseType> parse_cause_type(std::string_view raw);
std::optional<Split> parse_split(std::string_view raw);

// lowercased, whitespace-collapsed, trimmed copy
std::string normalize_text(std::string_view s);

}  // namespace ecqed
