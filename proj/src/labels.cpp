#include "malclass/labels.hpp"

#include <cctype>
#include <string>

#include "malclass/error.hpp"

namespace malclass {

namespace {

constexpr std::array<std::string_view, kNumClasses> kNames = {
    "Adware", "Backdoor", "Downloader", "Spyware", "Trojan", "Worm", "Virus", "Benign",
};

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  }
  return true;
}

}  // namespace

ClassLabel label_from_ordinal(std::size_t value) {
  if (value >= kNumClasses)
    throw Error(ErrorCode::InvalidArgument, "class ordinal out of range: " + std::to_string(value));
  return static_cast<ClassLabel>(value);
}

std::string_view label_name(ClassLabel label) noexcept { return kNames[ordinal(label)]; }

std::optional<ClassLabel> parse_label(std::string_view text) noexcept {
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (iequals(text, kNames[i])) return static_cast<ClassLabel>(i);
  }
  if (text.size() == 1 && text[0] >= '0' && text[0] < static_cast<char>('0' + kNumClasses))
    return static_cast<ClassLabel>(text[0] - '0');
  return std::nullopt;
}

}  // namespace malclass
