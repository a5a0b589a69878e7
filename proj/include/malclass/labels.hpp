#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace malclass {

// Ordinal encoding is part of every file format; never reorder.
enum class ClassLabel : std::uint8_t {
  Adware = 0,
  Backdoor = 1,
  Downloader = 2,
  Spyware = 3,
  Trojan = 4,
  Worm = 5,
  Virus = 6,
  Benign = 7,
};

inline constexpr std::size_t kNumClasses = 8;

inline constexpr std::array<ClassLabel, kNumClasses> kAllLabels = {
    ClassLabel::Adware, ClassLabel::Backdoor, ClassLabel::Downloader, ClassLabel::Spyware,
    ClassLabel::Trojan, ClassLabel::Worm,     ClassLabel::Virus,      ClassLabel::Benign,
};

constexpr std::size_t ordinal(ClassLabel label) noexcept { return static_cast<std::size_t>(label); }

/// Throws Error(InvalidArgument) when out of range.
ClassLabel label_from_ordinal(std::size_t value);

std::string_view label_name(ClassLabel label) noexcept;

/// Case-insensitive; accepts the class name or its ordinal as decimal text.
std::optional<ClassLabel> parse_label(std::string_view text) noexcept;

}  // namespace malclass
