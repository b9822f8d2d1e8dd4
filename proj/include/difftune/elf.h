// Code-section extraction from little-endian ELF32/ELF64 images.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace difftune {

enum class ExtractionMode { kElfText, kWholeFile };

std::string_view mode_name(ExtractionMode mode);
ExtractionMode parse_mode(std::string_view name);

struct CodeSection {
  std::vector<std::uint8_t> bytes;
  // "<sha256 of the source binary>:<mode>"
  std::string origin;
};

// kElfText returns the bytes of the section named ".text"; kWholeFile returns
// the input unchanged. Throws ExtractionError naming the failing step.
CodeSection extract_code_section(std::span<const std::uint8_t> binary, ExtractionMode mode);

}  // namespace difftune
