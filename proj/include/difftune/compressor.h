// Compressed-length oracle C(x) backed by raw LZMA2 streams.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace difftune {

struct CompressorId {
  std::string algorithm = "lzma2";
  std::uint32_t preset = 9;
  bool extreme = true;
  // Dictionary size in bytes; 0 sizes it to the next power of two covering
  // the input, so a concatenation x.y can always reference all of x.
  std::size_t dict_size = 0;

  // e.g. "lzma2:9e:dict=fit" or "lzma2:6:dict=8388608".
  std::string tag() const;
  // Accepts tag() output; "lzma2:9e" alone implies dict=fit.
  static CompressorId parse(std::string_view tag);

  bool operator==(const CompressorId&) const = default;
};

std::size_t compressed_len(std::span<const std::uint8_t> bytes, const CompressorId& compressor);

}  // namespace difftune
