// Hermetic stand-in for a real compiler.
//
// The emitted program is a seeded pseudorandom 64 KiB ".text" split into
// 64-byte blocks. Each enabled flag rewrites the blocks of one residue class
// (block index mod 16) with a keyed transform, so flags acting on different
// classes commute. Flags are applied in (class, name) order, which makes the
// output independent of the order flags are given in even when two flags
// share a class.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "difftune/structdiff.h"

namespace difftune {

inline constexpr std::size_t kSyntheticTextSize = 64 * 1024;
inline constexpr std::size_t kSyntheticBlockSize = 64;
inline constexpr std::size_t kSyntheticResidueClasses = 16;
// Base level that leaves the program untouched.
inline constexpr std::string_view kSyntheticIdentityLevel = "-O0";

enum class TransformKind {
  kBlockShuffle,    // permute the class's blocks among themselves
  kRunDuplication,  // each block becomes its first half with every byte doubled
  kSubstitution,    // keyed byte-wise S-box over the class's blocks
};

struct FlagTransform {
  TransformKind kind = TransformKind::kBlockShuffle;
  std::size_t residue = 0;
  std::uint64_t key = 0;
};

std::string_view transform_name(TransformKind kind);

// Kind and residue depend on the name only; the key also on the seed.
FlagTransform transform_for(std::string_view flag_name, std::uint64_t session_seed);

// Untransformed program for a seed.
std::vector<std::uint8_t> synthetic_program(std::uint64_t session_seed);

// The ".text" payload for a flag set. Non-identity base levels are applied
// like an extra flag named after the level token.
std::vector<std::uint8_t> synthetic_text(std::span<const std::string> enabled_flags,
                                         std::string_view base_level, std::uint64_t session_seed);

// Minimal little-endian ELF64 executable image whose .text holds `text`.
std::vector<std::uint8_t> make_elf64(std::span<const std::uint8_t> text);

// Program graph for a synthetic text: 16 functions of 64 consecutive blocks
// chained by fall-through edges and a call chain. A block's semantic id
// hashes its bytes as a multiset; its registers come from its first bytes.
ProgramGraph synthetic_graph(std::span<const std::uint8_t> text);

// make_elf64(synthetic_text(...)).
std::vector<std::uint8_t> synthetic_backend_emit(std::span<const std::string> enabled_flags,
                                                 std::string_view base_level,
                                                 std::uint64_t session_seed);

}  // namespace difftune
