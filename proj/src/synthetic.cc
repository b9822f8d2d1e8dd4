#include "difftune/synthetic.h"

#include <algorithm>
#include <array>
#include <numeric>
#include <tuple>
#include <utility>

#include "difftune/digest.h"
#include "difftune/rng.h"

namespace difftune {

namespace {

constexpr std::size_t kBlocks = kSyntheticTextSize / kSyntheticBlockSize;

std::vector<std::size_t> class_blocks(std::size_t residue) {
  std::vector<std::size_t> out;
  for (std::size_t b = residue; b < kBlocks; b += kSyntheticResidueClasses) out.push_back(b);
  return out;
}

void apply(const FlagTransform& t, std::vector<std::uint8_t>& text) {
  CounterRng rng(t.key);
  const std::vector<std::size_t> blocks = class_blocks(t.residue);
  auto block_ptr = [&text](std::size_t b) { return text.data() + b * kSyntheticBlockSize; };

  switch (t.kind) {
    case TransformKind::kBlockShuffle: {
      std::vector<std::size_t> perm(blocks.size());
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      for (std::size_t i = perm.size(); i > 1; --i) {
        std::swap(perm[i - 1], perm[rng.below(i)]);
      }
      std::vector<std::uint8_t> saved(blocks.size() * kSyntheticBlockSize);
      for (std::size_t i = 0; i < blocks.size(); ++i) {
        std::copy_n(block_ptr(blocks[i]), kSyntheticBlockSize, saved.data() + i * kSyntheticBlockSize);
      }
      for (std::size_t i = 0; i < blocks.size(); ++i) {
        std::copy_n(saved.data() + perm[i] * kSyntheticBlockSize, kSyntheticBlockSize,
                    block_ptr(blocks[i]));
      }
      break;
    }
    case TransformKind::kRunDuplication: {
      std::array<std::uint8_t, kSyntheticBlockSize> tmp{};
      for (std::size_t b : blocks) {
        std::uint8_t* p = block_ptr(b);
        for (std::size_t k = 0; k < kSyntheticBlockSize / 2; ++k) {
          tmp[2 * k] = p[k];
          tmp[2 * k + 1] = p[k];
        }
        std::copy(tmp.begin(), tmp.end(), p);
      }
      break;
    }
    case TransformKind::kSubstitution: {
      std::array<std::uint8_t, 256> sbox{};
      std::iota(sbox.begin(), sbox.end(), std::uint8_t{0});
      for (std::size_t i = sbox.size(); i > 1; --i) std::swap(sbox[i - 1], sbox[rng.below(i)]);
      for (std::size_t b : blocks) {
        std::uint8_t* p = block_ptr(b);
        for (std::size_t k = 0; k < kSyntheticBlockSize; ++k) p[k] = sbox[p[k]];
      }
      break;
    }
  }
}

template <typename T>
void put(std::vector<std::uint8_t>& out, std::size_t offset, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out[offset + i] = static_cast<std::uint8_t>(static_cast<std::uint64_t>(value) >> (8 * i));
  }
}

}  // namespace

std::string_view transform_name(TransformKind kind) {
  switch (kind) {
    case TransformKind::kBlockShuffle: return "block-shuffle";
    case TransformKind::kRunDuplication: return "run-duplication";
    case TransformKind::kSubstitution: return "substitution";
  }
  return "?";
}

FlagTransform transform_for(std::string_view flag_name, std::uint64_t session_seed) {
  std::uint64_t h = fnv1a64(flag_name);
  FlagTransform t;
  t.residue = static_cast<std::size_t>(h % kSyntheticResidueClasses);
  t.kind = static_cast<TransformKind>((h / kSyntheticResidueClasses) % 3);
  t.key = mix64(h ^ mix64(session_seed));
  return t;
}

std::vector<std::uint8_t> synthetic_program(std::uint64_t session_seed) {
  CounterRng rng = CounterRng(session_seed).split(0x70726f6772616dULL);
  std::vector<std::uint8_t> text(kSyntheticTextSize);
  for (std::size_t i = 0; i < text.size(); i += 8) {
    std::uint64_t v = rng.next();
    for (std::size_t k = 0; k < 8; ++k) text[i + k] = static_cast<std::uint8_t>(v >> (8 * k));
  }
  return text;
}

std::vector<std::uint8_t> synthetic_text(std::span<const std::string> enabled_flags,
                                         std::string_view base_level, std::uint64_t session_seed) {
  std::vector<std::pair<FlagTransform, std::string>> ordered;
  auto add = [&](std::string_view name) {
    ordered.emplace_back(transform_for(name, session_seed), std::string(name));
  };
  for (const std::string& f : enabled_flags) add(f);
  if (base_level != kSyntheticIdentityLevel) add(base_level);
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first.residue, a.second) < std::tie(b.first.residue, b.second);
  });
  ordered.erase(std::unique(ordered.begin(), ordered.end(),
                            [](const auto& a, const auto& b) { return a.second == b.second; }),
                ordered.end());

  std::vector<std::uint8_t> text = synthetic_program(session_seed);
  for (const auto& [t, name] : ordered) apply(t, text);
  return text;
}

std::vector<std::uint8_t> make_elf64(std::span<const std::uint8_t> text) {
  static constexpr char kShstrtab[] = "\0.text\0.shstrtab";  // 17 bytes with final NUL
  constexpr std::size_t kEhdr = 64, kPhdr = 56, kShdr = 64;
  constexpr std::uint64_t kVaddr = 0x401000;
  const std::size_t text_off = 0x80;
  const std::size_t strtab_off = text_off + text.size();
  const std::size_t strtab_size = sizeof(kShstrtab);
  const std::size_t shoff = (strtab_off + strtab_size + 7) & ~std::size_t{7};
  std::vector<std::uint8_t> out(shoff + 3 * kShdr, 0);

  const std::uint8_t ident[] = {0x7f, 'E', 'L', 'F', 2, 1, 1, 0};
  std::copy(std::begin(ident), std::end(ident), out.begin());
  put<std::uint16_t>(out, 0x10, 2);   // ET_EXEC
  put<std::uint16_t>(out, 0x12, 62);  // EM_X86_64
  put<std::uint32_t>(out, 0x14, 1);
  put<std::uint64_t>(out, 0x18, kVaddr);
  put<std::uint64_t>(out, 0x20, kEhdr);
  put<std::uint64_t>(out, 0x28, shoff);
  put<std::uint16_t>(out, 0x34, kEhdr);
  put<std::uint16_t>(out, 0x36, kPhdr);
  put<std::uint16_t>(out, 0x38, 1);
  put<std::uint16_t>(out, 0x3a, kShdr);
  put<std::uint16_t>(out, 0x3c, 3);
  put<std::uint16_t>(out, 0x3e, 2);

  // PT_LOAD, R+X, covering .text.
  put<std::uint32_t>(out, kEhdr + 0x00, 1);
  put<std::uint32_t>(out, kEhdr + 0x04, 5);
  put<std::uint64_t>(out, kEhdr + 0x08, text_off);
  put<std::uint64_t>(out, kEhdr + 0x10, kVaddr);
  put<std::uint64_t>(out, kEhdr + 0x18, kVaddr);
  put<std::uint64_t>(out, kEhdr + 0x20, text.size());
  put<std::uint64_t>(out, kEhdr + 0x28, text.size());
  put<std::uint64_t>(out, kEhdr + 0x30, 0x1000);

  std::copy(text.begin(), text.end(), out.begin() + static_cast<std::ptrdiff_t>(text_off));
  std::copy_n(kShstrtab, strtab_size, out.begin() + static_cast<std::ptrdiff_t>(strtab_off));

  // [1] .text: PROGBITS, ALLOC|EXECINSTR.
  std::size_t s1 = shoff + kShdr;
  put<std::uint32_t>(out, s1 + 0x00, 1);
  put<std::uint32_t>(out, s1 + 0x04, 1);
  put<std::uint64_t>(out, s1 + 0x08, 0x6);
  put<std::uint64_t>(out, s1 + 0x10, kVaddr);
  put<std::uint64_t>(out, s1 + 0x18, text_off);
  put<std::uint64_t>(out, s1 + 0x20, text.size());
  put<std::uint64_t>(out, s1 + 0x30, 16);
  // [2] .shstrtab: STRTAB.
  std::size_t s2 = shoff + 2 * kShdr;
  put<std::uint32_t>(out, s2 + 0x00, 7);
  put<std::uint32_t>(out, s2 + 0x04, 3);
  put<std::uint64_t>(out, s2 + 0x18, strtab_off);
  put<std::uint64_t>(out, s2 + 0x20, strtab_size);
  put<std::uint64_t>(out, s2 + 0x30, 1);
  return out;
}

ProgramGraph synthetic_graph(std::span<const std::uint8_t> text) {
  ProgramGraph g;
  const std::size_t blocks = (text.size() + kSyntheticBlockSize - 1) / kSyntheticBlockSize;
  const std::size_t per_fn = std::max<std::size_t>(1, (blocks + kSyntheticResidueClasses - 1) / kSyntheticResidueClasses);
  for (std::size_t first = 0; first < blocks; first += per_fn) {
    Cfg cfg;
    cfg.function_name = "fn" + std::to_string(g.functions.size());
    for (std::size_t b = first; b < std::min(blocks, first + per_fn); ++b) {
      auto bytes = text.subspan(b * kSyntheticBlockSize,
                                std::min(kSyntheticBlockSize, text.size() - b * kSyntheticBlockSize));
      std::vector<std::uint8_t> sorted(bytes.begin(), bytes.end());
      std::sort(sorted.begin(), sorted.end());
      BlockDescriptor d;
      const std::uint64_t h =
          fnv1a64(std::string_view(reinterpret_cast<const char*>(sorted.data()), sorted.size()));
      std::array<std::uint8_t, 8> hb{};
      for (std::size_t i = 0; i < 8; ++i) hb[i] = static_cast<std::uint8_t>(h >> (56 - 8 * i));
      d.semantic_id = to_hex(hb);
      d.registers.push_back("r" + std::to_string(bytes[0] % 8));
      if (bytes.size() > 1 && bytes[1] % 8 != bytes[0] % 8) d.registers.push_back("r" + std::to_string(bytes[1] % 8));
      if (!cfg.blocks.empty()) cfg.edges.emplace_back(cfg.blocks.size() - 1, cfg.blocks.size());
      cfg.blocks.push_back(std::move(d));
    }
    if (!g.functions.empty()) g.call_edges.emplace_back(g.functions.size() - 1, g.functions.size());
    g.functions.push_back(std::move(cfg));
  }
  return g;
}

std::vector<std::uint8_t> synthetic_backend_emit(std::span<const std::string> enabled_flags,
                                                 std::string_view base_level,
                                                 std::uint64_t session_seed) {
  return make_elf64(synthetic_text(enabled_flags, base_level, session_seed));
}

}  // namespace difftune
