#include "difftune/elf.h"

#include <cstring>

#include "difftune/digest.h"
#include "difftune/error.h"

namespace difftune {

namespace {

constexpr std::uint8_t kElfClass32 = 1;
constexpr std::uint8_t kElfClass64 = 2;
constexpr std::uint8_t kElfDataLsb = 1;
constexpr std::uint32_t kShtNobits = 8;
constexpr std::uint16_t kShnXindex = 0xffff;

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  template <typename T>
  T read(std::uint64_t offset, const char* what) const {
    if (offset > data_.size() || data_.size() - offset < sizeof(T)) {
      throw ExtractionError(std::string("truncated ELF: ") + what + " lies outside the file");
    }
    T v{};
    // Little-endian host assumed for the LE-only formats accepted here.
    std::memcpy(&v, data_.data() + offset, sizeof(T));
    return v;
  }

  std::size_t size() const { return data_.size(); }
  std::span<const std::uint8_t> data() const { return data_; }

 private:
  std::span<const std::uint8_t> data_;
};

struct SectionHeader {
  std::uint32_t name = 0;
  std::uint32_t type = 0;
  std::uint64_t offset = 0;
  std::uint64_t size = 0;
};

}  // namespace

std::string_view mode_name(ExtractionMode mode) {
  return mode == ExtractionMode::kElfText ? "elf_text" : "whole_file";
}

ExtractionMode parse_mode(std::string_view name) {
  if (name == "elf_text") return ExtractionMode::kElfText;
  if (name == "whole_file") return ExtractionMode::kWholeFile;
  throw ConfigError("unknown extraction mode '" + std::string(name) + "'");
}

CodeSection extract_code_section(std::span<const std::uint8_t> binary, ExtractionMode mode) {
  CodeSection out;
  out.origin = sha256_hex(binary) + ":" + std::string(mode_name(mode));
  if (mode == ExtractionMode::kWholeFile) {
    out.bytes.assign(binary.begin(), binary.end());
    return out;
  }

  if (binary.size() < 4 || binary[0] != 0x7f || binary[1] != 'E' || binary[2] != 'L' ||
      binary[3] != 'F') {
    throw ExtractionError("missing ELF magic");
  }
  if (binary.size() < 16) throw ExtractionError("truncated ELF identification");
  const std::uint8_t cls = binary[4];
  if (cls != kElfClass32 && cls != kElfClass64) throw ExtractionError("unknown ELF class");
  if (binary[5] != kElfDataLsb) throw ExtractionError("only little-endian ELF is supported");
  const bool is64 = cls == kElfClass64;

  Reader r(binary);
  std::uint64_t shoff;
  std::uint16_t shentsize, shnum_raw, shstrndx_raw;
  if (is64) {
    shoff = r.read<std::uint64_t>(0x28, "e_shoff");
    shentsize = r.read<std::uint16_t>(0x3a, "e_shentsize");
    shnum_raw = r.read<std::uint16_t>(0x3c, "e_shnum");
    shstrndx_raw = r.read<std::uint16_t>(0x3e, "e_shstrndx");
  } else {
    shoff = r.read<std::uint32_t>(0x20, "e_shoff");
    shentsize = r.read<std::uint16_t>(0x2e, "e_shentsize");
    shnum_raw = r.read<std::uint16_t>(0x30, "e_shnum");
    shstrndx_raw = r.read<std::uint16_t>(0x32, "e_shstrndx");
  }
  const std::uint16_t min_entsize = is64 ? 64 : 40;
  if (shoff == 0) throw ExtractionError("ELF has no section header table");
  if (shentsize < min_entsize) throw ExtractionError("section header entry size too small");

  auto read_header = [&](std::uint64_t index) {
    std::uint64_t base = shoff + index * shentsize;
    if (base < shoff || base + shentsize > r.size()) {
      throw ExtractionError("truncated section headers: entry " + std::to_string(index) +
                            " lies outside the file");
    }
    SectionHeader h;
    h.name = r.read<std::uint32_t>(base, "sh_name");
    h.type = r.read<std::uint32_t>(base + 4, "sh_type");
    if (is64) {
      h.offset = r.read<std::uint64_t>(base + 0x18, "sh_offset");
      h.size = r.read<std::uint64_t>(base + 0x20, "sh_size");
    } else {
      h.offset = r.read<std::uint32_t>(base + 0x10, "sh_offset");
      h.size = r.read<std::uint32_t>(base + 0x14, "sh_size");
    }
    return h;
  };

  // Extended numbering: counts live in section 0 when they overflow.
  std::uint64_t shnum = shnum_raw;
  std::uint64_t shstrndx = shstrndx_raw;
  if (shnum == 0 || shstrndx == kShnXindex) {
    SectionHeader zero = read_header(0);
    if (shnum == 0) shnum = zero.size;
    if (shstrndx == kShnXindex) {
      std::uint64_t base = shoff + (is64 ? 0x28 : 0x18);
      shstrndx = r.read<std::uint32_t>(base, "sh_link of section 0");
    }
  }
  if (shnum == 0) throw ExtractionError("ELF has no sections");
  if (shstrndx >= shnum) throw ExtractionError("section name table index out of range");

  SectionHeader strtab = read_header(shstrndx);
  if (strtab.offset > r.size() || strtab.size > r.size() - strtab.offset) {
    throw ExtractionError("truncated section name table");
  }
  auto names = r.data().subspan(strtab.offset, strtab.size);

  for (std::uint64_t i = 0; i < shnum; ++i) {
    SectionHeader h = read_header(i);
    if (h.name >= names.size()) continue;
    const char* start = reinterpret_cast<const char*>(names.data()) + h.name;
    std::size_t len = strnlen(start, names.size() - h.name);
    if (std::string_view(start, len) != ".text") continue;
    if (h.type == kShtNobits) throw ExtractionError(".text section has no file contents");
    if (h.offset > r.size() || h.size > r.size() - h.offset) {
      throw ExtractionError(".text section data lies outside the file");
    }
    auto body = r.data().subspan(h.offset, h.size);
    out.bytes.assign(body.begin(), body.end());
    return out;
  }
  throw ExtractionError("no .text section");
}

}  // namespace difftune
