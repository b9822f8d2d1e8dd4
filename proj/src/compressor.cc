#include "difftune/compressor.h"

#include <lzma.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <vector>

#include "difftune/error.h"

namespace difftune {

namespace {

constexpr std::size_t kMaxDict = std::size_t{1} << 30;

std::uint32_t dict_for(std::size_t input, const CompressorId& c) {
  std::size_t d = c.dict_size;
  if (d == 0) d = std::bit_ceil(std::max<std::size_t>(input, LZMA_DICT_SIZE_MIN));
  d = std::clamp<std::size_t>(d, LZMA_DICT_SIZE_MIN, kMaxDict);
  return static_cast<std::uint32_t>(d);
}

}  // namespace

std::string CompressorId::tag() const {
  std::string out = algorithm + ":" + std::to_string(preset);
  if (extreme) out += "e";
  out += ":dict=";
  out += dict_size == 0 ? std::string("fit") : std::to_string(dict_size);
  return out;
}

CompressorId CompressorId::parse(std::string_view tag) {
  auto fail = [&tag]() { return ConfigError("bad compressor preset '" + std::string(tag) + "'"); };
  CompressorId c;
  auto colon = tag.find(':');
  c.algorithm = std::string(tag.substr(0, colon));
  if (c.algorithm != "lzma2") throw ConfigError("unsupported compressor '" + c.algorithm + "'");
  if (colon == std::string_view::npos) return c;
  std::string_view rest = tag.substr(colon + 1);
  auto colon2 = rest.find(':');
  std::string_view level = rest.substr(0, colon2);
  c.extreme = !level.empty() && level.back() == 'e';
  if (c.extreme) level.remove_suffix(1);
  auto [p, ec] = std::from_chars(level.data(), level.data() + level.size(), c.preset);
  if (ec != std::errc() || p != level.data() + level.size() || c.preset > 9) throw fail();
  if (colon2 == std::string_view::npos) return c;
  std::string_view dict = rest.substr(colon2 + 1);
  if (!dict.starts_with("dict=")) throw fail();
  dict.remove_prefix(5);
  if (dict == "fit") {
    c.dict_size = 0;
  } else {
    auto [q, ec2] = std::from_chars(dict.data(), dict.data() + dict.size(), c.dict_size);
    if (ec2 != std::errc() || q != dict.data() + dict.size() || c.dict_size < LZMA_DICT_SIZE_MIN ||
        c.dict_size > kMaxDict) {
      throw fail();
    }
  }
  return c;
}

std::size_t compressed_len(std::span<const std::uint8_t> bytes, const CompressorId& compressor) {
  lzma_options_lzma opts;
  std::uint32_t preset = compressor.preset | (compressor.extreme ? LZMA_PRESET_EXTREME : 0u);
  if (lzma_lzma_preset(&opts, preset)) throw ConfigError("invalid lzma preset");
  opts.dict_size = dict_for(bytes.size(), compressor);

  lzma_filter filters[2];
  filters[0].id = LZMA_FILTER_LZMA2;
  filters[0].options = &opts;
  filters[1].id = LZMA_VLI_UNKNOWN;
  filters[1].options = nullptr;

  std::vector<std::uint8_t> out(lzma_stream_buffer_bound(bytes.size()));
  std::size_t out_pos = 0;
  lzma_ret ret = lzma_raw_buffer_encode(filters, nullptr, bytes.data(), bytes.size(), out.data(),
                                        &out_pos, out.size());
  if (ret != LZMA_OK) {
    throw InfrastructureError("lzma encoder failed with code " + std::to_string(ret));
  }
  return out_pos;
}

}  // namespace difftune
