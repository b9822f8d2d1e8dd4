// Line-oriented flag catalog files.
//
//   level <token>                  base levels, in order ("-O0" if none)
//   flag <name> [negative_form]    flags, in id order
//   requires <name> <name> [advisory]
//   conflicts <name> <name>
//   clause <+name|-name>...
//   # comment
#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "difftune/flagspace.h"

namespace difftune {

struct Catalog {
  FlagSpace space;
  ConstraintSet constraints;
};

// SHA-256 over the catalog with comments and trailing whitespace removed,
// blank lines dropped, remaining lines joined by "\n".
std::string catalog_digest(std::string_view text);

// Throws ParseError (with line number) or StructuralError.
Catalog parse_catalog(std::string_view text);
Catalog load_catalog(const std::filesystem::path& path);

// Canonical text for a catalog; parse_catalog(serialize_catalog(c)) == c.
std::string serialize_catalog(const Catalog& catalog);

}  // namespace difftune
