#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "eqalign/beosonic.hpp"

namespace eqalign {

/// Pull coordinate pairs out of free-form model output.
///
/// Accepted shapes, tried in order: JSON arrays (a single [x, y] pair or a
/// list of pairs, possibly inside a code fence or prose), parenthesised or
/// bracketed pairs, `x = a, y = b` assignments, and bare `a, b` pairs.
/// Exactly expected_count pairs are required; each is clamped into the
/// square. Failures throw ErrorKind::Parse.
std::vector<BeoCoord> parse_coords(std::string_view text, std::size_t expected_count);

}  // namespace eqalign
