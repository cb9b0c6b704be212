#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace abl::sim {

// Deterministic message body of exactly `octets` octets (>= 2), CRLF line
// endings, ending in CRLF, lines of at most 76 octets, some starting with
// '.'. When `trigger` is non-empty it opens the first line; every keyword
// in `forbidden` is scrubbed from the rest (and from everything when no
// trigger is given).
std::string make_payload(std::size_t octets, std::uint64_t seed, std::string_view trigger,
                         std::vector<std::string> const& forbidden);

// Wire form for DATA: leading dots doubled, terminator appended.
std::string dot_stuff(std::string_view body);

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace abl::sim
