#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace veripatient::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Collapse runs of whitespace (space, tab, newline) into single spaces,
/// trimming the ends.
std::string collapse_whitespace(std::string_view s);

/// Case-insensitive substring test.
bool icontains(std::string_view haystack, std::string_view needle);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// FNV-1a 64-bit over raw bytes, rendered as 16 hex digits. Used for
/// content fingerprints in manifests, not for anything adversarial.
std::string fingerprint(std::string_view bytes);

/// SplitMix64 step; the basis for all seed-derived sampling so results
/// do not depend on the standard library's distribution internals.
std::uint64_t splitmix64(std::uint64_t& state);

/// Uniform draw in [0, bound) from a splitmix-driven state (Lemire
/// rejection method, deterministic across platforms).
std::uint64_t bounded_uniform(std::uint64_t& state, std::uint64_t bound);

} // namespace veripatient::text
