#pragma once

#include <atomic>
#include <cstdint>

namespace veripatient::net {

/// Process-wide count of outbound network attempts (chat backends and the
/// live terminology client). Replay-only runs must leave it at zero; the
/// offline test suite asserts exactly that.
std::atomic<std::uint64_t>& network_op_counter();

} // namespace veripatient::net
