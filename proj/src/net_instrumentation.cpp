#include "veripatient/net_instrumentation.hpp"

namespace veripatient::net {

std::atomic<std::uint64_t>& network_op_counter() {
    static std::atomic<std::uint64_t> counter{0};
    return counter;
}

} // namespace veripatient::net
