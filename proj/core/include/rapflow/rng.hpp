#pragma once

#include <cstdint>
#include <random>

namespace rapflow {

// Per-path random stream. Streams are derived from (master seed, stream
// index) only, so a path's draws never depend on which worker ran it or in
// what order.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next() { return engine_(); }

    // Uniform on the open interval (0, 1), 53 random bits.
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace rapflow
