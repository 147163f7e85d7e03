#pragma once

// Counter-based random streams. A stream is a 64-bit key plus a counter; the
// n-th draw is a SplitMix64 finalizer applied to key + n * golden gamma, so
// streams keyed by (seed, replica, purpose) never share state.

#include <cstdint>

namespace pdmp {

std::uint64_t mix64(std::uint64_t z);

enum class StreamPurpose : std::uint64_t { jumps = 1, noise = 2, destinations = 3, initial = 4 };

class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t replica, StreamPurpose purpose);
    explicit RandomStream(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64();
    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform();
    /// Unit-rate exponential.
    double exponential();
    /// Standard normal (Box-Muller, both variates used).
    double normal();

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace pdmp
