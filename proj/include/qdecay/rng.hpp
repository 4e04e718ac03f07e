#pragma once

#include <cstdint>

namespace qdecay {

// Counter-based stream: sample i of stream (seed, id) is
// splitmix64_finalizer(key(seed, id) + i * golden). The output depends only
// on (seed, id, i) so it is identical across platforms and thread schedules.
class RngStream {
public:
    RngStream(std::uint64_t root_seed, std::uint64_t stream_id);

    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    // Uniform on (0, 1].
    double uniform_pos();
    // Standard normal via Box-Muller; the second variate is cached.
    double normal();
    // Exp(rate) sample; rate must be positive.
    double exponential(double rate);

    std::uint64_t root_seed() const { return root_seed_; }
    std::uint64_t stream_id() const { return stream_id_; }
    std::uint64_t counter() const { return counter_; }

    static std::uint64_t mix64(std::uint64_t z);

private:
    std::uint64_t root_seed_;
    std::uint64_t stream_id_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

} // namespace qdecay
