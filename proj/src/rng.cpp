#include "qdecay/rng.hpp"

#include "qdecay/error.hpp"

#include <cmath>
#include <numbers>

namespace qdecay {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kStreamMul = 0xD1B54A32D192ED03ULL;
constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;
} // namespace

std::uint64_t RngStream::mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// mix64 is a bijection and kStreamMul is odd, so distinct stream ids map to
// distinct keys for a fixed root seed.
RngStream::RngStream(std::uint64_t root_seed, std::uint64_t stream_id)
    : root_seed_(root_seed),
      stream_id_(stream_id),
      key_(mix64(mix64(root_seed) + stream_id * kStreamMul)) {}

std::uint64_t RngStream::next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * kTwoPow53Inv;
}

double RngStream::uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * kTwoPow53Inv;
}

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_normal_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

double RngStream::exponential(double rate) {
    if (!(rate > 0.0)) throw Error(ErrorCode::NonPositiveRate, "exponential rate must be positive");
    return -std::log(uniform_pos()) / rate;
}

} // namespace qdecay
