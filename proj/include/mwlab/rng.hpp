#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace mwlab {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// The 64-bit key is the master seed. The 128-bit counter is split into a
// 64-bit stream id (high half) and a 64-bit block index (low half), so every
// (seed, stream) pair owns a disjoint sequence of 2^64 blocks. Each block
// yields two 64-bit outputs. The output sequence for a given (seed, stream)
// is part of the toolkit's reproducibility contract and must not change.
class Philox {
public:
    using result_type = std::uint64_t;
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    Philox() : Philox(0, 0) {}
    Philox(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (have_ == 0) {
            const Block ctr{static_cast<std::uint32_t>(index_), static_cast<std::uint32_t>(index_ >> 32),
                            static_cast<std::uint32_t>(stream_),
                            static_cast<std::uint32_t>(stream_ >> 32)};
            buf_ = bijection(ctr, key_);
            ++index_;
            have_ = 2;
        }
        const int i = 2 - have_;
        --have_;
        return static_cast<std::uint64_t>(buf_[2 * i]) | (static_cast<std::uint64_t>(buf_[2 * i + 1]) << 32);
    }

    // Uniform on (0, 1], 53 bits of resolution. Never returns 0, so callers
    // may take logarithms freely.
    double uniform_pos() { return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53; }

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n) by Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t n);

    std::uint64_t stream() const { return stream_; }
    std::uint64_t seed() const { return static_cast<std::uint64_t>(key_[0]) | (static_cast<std::uint64_t>(key_[1]) << 32); }

    static Block bijection(Block ctr, Key key);

private:
    Key key_;
    std::uint64_t stream_;
    std::uint64_t index_ = 0;
    Block buf_{};
    int have_ = 0;
};

// Stream ids are composed from a replication index, a purpose tag and a
// sub-index so that every consumer in every replication draws from its own
// substream of the master seed.
enum class StreamPurpose : std::uint64_t {
    scheduler = 1,
    arrivals = 2,
    burst = 3,
    mg1_arrivals = 4,
    mg1_service = 5,
    bootstrap = 6,
    test = 15,
};

constexpr std::uint64_t stream_id(std::uint64_t replication, StreamPurpose purpose, std::uint64_t sub = 0) {
    return (replication << 24) | (static_cast<std::uint64_t>(purpose) << 20) | (sub & 0xFFFFFu);
}

inline Philox substream(std::uint64_t seed, std::uint64_t replication, StreamPurpose purpose, std::uint64_t sub = 0) {
    return Philox(seed, stream_id(replication, purpose, sub));
}

}  // namespace mwlab
