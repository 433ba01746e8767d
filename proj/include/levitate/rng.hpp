#pragma once

#include <array>
#include <cstdint>

namespace levitate {

// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
// Counter-based: the output block for a given (key, counter) is a pure
// function, so streams are split by putting the stream index into the high
// half of the counter. Stream i of master seed s never overlaps stream j.
class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;

    static Block generate(const Block& counter, std::array<std::uint32_t, 2> key);
};

// Random variates for one trajectory. Layout of the 128-bit counter:
// words 0-1 = block index, words 2-3 = stream index; key = master seed.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64();

    // Uniform on the open interval (0, 1).
    double uniform();

    // Standard normal by the Box-Muller transform, two variates per pair of
    // uniforms.
    double normal();

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    Philox4x32::Block buffer_{};
    int used_ = 2;  // 64-bit words consumed from buffer_
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace levitate
