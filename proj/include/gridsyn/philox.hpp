#pragma once

#include <cmath>
#include <cstdint>

namespace gridsyn::sde {

// Philox-4x32-10 counter-based generator. Streams are addressed directly by
// (seed, path, step, channel, stream class), so replay is exact regardless of
// how paths are scheduled across threads.

struct Philox4x32 {
    static constexpr uint32_t kM0 = 0xD2511F53u;
    static constexpr uint32_t kM1 = 0xCD9E8D57u;
    static constexpr uint32_t kW0 = 0x9E3779B9u;
    static constexpr uint32_t kW1 = 0xBB67AE85u;

    static inline void round(uint32_t ctr[4], uint32_t key[2]) {
        const uint64_t p0 = static_cast<uint64_t>(kM0) * ctr[0];
        const uint64_t p1 = static_cast<uint64_t>(kM1) * ctr[2];
        const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
        const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
        const uint32_t out0 = hi1 ^ ctr[1] ^ key[0];
        const uint32_t out2 = hi0 ^ ctr[3] ^ key[1];
        ctr[0] = out0;
        ctr[1] = lo1;
        ctr[2] = out2;
        ctr[3] = lo0;
        key[0] += kW0;
        key[1] += kW1;
    }

    static inline void block(uint64_t seed, uint32_t c0, uint32_t c1, uint32_t c2,
                             uint32_t c3, uint32_t out[4]) {
        uint32_t ctr[4] = {c0, c1, c2, c3};
        uint32_t key[2] = {static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)};
        for (int r = 0; r < 10; ++r) round(ctr, key);
        out[0] = ctr[0];
        out[1] = ctr[1];
        out[2] = ctr[2];
        out[3] = ctr[3];
    }
};

// Standard normal draw for the (path, step, channel, stream) cell.
inline double normal_draw(uint64_t seed, uint32_t path, uint64_t step, uint32_t channel,
                          uint32_t stream_class) {
    uint32_t out[4];
    Philox4x32::block(seed, static_cast<uint32_t>(step), static_cast<uint32_t>(step >> 32),
                      path, channel | (stream_class << 24), out);
    // two 53-bit uniforms strictly inside (0,1), then Box-Muller
    const uint64_t a = (static_cast<uint64_t>(out[0]) << 32) | out[1];
    const uint64_t b = (static_cast<uint64_t>(out[2]) << 32) | out[3];
    const double u1 = (static_cast<double>(a >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = (static_cast<double>(b >> 11) + 0.5) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

}  // namespace gridsyn::sde
