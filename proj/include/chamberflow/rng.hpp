#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>

namespace chamberflow {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// A stream is identified by (seed, stream id, purpose); the block counter
/// advances within the stream. Two 64-bit outputs per block.
class Philox {
public:
    using result_type = std::uint64_t;
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    Philox(std::uint64_t seed, std::uint64_t stream, std::uint32_t purpose = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_lo_(static_cast<std::uint32_t>(stream)),
          stream_hi_(static_cast<std::uint32_t>(stream >> 32) ^ (purpose << 16) ^ (purpose >> 16)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (have_ == 0) refill();
        return buf_[lanes * 2 - have_--];
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform direction on the unit circle by rejection from the square.
    std::pair<double, double> unit_circle() {
        for (;;) {
            const std::uint64_t r = (*this)();
            const double x = static_cast<double>(static_cast<std::int32_t>(r)) * 0x1.0p-31;
            const double y = static_cast<double>(static_cast<std::int32_t>(r >> 32)) * 0x1.0p-31;
            const double s = x * x + y * y;
            if (s > 0.0 && s <= 1.0) {
                const double inv = 1.0 / std::sqrt(s);
                return {x * inv, y * inv};
            }
        }
    }

    /// Uniform point on the unit 2-sphere (Marsaglia's disk method).
    std::array<double, 3> unit_sphere2() {
        for (;;) {
            const std::uint64_t r = (*this)();
            const double x = static_cast<double>(static_cast<std::int32_t>(r)) * 0x1.0p-31;
            const double y = static_cast<double>(static_cast<std::int32_t>(r >> 32)) * 0x1.0p-31;
            const double s = x * x + y * y;
            if (s < 1.0) {
                const double f = 2.0 * std::sqrt(1.0 - s);
                return {x * f, y * f, 1.0 - 2.0 * s};
            }
        }
    }

    /// Uniform point on the unit 4-sphere in R^5. The squared length of the
    /// first two coordinates is Beta(1, 3/2), sampled as 1 - cbrt(U)^2; the two
    /// blocks are then independent uniform directions.
    std::array<double, 5> unit_sphere4() {
        const double c3 = std::cbrt(1.0 - uniform());
        const double b = 1.0 - c3 * c3;
        const double rb = std::sqrt(b), rc = std::sqrt(1.0 - b);
        const auto [c, s] = unit_circle();
        const auto v = unit_sphere2();
        return {rb * c, rb * s, rc * v[0], rc * v[1], rc * v[2]};
    }

    static Block generate(Block ctr, Key key) {
        constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
        constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t(m0) * ctr[0];
            const std::uint64_t p1 = std::uint64_t(m1) * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
            key[0] += w0;
            key[1] += w1;
        }
        return ctr;
    }

private:
    static constexpr int lanes = 4;

    // Four consecutive blocks at once; the independent multiply chains overlap.
    void refill() {
        std::uint32_t c0[lanes], c1[lanes], c2[lanes], c3[lanes];
        for (int l = 0; l < lanes; ++l) {
            const std::uint64_t b = block_ + l;
            c0[l] = static_cast<std::uint32_t>(b);
            c1[l] = static_cast<std::uint32_t>(b >> 32);
            c2[l] = stream_lo_;
            c3[l] = stream_hi_;
        }
        std::uint32_t k0 = key_[0], k1 = key_[1];
        for (int round = 0; round < 10; ++round) {
            for (int l = 0; l < lanes; ++l) {
                const std::uint64_t p0 = std::uint64_t(0xD2511F53u) * c0[l];
                const std::uint64_t p1 = std::uint64_t(0xCD9E8D57u) * c2[l];
                const std::uint32_t n0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1[l] ^ k0;
                const std::uint32_t n2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3[l] ^ k1;
                c1[l] = static_cast<std::uint32_t>(p1);
                c3[l] = static_cast<std::uint32_t>(p0);
                c0[l] = n0;
                c2[l] = n2;
            }
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        for (int l = 0; l < lanes; ++l) {
            buf_[2 * l] = (std::uint64_t(c1[l]) << 32) | c0[l];
            buf_[2 * l + 1] = (std::uint64_t(c3[l]) << 32) | c2[l];
        }
        block_ += lanes;
        have_ = lanes * 2;
    }

    Key key_;
    std::uint32_t stream_lo_;
    std::uint32_t stream_hi_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, lanes * 2> buf_{};
    int have_ = 0;
};

/// Purposes keep the substreams of one path independent of each other.
namespace stream_purpose {
inline constexpr std::uint32_t walk = 0;
inline constexpr std::uint32_t kb_horizon = 1;
inline constexpr std::uint32_t haar = 2;
inline constexpr std::uint32_t test = 3;
} // namespace stream_purpose

} // namespace chamberflow
