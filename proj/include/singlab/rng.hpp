#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace singlab {

// Philox4x32-10 counter-based generator. Each (seed, stream) pair owns an
// independent 2^64-block sequence addressed purely by a counter, so chain i
// of a batch can draw from stream i and the results cannot depend on thread
// scheduling. The block function matches the published test vectors bitwise
// (see tests/oracle/philox_ref.py).
struct Philox4x32 {
    static constexpr std::uint32_t M0 = 0xD2511F53u;
    static constexpr std::uint32_t M1 = 0xCD9E8D57u;
    static constexpr std::uint32_t W0 = 0x9E3779B9u;
    static constexpr std::uint32_t W1 = 0xBB67AE85u;

    static std::array<std::uint32_t, 4> block(const std::array<std::uint32_t, 4>& ctr,
                                              const std::array<std::uint32_t, 2>& key) {
        std::array<std::uint32_t, 4> c = ctr;
        std::uint32_t k0 = key[0], k1 = key[1];
        for (int round = 0; round < 10; ++round) {
            if (round) {
                k0 += W0;
                k1 += W1;
            }
            std::uint64_t p0 = static_cast<std::uint64_t>(M0) * c[0];
            std::uint64_t p1 = static_cast<std::uint64_t>(M1) * c[2];
            c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k0,
                 static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k1,
                 static_cast<std::uint32_t>(p0)};
        }
        return c;
    }
};

// A deterministic stream of uniforms and normals over the Philox blocks for
// one (seed, stream) pair:
//
//     key     = (seed_lo32, seed_hi32)
//     counter = (block_lo32, block_hi32, stream_lo32, stream_hi32)
//
// Words are consumed in block order; uniforms map a word w to (w+1) * 2^-32
// in (0, 1], and normals come from Box-Muller pairs (two words -> two
// normals, the second cached). The exact draw sequence for a given call
// sequence is therefore reproducible on any machine and thread count.
class RandomStream {
  public:
    RandomStream(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_lo_(static_cast<std::uint32_t>(stream)),
          stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

    std::uint32_t next_word() {
        if (buf_pos_ == 4) {
            buf_ = Philox4x32::block({static_cast<std::uint32_t>(block_),
                                      static_cast<std::uint32_t>(block_ >> 32), stream_lo_,
                                      stream_hi_},
                                     key_);
            ++block_;
            buf_pos_ = 0;
        }
        return buf_[buf_pos_++];
    }

    // Uniform in the half-open-from-zero interval (0, 1].
    double uniform() { return (static_cast<double>(next_word()) + 1.0) * 0x1p-32; }

    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    void fill_normals(std::span<double> out) {
        for (double& v : out) v = normal();
    }

    // Uniform index in [0, n) via the multiply-shift reduction; the bias of
    // at most n / 2^32 is far below anything the statistical checks resolve.
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(
            (static_cast<std::uint64_t>(next_word()) * static_cast<std::uint64_t>(n)) >> 32);
    }

  private:
    std::array<std::uint32_t, 2> key_;
    std::uint32_t stream_lo_, stream_hi_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int buf_pos_ = 4;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace singlab
