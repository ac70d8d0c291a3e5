#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace lilchain {

// Philox4x64-10 (Salmon et al., SC'11). A keyed bijection on 256-bit
// counters; the generator state is just (key, counter), so any stream can be
// positioned without touching any other.
class Philox4x64 {
public:
    using Counter = std::array<std::uint64_t, 4>;
    using Key = std::array<std::uint64_t, 2>;

    static constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
    static constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
    static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
    static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;
    static constexpr int kRounds = 10;

    static constexpr Counter block(Counter ctr, Key key) noexcept {
        for (int r = 0; r < kRounds; ++r) {
            if (r > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            ctr = round(ctr, key);
        }
        return ctr;
    }

private:
    static constexpr void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                                  std::uint64_t& lo) noexcept {
        const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
        hi = static_cast<std::uint64_t>(p >> 64);
        lo = static_cast<std::uint64_t>(p);
    }

    static constexpr Counter round(const Counter& c, const Key& k) noexcept {
        std::uint64_t hi0 = 0, lo0 = 0, hi1 = 0, lo1 = 0;
        mulhilo(kMul0, c[0], hi0, lo0);
        mulhilo(kMul1, c[2], hi1, lo1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

/// Stream `stream` of master seed `seed`: key = (seed, stream), counter walks
/// blocks 0, 1, 2, ... Replica r of an ensemble always uses stream r, so
/// results do not depend on scheduling.
class StreamRng {
public:
    using result_type = std::uint64_t;

    StreamRng(std::uint64_t seed, std::uint64_t stream) noexcept : key_{seed, stream} {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept {
        if (pos_ == 4) {
            buf_ = Philox4x64::block({block_++, 0, 0, 0}, key_);
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    std::uint64_t seed() const noexcept { return key_[0]; }
    std::uint64_t stream() const noexcept { return key_[1]; }

private:
    Philox4x64::Key key_;
    std::uint64_t block_ = 0;
    Philox4x64::Counter buf_{};
    int pos_ = 4;
};

}  // namespace lilchain
