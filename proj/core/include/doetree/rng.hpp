// Counter-based random number generation (Philox4x32-10).
//
// Every stochastic routine in doetree draws from a Philox stream keyed by an
// explicit seed. Substreams are cheap and independent, so parallel workers can
// consume disjoint streams and produce results identical to a serial run.
#pragma once

#include <array>
#include <cstdint>

namespace doetree {

// Raw Philox4x32-10 block function: 128-bit counter, 64-bit key -> 128 bits.
std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        std::uint64_t key);

// Stateful convenience wrapper around one (key, stream) pair.
class Rng {
  public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(seed), stream_(stream) {}

    // Derived generator with an independent stream; deterministic in (seed, id).
    Rng substream(std::uint64_t id) const;

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    // Uniform integer on [0, n) without modulo bias (n >= 1).
    std::uint64_t uniform_below(std::uint64_t n);
    // Standard normal via Box-Muller (second value cached).
    double normal();
    // Chi-squared with `dof` degrees of freedom.
    double chi_squared(int dof);
    // Gamma(shape, 1) for shape >= 1 (Marsaglia-Tsang).
    double gamma(double shape);

    // Fisher-Yates shuffle of [first, first+n).
    template <typename T>
    void shuffle(T* first, std::size_t n) {
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_below(i));
            T tmp = first[i - 1];
            first[i - 1] = first[j];
            first[j] = tmp;
        }
    }

  private:
    void refill();

    std::uint64_t key_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t index_ = 0;       // block counter
    std::array<std::uint32_t, 4> buffer_{};
    int buffered_ = 0;              // unread words left in buffer_
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

// Stable 64-bit mix for deriving stream ids from structured coordinates.
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);

}  // namespace doetree
