#include "doetree/rng.hpp"

#include <cmath>

namespace doetree {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        std::uint64_t key) {
    std::array<std::uint32_t, 4> c = counter;
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, c[0], hi0, lo0);
        mulhilo(kPhiloxM1, c[2], hi1, lo1);
        std::array<std::uint32_t, 4> next = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
        c = next;
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return c;
}

std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ splitmix64(b));
}

Rng Rng::substream(std::uint64_t id) const {
    return Rng(key_, mix64(stream_, id));
}

void Rng::refill() {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(index_),
        static_cast<std::uint32_t>(index_ >> 32),
        static_cast<std::uint32_t>(stream_),
        static_cast<std::uint32_t>(stream_ >> 32),
    };
    buffer_ = philox4x32(ctr, key_);
    ++index_;
    buffered_ = 4;
}

std::uint32_t Rng::next_u32() {
    if (buffered_ == 0) refill();
    return buffer_[4 - buffered_--];
}

std::uint64_t Rng::next_u64() {
    std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_below(std::uint64_t n) {
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v > limit);
    return v % n;
}

double Rng::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    double u1, u2;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_normal_ = r * std::sin(a);
    has_cached_normal_ = true;
    return r * std::cos(a);
}

double Rng::gamma(double shape) {
    // Marsaglia-Tsang squeeze, shape >= 1.
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = uniform();
        if (u < 1.0 - 0.0331 * (x * x) * (x * x)) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double Rng::chi_squared(int dof) {
    if (dof <= 128) {
        double s = 0.0;
        for (int i = 0; i < dof; ++i) {
            double z = normal();
            s += z * z;
        }
        return s;
    }
    return 2.0 * gamma(0.5 * dof);
}

}  // namespace doetree
