#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace scl::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Deterministic per-purpose stream seed: (master_seed, purpose_tag, index).
/// Evaluations derive all randomness through this, so results are independent
/// of thread scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                                 std::uint64_t index = 0) {
    std::uint64_t h = 1469598103934665603ull; // FNV-1a offset basis
    for (unsigned char c : purpose) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s) ^ h;
    std::uint64_t b = a + 0x632be59bd9b4e019ull * (index + 1);
    return splitmix64(b);
}

/// Seeded stream of uniforms and normals. Normals come from Box-Muller so the
/// draw count per sample is fixed and streams replay exactly.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : engine_(seed) {}
    Stream(std::uint64_t master, std::string_view purpose, std::uint64_t index = 0)
        : engine_(derive_seed(master, purpose, index)) {}

    /// Uniform on (0,1].
    double u01() {
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = u01();
        const double u2 = u01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        // modulo bias is negligible for n << 2^64
        return engine_() % n;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace scl::rng
