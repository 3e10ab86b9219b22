#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace twas {

// splitmix64 finalizer; used to key independent streams.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Seed for the stream identified by (base, keys...).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) noexcept;

// FNV-1a, 64 bit.
std::uint64_t hash_string(std::string_view text) noexcept;

// Platform-independent random stream. Built only on the mt19937_64 output
// sequence, which the standard pins down exactly; the std distributions are
// implementation-defined and are not used.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on the open interval (0, 1).
    double uniform();

    // Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

    // Standard normal (Box-Muller, pairs cached).
    double normal();

private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

} // namespace twas
