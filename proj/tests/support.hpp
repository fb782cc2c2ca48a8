#pragma once

#include <cstdint>
#include <random>

// Every randomized test draws from this seed so failures replay exactly.
inline constexpr std::uint64_t kTestSeed = 20240607;

inline std::mt19937_64 test_rng(std::uint64_t salt = 0) { return std::mt19937_64(kTestSeed + salt); }
