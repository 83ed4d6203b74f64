#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace ccfdm {

// Misconfigured shapes, names, or option values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values where finite ones are required (divergence signal).
class NumericsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Requested operation needs more data than is available yet.
class NotReadyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Serialization failures: bad magic, version, truncation.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Named RNG streams, all derived from one master seed. Keeping the streams
// separate lets an ablation perturb one consumer without shifting the others.
enum class Stream : std::uint32_t {
  Env = 1,
  CropQuery = 2,
  CropKey = 3,
  Actor = 4,
  Replay = 5,
  Eval = 6,
  Init = 7,
};

inline std::mt19937_64 make_stream(std::uint64_t master_seed, Stream stream) {
  std::seed_seq seq{
      static_cast<std::uint32_t>(master_seed & 0xffffffffu),
      static_cast<std::uint32_t>(master_seed >> 32),
      static_cast<std::uint32_t>(stream),
  };
  std::mt19937_64 rng(0);
  rng.seed(seq);
  return rng;
}

// Derives a standalone seed (evaluation episodes build their own engines
// from these instead of consuming a shared stream).
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = master_seed ^ (a * 0x9e3779b97f4a7c15ull) ^ (b * 0xbf58476d1ce4e5b9ull);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

// Keeps large activation buffers on the heap instead of round-tripping them
// through mmap on every tape; batched conv training frees multi-MB tensors
// every update and the default glibc threshold spends ~25% of wall time in
// page faults.
inline void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 512 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 512 * 1024 * 1024);
#endif
}

// FNV-1a over raw bytes; used for update-input traces.
inline std::uint64_t fnv1a64(const void* bytes, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace ccfdm
