#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>

#include "ccfdm/params.hpp"
#include "ccfdm/replay.hpp"

namespace ccfdm {

// Binary checkpoint primitives. Layout (little-endian throughout) is
// documented in docs/checkpoint_format.md; the file starts with a magic
// string and format version and ends with an end marker so truncation is
// always detected.
namespace ckpt {

inline constexpr char kMagic[8] = {'C', 'C', 'F', 'D', 'M', 'C', 'K', 'P'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::uint32_t kEndMarker = 0x21444e45;  // "END!"

void write_header(std::ostream& out);
void read_header(std::istream& in);  // IoError on bad magic or version
void write_end(std::ostream& out);
void read_end(std::istream& in);

void write_u8(std::ostream& out, std::uint8_t v);
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f64(std::ostream& out, double v);
void write_string(std::ostream& out, const std::string& s);
void write_bytes(std::ostream& out, const void* data, std::size_t n);

std::uint8_t read_u8(std::istream& in);
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
double read_f64(std::istream& in);
std::string read_string(std::istream& in);
void read_bytes(std::istream& in, void* data, std::size_t n);

// Named array block: set label, then per entry (name, rank, dims, raw f32).
void write_param_set(std::ostream& out, const std::string& label, const ParameterSetT<float>& ps);
void read_param_set(std::istream& in, const std::string& label, ParameterSetT<float>& ps);

// Adam state: step counter plus first/second moment arrays (f32).
void write_adam(std::ostream& out, const std::string& label, const AdamStateT<float>& st);
void read_adam(std::istream& in, const std::string& label, AdamStateT<float>& st);

// RNG engine serialized textually (exact round-trip).
void write_rng(std::ostream& out, const std::mt19937_64& rng);
void read_rng(std::istream& in, std::mt19937_64& rng);

void write_replay(std::ostream& out, const ReplayBuffer& buffer);
void read_replay(std::istream& in, ReplayBuffer& buffer);

}  // namespace ckpt

}  // namespace ccfdm
