#include "ccfdm/checkpoint.hpp"

#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

namespace ccfdm::ckpt {

void write_bytes(std::ostream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw IoError("checkpoint: write failed");
}

void read_bytes(std::istream& in, void* data, std::size_t n) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (!in) throw IoError("checkpoint: truncated file");
}

void write_u8(std::ostream& out, std::uint8_t v) { write_bytes(out, &v, 1); }
void write_u32(std::ostream& out, std::uint32_t v) { write_bytes(out, &v, 4); }
void write_u64(std::ostream& out, std::uint64_t v) { write_bytes(out, &v, 8); }
void write_f64(std::ostream& out, double v) { write_bytes(out, &v, 8); }

std::uint8_t read_u8(std::istream& in) {
  std::uint8_t v;
  read_bytes(in, &v, 1);
  return v;
}
std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v;
  read_bytes(in, &v, 4);
  return v;
}
std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v;
  read_bytes(in, &v, 8);
  return v;
}
double read_f64(std::istream& in) {
  double v;
  read_bytes(in, &v, 8);
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  write_bytes(out, s.data(), s.size());
}

std::string read_string(std::istream& in) {
  const auto n = read_u32(in);
  if (n > (1u << 30)) throw IoError("checkpoint: implausible string length");
  std::string s(n, '\0');
  if (n > 0) read_bytes(in, s.data(), n);
  return s;
}

void write_header(std::ostream& out) {
  write_bytes(out, kMagic, sizeof(kMagic));
  write_u32(out, kVersion);
}

void read_header(std::istream& in) {
  char magic[sizeof(kMagic)];
  read_bytes(in, magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("checkpoint: bad magic (not a checkpoint file)");
  }
  const auto version = read_u32(in);
  if (version != kVersion) {
    throw IoError("checkpoint: unsupported format version " + std::to_string(version));
  }
}

void write_end(std::ostream& out) { write_u32(out, kEndMarker); }

void read_end(std::istream& in) {
  if (read_u32(in) != kEndMarker) throw IoError("checkpoint: missing end marker");
}

namespace {

void write_array(std::ostream& out, const std::string& name, const TensorT<float>& t) {
  write_string(out, name);
  write_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape) write_u32(out, static_cast<std::uint32_t>(d));
  write_bytes(out, t.data.data(), t.data.size() * sizeof(float));
}

void read_array_into(std::istream& in, const std::string& expected_name, TensorT<float>& t) {
  const auto name = read_string(in);
  if (name != expected_name) {
    throw IoError("checkpoint: array '" + name + "' where '" + expected_name + "' expected");
  }
  const auto rank = read_u32(in);
  if (rank != static_cast<std::uint32_t>(t.rank())) {
    throw IoError("checkpoint: rank mismatch for " + name);
  }
  for (auto d : t.shape) {
    if (read_u32(in) != static_cast<std::uint32_t>(d)) {
      throw IoError("checkpoint: shape mismatch for " + name);
    }
  }
  read_bytes(in, t.data.data(), t.data.size() * sizeof(float));
}

}  // namespace

void write_param_set(std::ostream& out, const std::string& label, const ParameterSetT<float>& ps) {
  write_string(out, label);
  write_u32(out, static_cast<std::uint32_t>(ps.size()));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    write_array(out, ps.entry(i).name, ps.entry(i).value);
  }
}

void read_param_set(std::istream& in, const std::string& label, ParameterSetT<float>& ps) {
  const auto got = read_string(in);
  if (got != label) throw IoError("checkpoint: section '" + got + "' where '" + label + "' expected");
  const auto count = read_u32(in);
  if (count != static_cast<std::uint32_t>(ps.size())) {
    throw IoError("checkpoint: entry count mismatch in " + label);
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    read_array_into(in, ps.entry(i).name, ps.entry(i).value);
  }
}

void write_adam(std::ostream& out, const std::string& label, const AdamStateT<float>& st) {
  write_string(out, label);
  write_u64(out, static_cast<std::uint64_t>(st.step_count));
  write_u32(out, static_cast<std::uint32_t>(st.first_moment.size()));
  for (std::size_t i = 0; i < st.first_moment.size(); ++i) {
    write_array(out, "m" + std::to_string(i), st.first_moment[i]);
    write_array(out, "v" + std::to_string(i), st.second_moment[i]);
  }
}

void read_adam(std::istream& in, const std::string& label, AdamStateT<float>& st) {
  const auto got = read_string(in);
  if (got != label) throw IoError("checkpoint: section '" + got + "' where '" + label + "' expected");
  st.step_count = static_cast<std::int64_t>(read_u64(in));
  const auto count = read_u32(in);
  if (count != static_cast<std::uint32_t>(st.first_moment.size())) {
    throw IoError("checkpoint: moment count mismatch in " + label);
  }
  for (std::size_t i = 0; i < st.first_moment.size(); ++i) {
    read_array_into(in, "m" + std::to_string(i), st.first_moment[i]);
    read_array_into(in, "v" + std::to_string(i), st.second_moment[i]);
  }
}

void write_rng(std::ostream& out, const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  write_string(out, os.str());
}

void read_rng(std::istream& in, std::mt19937_64& rng) {
  std::istringstream is(read_string(in));
  is >> rng;
  if (!is) throw IoError("checkpoint: bad rng state");
}

void write_replay(std::ostream& out, const ReplayBuffer& buffer) {
  write_u64(out, static_cast<std::uint64_t>(buffer.capacity()));
  write_u64(out, static_cast<std::uint64_t>(buffer.obs_bytes()));
  write_u64(out, static_cast<std::uint64_t>(buffer.action_dim()));
  write_u64(out, static_cast<std::uint64_t>(buffer.cursor()));
  write_u64(out, static_cast<std::uint64_t>(buffer.size()));
  for (const auto& t : buffer.storage()) {
    write_bytes(out, t.obs.data(), t.obs.size());
    write_bytes(out, t.next_obs.data(), t.next_obs.size());
    for (double a : t.action) write_f64(out, a);
    write_f64(out, t.reward);
    write_u8(out, t.done ? 1 : 0);
  }
}

void read_replay(std::istream& in, ReplayBuffer& buffer) {
  const auto capacity = static_cast<std::int64_t>(read_u64(in));
  const auto obs_bytes = static_cast<std::int64_t>(read_u64(in));
  const auto action_dim = static_cast<std::int64_t>(read_u64(in));
  if (capacity != buffer.capacity() || obs_bytes != buffer.obs_bytes() ||
      action_dim != buffer.action_dim()) {
    throw IoError("checkpoint: replay geometry mismatch");
  }
  const auto cursor = static_cast<std::int64_t>(read_u64(in));
  const auto count = static_cast<std::int64_t>(read_u64(in));
  if (count > capacity) throw IoError("checkpoint: replay count exceeds capacity");
  std::vector<Transition> storage(static_cast<std::size_t>(count));
  for (auto& t : storage) {
    t.obs.resize(static_cast<std::size_t>(obs_bytes));
    t.next_obs.resize(static_cast<std::size_t>(obs_bytes));
    read_bytes(in, t.obs.data(), t.obs.size());
    read_bytes(in, t.next_obs.data(), t.next_obs.size());
    t.action.resize(static_cast<std::size_t>(action_dim));
    for (auto& a : t.action) a = read_f64(in);
    t.reward = read_f64(in);
    t.done = read_u8(in) != 0;
  }
  buffer.restore(std::move(storage), cursor);
}

}  // namespace ccfdm::ckpt
