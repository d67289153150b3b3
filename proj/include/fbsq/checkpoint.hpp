#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include "fbsq/errors.hpp"
#include "fbsq/solver.hpp"

// Binary checkpoint. Layout (all little-endian), see docs/checkpoint_format.md:
//
//   0   char[5]  "FBSQ1"
//   5   u8       bytes per complex coefficient (8 or 16)
//   6   u8       mu profile id
//   7   u8       reserved, 0
//   8   u64      N
//   16  f64      L
//   24  f64      alpha
//   32  f64      epsilon
//   40  f64      t
//   48  u64      seed
//   56  theta, u_x, u_y: N*N (re, im) pairs each, row-major
namespace fbsq {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

inline constexpr std::size_t kCheckpointHeaderBytes = 56;

struct CheckpointHeader {
  std::uint8_t coeff_bytes = 16;
  MuProfile mu_profile = MuProfile::exp_saturating;
  std::uint64_t n = 0;
  double box_length = 0.0;
  double alpha = 0.0;
  double epsilon = 0.0;
  double t = 0.0;
  std::uint64_t seed = 0;
};

struct Checkpoint {
  CheckpointHeader header;
  FlowState state;
};

namespace detail {

template <typename T>
void put(std::vector<char>& buf, T v) {
  const auto* p = reinterpret_cast<const char*>(&v);
  buf.insert(buf.end(), p, p + sizeof(T));
}

template <typename T>
T get(const char*& p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  p += sizeof(T);
  return v;
}

}  // namespace detail

/// Serialises a state with Real = float (complex64) or double (complex128).
template <typename Real = double>
void write_checkpoint(const std::string& path, const FlowState& s, const PhysParams& params, std::uint64_t seed) {
  static_assert(std::is_same_v<Real, float> || std::is_same_v<Real, double>);
  std::vector<char> buf;
  buf.insert(buf.end(), {'F', 'B', 'S', 'Q', '1'});
  detail::put<std::uint8_t>(buf, static_cast<std::uint8_t>(2 * sizeof(Real)));
  detail::put<std::uint8_t>(buf, static_cast<std::uint8_t>(params.mu_profile));
  detail::put<std::uint8_t>(buf, 0);
  detail::put<std::uint64_t>(buf, s.grid().n());
  detail::put<double>(buf, s.grid().box_length());
  detail::put<double>(buf, params.alpha);
  detail::put<double>(buf, params.epsilon);
  detail::put<double>(buf, s.t);
  detail::put<std::uint64_t>(buf, seed);
  for (const SpectralField* f : {&s.theta, &s.u.x, &s.u.y})
    for (const auto& z : f->coeffs()) {
      detail::put<Real>(buf, static_cast<Real>(z.real()));
      detail::put<Real>(buf, static_cast<Real>(z.imag()));
    }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open checkpoint for writing: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoFailure("short write to checkpoint: " + path);
}

/// Reads either precision back into double-precision fields on a fresh grid.
inline Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open checkpoint: " + path);
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < kCheckpointHeaderBytes || std::memcmp(buf.data(), "FBSQ1", 5) != 0)
    throw IoFailure("not a checkpoint file: " + path);
  const char* p = buf.data() + 5;
  Checkpoint ck;
  auto& h = ck.header;
  h.coeff_bytes = detail::get<std::uint8_t>(p);
  const auto profile = detail::get<std::uint8_t>(p);
  detail::get<std::uint8_t>(p);
  if (h.coeff_bytes != 8 && h.coeff_bytes != 16) throw IoFailure("bad coefficient width in " + path);
  if (profile > 1) throw IoFailure("unknown viscosity profile id in " + path);
  h.mu_profile = static_cast<MuProfile>(profile);
  h.n = detail::get<std::uint64_t>(p);
  h.box_length = detail::get<double>(p);
  h.alpha = detail::get<double>(p);
  h.epsilon = detail::get<double>(p);
  h.t = detail::get<double>(p);
  h.seed = detail::get<std::uint64_t>(p);
  const std::size_t count = static_cast<std::size_t>(h.n) * static_cast<std::size_t>(h.n);
  if (buf.size() != kCheckpointHeaderBytes + 3 * count * h.coeff_bytes)
    throw IoFailure("checkpoint size does not match its header: " + path);

  GridPtr grid;
  try {
    grid = Grid::make(static_cast<std::size_t>(h.n), h.box_length);
  } catch (const InvalidGrid& e) {
    throw IoFailure(std::string("checkpoint grid invalid: ") + e.what());
  }
  auto read_field = [&]() {
    SpectralField f(grid);
    for (auto& z : f.coeffs()) {
      if (h.coeff_bytes == 16) {
        const double re = detail::get<double>(p);
        z = Complex(re, detail::get<double>(p));
      } else {
        const float re = detail::get<float>(p);
        z = Complex(re, detail::get<float>(p));
      }
    }
    return f;
  };
  ck.state.theta = read_field();
  ck.state.u.x = read_field();
  ck.state.u.y = read_field();
  ck.state.t = h.t;
  return ck;
}

}  // namespace fbsq
