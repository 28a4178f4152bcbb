#pragma once

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "adlbr/grid.hpp"

namespace adlbr {

namespace detail {

// Skips PNM whitespace and '#' comments, then reads one unsigned integer.
inline bool pnm_uint(std::istream& is, long long& out) {
  int ch;
  while ((ch = is.peek()) != EOF) {
    if (std::isspace(ch)) {
      is.get();
    } else if (ch == '#') {
      std::string line;
      std::getline(is, line);
    } else {
      break;
    }
  }
  if (!(is >> out)) return false;
  return out >= 0;
}

inline void store_f32_le(std::string& buf, float v) {
  const auto u = std::bit_cast<std::uint32_t>(v);
  buf.push_back(static_cast<char>(u & 0xff));
  buf.push_back(static_cast<char>((u >> 8) & 0xff));
  buf.push_back(static_cast<char>((u >> 16) & 0xff));
  buf.push_back(static_cast<char>((u >> 24) & 0xff));
}

inline float load_f32_le(const unsigned char* p) {
  const std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                          (static_cast<std::uint32_t>(p[1]) << 8) |
                          (static_cast<std::uint32_t>(p[2]) << 16) |
                          (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(u);
}

inline std::string read_all(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return std::move(ss).str();
}

}  // namespace detail

/// Reads a binary (P5) or ASCII (P2) PGM image, maxval <= 65535. Samples
/// are scaled to [0,1] by 1/maxval; two-byte samples are big-endian per
/// the PNM convention. Spacing 1, Neumann boundary.
inline ScalarField2 read_pgm(std::istream& is) {
  char m0 = 0, m1 = 0;
  is.get(m0);
  is.get(m1);
  if (!is || m0 != 'P') throw std::runtime_error("pgm: malformed header");
  if (m1 != '5' && m1 != '2')
    throw std::runtime_error(std::string("pgm: unsupported magic P") + m1);
  const bool binary = m1 == '5';

  long long w = 0, h = 0, maxval = 0;
  if (!detail::pnm_uint(is, w) || !detail::pnm_uint(is, h) || !detail::pnm_uint(is, maxval))
    throw std::runtime_error("pgm: malformed header");
  if (w < 1 || h < 1 || maxval < 1 || maxval > 65535)
    throw std::runtime_error("pgm: malformed header");

  if (w > (1 << 20) || h > (1 << 20) || w * h > (1ll << 31))
    throw std::runtime_error("pgm: malformed header");

  const Grid<2> g({static_cast<int>(w), static_cast<int>(h)}, 1.0,
                  Boundary::neumann_truncate);
  ScalarField2 u(g);
  const double scale = 1.0 / static_cast<double>(maxval);
  if (binary) {
    is.get();  // single whitespace after maxval
    const int bytes = maxval > 255 ? 2 : 1;
    const std::size_t need = static_cast<std::size_t>(w) * h * bytes;
    // validate the advertised size against the stream before allocating
    const auto pos = is.tellg();
    if (pos != std::istream::pos_type(-1)) {
      is.seekg(0, std::ios::end);
      const auto end = is.tellg();
      is.seekg(pos);
      if (end != std::istream::pos_type(-1) &&
          static_cast<std::uint64_t>(end - pos) < need)
        throw std::runtime_error("pgm: truncated payload");
    }
    std::vector<char> buf(need);
    is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (is.gcount() != static_cast<std::streamsize>(buf.size()))
      throw std::runtime_error("pgm: truncated payload");
    for (std::size_t i = 0; i < u.values.size(); ++i) {
      const auto* p = reinterpret_cast<const unsigned char*>(buf.data()) + i * bytes;
      const long long v = bytes == 2 ? (static_cast<long long>(p[0]) << 8) | p[1] : p[0];
      u.values[i] = v * scale;
    }
  } else {
    for (std::size_t i = 0; i < u.values.size(); ++i) {
      long long v;
      if (!detail::pnm_uint(is, v)) throw std::runtime_error("pgm: truncated payload");
      if (v > maxval) throw std::runtime_error("pgm: sample exceeds maxval");
      u.values[i] = v * scale;
    }
  }
  return u;
}

inline ScalarField2 read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_pgm(is);
}

/// Writes a P5 PGM, mapping [lo, hi] affinely to [0, 255] with clamping and
/// half-away-from-zero rounding.
inline void write_pgm(const ScalarField2& u, std::ostream& os, double lo = 0.0,
                      double hi = 1.0) {
  if (!(hi > lo)) throw std::invalid_argument("pgm: empty clip range");
  os << "P5\n" << u.grid.extents[0] << " " << u.grid.extents[1] << "\n255\n";
  std::string buf;
  buf.reserve(u.values.size());
  for (double v : u.values) {
    double t = (v - lo) / (hi - lo) * 255.0;
    t = std::min(255.0, std::max(0.0, t));
    buf.push_back(static_cast<char>(static_cast<unsigned char>(std::llround(t))));
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

inline void write_pgm(const ScalarField2& u, const std::string& path, double lo = 0.0,
                      double hi = 1.0) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_pgm(u, os, lo, hi);
}

// ---------------------------------------------------------------------------
// ADLBRv1 volume container: one ASCII header line
//   ADLBRv1 <scalar|sym2|sym3> <d> <extents...> <spacing>
// followed by little-endian float32 payload, x fastest, symmetric matrices
// stored as their upper triangle (3 or 6 components).
// ---------------------------------------------------------------------------

namespace detail {

struct VolumeHeader {
  std::string kind;
  int dim = 0;
  std::array<int, 3> extents{};
  double spacing = 1.0;
  std::size_t payload_offset = 0;
};

inline VolumeHeader parse_volume_header(const std::string& data) {
  const auto eol = data.find('\n');
  if (eol == std::string::npos) throw std::runtime_error("volume: malformed header");
  std::istringstream line(data.substr(0, eol));
  VolumeHeader h;
  std::string magic;
  line >> magic;
  if (magic != "ADLBRv1") throw std::runtime_error("volume: unsupported magic");
  line >> h.kind >> h.dim;
  if (!line || (h.kind != "scalar" && h.kind != "sym2" && h.kind != "sym3"))
    throw std::runtime_error("volume: malformed header");
  if (h.dim != 2 && h.dim != 3) throw std::runtime_error("volume: malformed header");
  if ((h.kind == "sym2" && h.dim != 2) || (h.kind == "sym3" && h.dim != 3))
    throw std::runtime_error("volume: kind/dimension mismatch");
  for (int i = 0; i < h.dim; ++i) {
    line >> h.extents[i];
    if (!line || h.extents[i] < 1) throw std::runtime_error("volume: malformed header");
  }
  line >> h.spacing;
  if (!line || !(h.spacing > 0)) throw std::runtime_error("volume: malformed header");
  h.payload_offset = eol + 1;
  return h;
}

inline void check_payload(const std::string& data, const VolumeHeader& h, int comps) {
  // Size is validated before any allocation happens downstream.
  std::uint64_t cells = 1;
  for (int i = 0; i < h.dim; ++i) {
    cells *= static_cast<std::uint64_t>(h.extents[i]);
    if (cells > (1ull << 40)) throw std::runtime_error("volume: malformed header");
  }
  const std::uint64_t want = cells * comps * 4;
  const std::uint64_t have = data.size() - h.payload_offset;
  if (have < want) throw std::runtime_error("volume: truncated payload");
  if (have > want) throw std::runtime_error("volume: payload size mismatch");
}

template <int N>
inline Grid<N> header_grid(const VolumeHeader& h) {
  std::array<int, N> ext;
  for (int i = 0; i < N; ++i) ext[i] = h.extents[i];
  return Grid<N>(ext, h.spacing, Boundary::neumann_truncate);
}

}  // namespace detail

template <int N>
inline void write_volume(const ScalarField<N>& u, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "ADLBRv1 scalar " << N;
  for (int e : u.grid.extents) os << " " << e;
  os << " " << u.grid.spacing << "\n";
  std::string buf;
  buf.reserve(u.values.size() * 4);
  for (double v : u.values) detail::store_f32_le(buf, static_cast<float>(v));
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

template <int N>
inline void write_volume(const TensorField<N>& t, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "ADLBRv1 " << (N == 2 ? "sym2" : "sym3") << " " << N;
  for (int e : t.grid.extents) os << " " << e;
  os << " " << t.grid.spacing << "\n";
  std::string buf;
  buf.reserve(t.tensors.size() * SymMat<N>::packed_size * 4);
  for (const auto& m : t.tensors)
    for (double v : m.a) detail::store_f32_le(buf, static_cast<float>(v));
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

template <int N>
inline ScalarField<N> read_scalar_volume(const std::string& path) {
  const std::string data = detail::read_all(path);
  const auto h = detail::parse_volume_header(data);
  if (h.kind != "scalar") throw std::runtime_error("volume: kind mismatch, want scalar");
  if (h.dim != N) throw std::runtime_error("volume: dimension mismatch");
  detail::check_payload(data, h, 1);
  ScalarField<N> u(detail::header_grid<N>(h));
  const auto* p = reinterpret_cast<const unsigned char*>(data.data()) + h.payload_offset;
  for (std::size_t i = 0; i < u.values.size(); ++i)
    u.values[i] = detail::load_f32_le(p + 4 * i);
  return u;
}

template <int N>
inline TensorField<N> read_tensor_volume(const std::string& path) {
  const std::string data = detail::read_all(path);
  const auto h = detail::parse_volume_header(data);
  const std::string want_kind = N == 2 ? "sym2" : "sym3";
  if (h.kind != want_kind)
    throw std::runtime_error("volume: kind mismatch, want " + want_kind);
  if (h.dim != N) throw std::runtime_error("volume: dimension mismatch");
  constexpr int comps = SymMat<N>::packed_size;
  detail::check_payload(data, h, comps);
  TensorField<N> t(detail::header_grid<N>(h));
  const auto* p = reinterpret_cast<const unsigned char*>(data.data()) + h.payload_offset;
  for (std::size_t i = 0; i < t.tensors.size(); ++i)
    for (int k = 0; k < comps; ++k)
      t.tensors[i].a[k] = detail::load_f32_le(p + 4 * (i * comps + k));
  return t;
}

}  // namespace adlbr
