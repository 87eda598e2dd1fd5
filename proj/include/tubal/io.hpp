#pragma once

// File formats.
//
// Tensor file (.t3d): the 4 bytes "T3D1", three uint64 little-endian dims
// n1 n2 n3, then n1*n2*n3 IEEE-754 binary64 little-endian values in storage
// order (i fastest, then j, then k).
//
// Mask file: text header lines
//     dims <n1> <n2> <n3>
//     model <uniform_without_replacement|bernoulli>
//     rate <rho>
//     seed <seed>
// followed by one "i j k" triple per line, 1-based.
//
// Heatmap: binary PGM (P5), one pixel per phase-grid cell, columns indexed by
// rank and rows by corruption fraction with the largest fraction on top;
// gray = floor(255 * fraction + 0.5). A sidecar CSV "<path>.csv" lists
// rank,gamma,rho,trials,success for every cell.

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "tubal/error.hpp"
#include "tubal/experiments.hpp"
#include "tubal/sampling.hpp"
#include "tubal/tensor.hpp"

namespace tubal::io {

static_assert(std::endian::native == std::endian::little, "tensor files assume a little-endian host");

inline constexpr char kTensorMagic[4] = {'T', '3', 'D', '1'};

/// Write `bytes` to `path` through a temporary file renamed into place, so a
/// failed write never leaves a partial file at `path`.
inline void write_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io_error, "cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw Error(Errc::io_error, "write to " + tmp.string() + " failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(Errc::io_error, "cannot rename into " + path.string() + ": " + ec.message());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string encode_tensor(const Tensor3& a) {
  std::string out(4 + 3 * 8 + a.size() * 8, '\0');
  std::memcpy(out.data(), kTensorMagic, 4);
  const std::uint64_t dims[3] = {a.dims().n1, a.dims().n2, a.dims().n3};
  std::memcpy(out.data() + 4, dims, sizeof dims);
  std::memcpy(out.data() + 28, a.data().data(), a.size() * 8);
  return out;
}

inline Tensor3 decode_tensor(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kTensorMagic, 4) != 0) {
    throw Error(Errc::bad_magic, "not a T3D1 tensor file");
  }
  if (bytes.size() < 28) throw Error(Errc::truncated_payload, "header shorter than 28 bytes");
  std::uint64_t dims[3];
  std::memcpy(dims, bytes.data() + 4, sizeof dims);
  constexpr std::uint64_t cap = std::numeric_limits<std::uint64_t>::max() / 8;
  std::uint64_t count = 1;
  for (auto n : dims) {
    if (n == 0) throw Error(Errc::dim_overflow, "zero dimension in header");
    if (count > cap / n) throw Error(Errc::dim_overflow, "dims overflow the payload size");
    count *= n;
  }
  const std::uint64_t payload = bytes.size() - 28;
  if (payload != count * 8) {
    throw Error(Errc::truncated_payload, "header promises " + std::to_string(count) + " values, payload holds " +
                                             std::to_string(payload / 8) +
                                             (payload % 8 ? " and a partial value" : ""));
  }
  std::vector<double> data(count);
  std::memcpy(data.data(), bytes.data() + 28, payload);
  return Tensor3(Dims{dims[0], dims[1], dims[2]}, std::move(data));
}

inline void write_tensor(const std::filesystem::path& path, const Tensor3& a) {
  write_atomic(path, encode_tensor(a));
}

inline Tensor3 read_tensor(const std::filesystem::path& path) { return decode_tensor(read_file(path)); }

inline std::string format_double(double x) {
  std::ostringstream ss;
  ss << std::setprecision(17) << x;
  return ss.str();
}

inline std::string encode_mask(const ObservationMask& m) {
  const Dims d = m.dims();
  std::ostringstream ss;
  ss << "dims " << d.n1 << ' ' << d.n2 << ' ' << d.n3 << '\n'
     << "model " << to_string(m.model()) << '\n'
     << "rate " << format_double(m.rate()) << '\n'
     << "seed " << m.seed() << '\n';
  for (auto n : m.indices()) {
    const std::size_t i = n % d.n1;
    const std::size_t j = (n / d.n1) % d.n2;
    const std::size_t k = n / d.slice_size();
    ss << i + 1 << ' ' << j + 1 << ' ' << k + 1 << '\n';
  }
  return ss.str();
}

inline ObservationMask decode_mask(const std::string& text) {
  std::istringstream in(text);
  Dims d{};
  SamplingModel model = SamplingModel::uniform_without_replacement;
  double rate = 1.0;
  std::uint64_t seed = 0;
  bool have_dims = false;
  std::vector<std::size_t> idx;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) {
    return Error(Errc::unsupported_format, "mask line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head) || head[0] == '#') continue;
    if (head == "dims") {
      if (!(ls >> d.n1 >> d.n2 >> d.n3) || d.size() == 0) throw fail("bad dims");
      have_dims = true;
    } else if (head == "model") {
      std::string name;
      ls >> name;
      model = parse_sampling_model(name);
    } else if (head == "rate") {
      if (!(ls >> rate)) throw fail("bad rate");
    } else if (head == "seed") {
      if (!(ls >> seed)) throw fail("bad seed");
    } else {
      if (!have_dims) throw fail("index before dims header");
      std::size_t i = 0, j = 0, k = 0;
      std::istringstream ts(line);
      if (!(ts >> i >> j >> k)) throw fail("expected 'i j k'");
      if (i < 1 || j < 1 || k < 1 || i > d.n1 || j > d.n2 || k > d.n3) {
        throw Error(Errc::index_out_of_bounds, "mask line " + std::to_string(lineno) + " outside " + to_string(d));
      }
      idx.push_back((i - 1) + d.n1 * ((j - 1) + d.n2 * (k - 1)));
    }
  }
  if (!have_dims) throw Error(Errc::unsupported_format, "mask file lacks a dims header");
  return ObservationMask(d, std::move(idx), model, rate, seed);
}

inline void write_mask(const std::filesystem::path& path, const ObservationMask& m) {
  write_atomic(path, encode_mask(m));
}

inline ObservationMask read_mask(const std::filesystem::path& path) { return decode_mask(read_file(path)); }

namespace detail {

/// Reads the whitespace/comment separated header tokens of a PNM file.
inline std::string pnm_token(const std::string& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      ++pos;
    } else if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  return bytes.substr(start, pos - start);
}

}  // namespace detail

/// Binary 8-bit P6 image as an h x w x 3 tensor with values in [0, 1].
inline Tensor3 decode_ppm(const std::string& bytes) {
  std::size_t pos = 0;
  if (detail::pnm_token(bytes, pos) != "P6") throw Error(Errc::unsupported_format, "expected a binary P6 pixmap");
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(detail::pnm_token(bytes, pos));
    h = std::stoul(detail::pnm_token(bytes, pos));
    maxval = std::stoul(detail::pnm_token(bytes, pos));
  } catch (const std::exception&) {
    throw Error(Errc::unsupported_format, "malformed P6 header");
  }
  if (w == 0 || h == 0 || maxval == 0 || maxval > 255) {
    throw Error(Errc::unsupported_format, "only 8-bit P6 pixmaps are supported");
  }
  ++pos;  // single whitespace byte after maxval
  if (bytes.size() < pos + w * h * 3) throw Error(Errc::truncated_payload, "pixmap payload too short");
  Tensor3 img(h, w, 3);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c)
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const auto v = static_cast<unsigned char>(bytes[pos + (r * w + c) * 3 + ch]);
        img(r, c, ch) = static_cast<double>(v) / static_cast<double>(maxval);
      }
  return img;
}

inline unsigned char quantize8(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

inline std::string encode_ppm(const Tensor3& img) {
  const Dims d = img.dims();
  if (d.n3 != 3) throw Error(Errc::dimension_mismatch, "pixmap needs 3 channels, got " + to_string(d));
  std::string out = "P6\n" + std::to_string(d.n2) + " " + std::to_string(d.n1) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + d.size());
  for (std::size_t r = 0; r < d.n1; ++r)
    for (std::size_t c = 0; c < d.n2; ++c)
      for (std::size_t ch = 0; ch < 3; ++ch)
        out[header + (r * d.n2 + c) * 3 + ch] = static_cast<char>(quantize8(img(r, c, ch)));
  return out;
}

inline Tensor3 read_ppm(const std::filesystem::path& path) { return decode_ppm(read_file(path)); }
inline void write_ppm(const std::filesystem::path& path, const Tensor3& img) { write_atomic(path, encode_ppm(img)); }

/// Round-half-up gray level of a success fraction.
inline unsigned char gray_level(double fraction) {
  return static_cast<unsigned char>(std::floor(255.0 * std::clamp(fraction, 0.0, 1.0) + 0.5));
}

inline std::string encode_heatmap(const PhaseGrid& g) {
  const std::size_t w = g.ranks.size();
  const std::size_t h = g.gammas.size();
  std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + w * h);
  for (std::size_t row = 0; row < h; ++row) {
    const std::size_t gi = h - 1 - row;
    for (std::size_t ri = 0; ri < w; ++ri) out[header + row * w + ri] = static_cast<char>(gray_level(g.at(ri, gi)));
  }
  return out;
}

inline std::string encode_grid_csv(const PhaseGrid& g) {
  std::ostringstream ss;
  ss << "rank,gamma,rho,trials,success\n";
  for (std::size_t ri = 0; ri < g.ranks.size(); ++ri)
    for (std::size_t gi = 0; gi < g.gammas.size(); ++gi)
      ss << g.ranks[ri] << ',' << format_double(g.gammas[gi]) << ',' << format_double(g.rho) << ',' << g.trials
         << ',' << format_double(g.at(ri, gi)) << '\n';
  return ss.str();
}

/// Writes the P5 heatmap to `path` and the axes CSV to `path` + ".csv".
inline void emit_heatmap(const PhaseGrid& g, const std::filesystem::path& path) {
  write_atomic(path, encode_heatmap(g));
  auto csv = path;
  csv += ".csv";
  write_atomic(csv, encode_grid_csv(g));
}

}  // namespace tubal::io
