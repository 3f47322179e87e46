#pragma once

// Matrix container for problems (A, f, optional f_star, u_star).
//
// CSV: first line "m,n"; then m rows of A; then one line per vector, each
// prefixed with its name: "f,...", "f_star,...", "u_star,...".
//
// Binary: "RPTP", u8 version (1), u32 m, u32 n, u8 flags (bit 0 f_star,
// bit 1 u_star), then little-endian f64: A row-major, f, [f_star], [u_star].

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tikreg/errors.hpp"
#include "tikreg/spectral.hpp"

namespace tikreg {

/// Write through a sibling temporary file and rename it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open for writing: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw ConfigError("write failed: " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw ConfigError("cannot rename into place: " + path.string());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

inline std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void append_row(std::string& out, const double* data, Eigen::Index len) {
  for (Eigen::Index i = 0; i < len; ++i) {
    if (i) out += ',';
    out += format_g17(data[i]);
  }
  out += '\n';
}

inline std::vector<double> parse_numbers(const std::string& line, std::size_t skip_fields) {
  std::vector<double> v;
  std::stringstream ss(line);
  std::string cell;
  std::size_t field = 0;
  while (std::getline(ss, cell, ',')) {
    if (field++ < skip_fields) continue;
    try {
      std::size_t used = 0;
      v.push_back(std::stod(cell, &used));
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw ConfigError("csv: not a number: '" + cell + "'");
    }
  }
  return v;
}

}  // namespace detail

inline std::string to_csv(const Problem& p) {
  p.validate();
  std::string out = std::to_string(p.a.rows()) + "," + std::to_string(p.a.cols()) + "\n";
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = p.a;
  for (Eigen::Index i = 0; i < rm.rows(); ++i) detail::append_row(out, rm.row(i).data(), rm.cols());
  auto vec = [&](const char* name, const Vector& v) {
    out += name;
    out += ',';
    detail::append_row(out, v.data(), v.size());
  };
  vec("f", p.f);
  if (p.f_star) vec("f_star", *p.f_star);
  if (p.u_star) vec("u_star", *p.u_star);
  return out;
}

inline Problem from_csv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line)) throw ConfigError("csv: missing header");
  const auto dims = detail::parse_numbers(line, 0);
  if (dims.size() != 2 || dims[0] < 1 || dims[1] < 1) throw ConfigError("csv: header must be m,n");
  const auto m = static_cast<Eigen::Index>(dims[0]), n = static_cast<Eigen::Index>(dims[1]);
  Problem p;
  p.a.resize(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!std::getline(ss, line)) throw ConfigError("csv: truncated matrix");
    const auto row = detail::parse_numbers(line, 0);
    if (static_cast<Eigen::Index>(row.size()) != n) throw ConfigError("csv: bad row length");
    for (Eigen::Index j = 0; j < n; ++j) p.a(i, j) = row[static_cast<std::size_t>(j)];
  }
  bool have_f = false;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const auto name = line.substr(0, line.find(','));
    const auto vals = detail::parse_numbers(line, 1);
    const Eigen::Index want = name == "u_star" ? n : m;
    if (static_cast<Eigen::Index>(vals.size()) != want)
      throw ConfigError("csv: bad length for " + name);
    Vector v = Eigen::Map<const Vector>(vals.data(), want);
    if (name == "f") {
      p.f = v;
      have_f = true;
    } else if (name == "f_star") {
      p.f_star = v;
    } else if (name == "u_star") {
      p.u_star = v;
    } else {
      throw ConfigError("csv: unknown section " + name);
    }
  }
  if (!have_f) throw ConfigError("csv: missing f");
  p.validate();
  return p;
}

namespace detail {

template <class T>
void put_le(std::string& out, T v) {
  static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.append(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw ConfigError("binary: truncated input");
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  pos += sizeof(T);
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace detail

inline constexpr char kBinaryMagic[4] = {'R', 'P', 'T', 'P'};
inline constexpr std::uint8_t kBinaryVersion = 1;

inline std::string to_binary(const Problem& p) {
  p.validate();
  std::string out(kBinaryMagic, 4);
  detail::put_le<std::uint8_t>(out, kBinaryVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.a.rows()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.a.cols()));
  const std::uint8_t flags = (p.f_star ? 1 : 0) | (p.u_star ? 2 : 0);
  detail::put_le<std::uint8_t>(out, flags);
  for (Eigen::Index i = 0; i < p.a.rows(); ++i)
    for (Eigen::Index j = 0; j < p.a.cols(); ++j) detail::put_le<double>(out, p.a(i, j));
  auto vec = [&](const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) detail::put_le<double>(out, v(i));
  };
  vec(p.f);
  if (p.f_star) vec(*p.f_star);
  if (p.u_star) vec(*p.u_star);
  return out;
}

inline Problem from_binary(const std::string& in) {
  if (in.size() < 4 || std::memcmp(in.data(), kBinaryMagic, 4) != 0)
    throw ConfigError("binary: bad magic");
  std::size_t pos = 4;
  const auto version = detail::get_le<std::uint8_t>(in, pos);
  if (version != kBinaryVersion) throw ConfigError("binary: unsupported version");
  const auto m = detail::get_le<std::uint32_t>(in, pos);
  const auto n = detail::get_le<std::uint32_t>(in, pos);
  const auto flags = detail::get_le<std::uint8_t>(in, pos);
  if (m == 0 || n == 0) throw ConfigError("binary: empty dimensions");
  if (flags & ~3u) throw ConfigError("binary: unknown flags");
  Problem p;
  p.a.resize(m, n);
  for (Eigen::Index i = 0; i < p.a.rows(); ++i)
    for (Eigen::Index j = 0; j < p.a.cols(); ++j) p.a(i, j) = detail::get_le<double>(in, pos);
  auto vec = [&](std::uint32_t len) {
    Vector v(len);
    for (std::uint32_t i = 0; i < len; ++i) v(i) = detail::get_le<double>(in, pos);
    return v;
  };
  p.f = vec(m);
  if (flags & 1) p.f_star = vec(m);
  if (flags & 2) p.u_star = vec(n);
  if (pos != in.size()) throw ConfigError("binary: trailing bytes");
  p.validate();
  return p;
}

inline bool is_binary_path(const std::filesystem::path& path) { return path.extension() == ".rptp"; }

inline void save_problem(const std::filesystem::path& path, const Problem& p) {
  write_file_atomic(path, is_binary_path(path) ? to_binary(p) : to_csv(p));
}

inline Problem load_problem(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kBinaryMagic, 4) == 0) return from_binary(bytes);
  return from_csv(bytes);
}

}  // namespace tikreg
