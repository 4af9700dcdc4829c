#include "xsep/storage.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace xsep {
namespace storage {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

[[noreturn]] void format_fail(const std::string& path, size_t offset, const std::string& what) {
  throw FormatError(path + ": " + what + " (byte offset " + std::to_string(offset) + ")");
}

// Skips PGM whitespace and '#' comments starting at pos.
void skip_pgm_space(const std::string& buf, size_t& pos) {
  while (pos < buf.size()) {
    char c = buf[pos];
    if (c == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
}

uint64_t parse_pgm_uint(const std::string& buf, size_t& pos, const std::string& path) {
  skip_pgm_space(buf, pos);
  if (pos >= buf.size() || !std::isdigit(static_cast<unsigned char>(buf[pos])))
    format_fail(path, pos, "expected unsigned integer in PGM header");
  uint64_t v = 0;
  while (pos < buf.size() && std::isdigit(static_cast<unsigned char>(buf[pos]))) {
    v = v * 10 + static_cast<uint64_t>(buf[pos] - '0');
    ++pos;
  }
  return v;
}

ImagePlane read_pgm(const std::string& buf, const std::string& path) {
  bool binary = buf[1] == '5';
  size_t pos = 2;
  uint64_t width = parse_pgm_uint(buf, pos, path);
  uint64_t height = parse_pgm_uint(buf, pos, path);
  uint64_t maxval = parse_pgm_uint(buf, pos, path);
  if (width == 0 || height == 0) format_fail(path, pos, "zero image dimension");
  if (maxval == 0 || maxval > 65535) format_fail(path, pos, "unsupported maxval " + std::to_string(maxval));

  ImagePlane img(static_cast<Eigen::Index>(height), static_cast<Eigen::Index>(width));
  // 16-bit samples share the 8-bit nominal range.
  double scale = maxval > 255 ? 255.0 / 65535.0 : 1.0;

  if (binary) {
    // exactly one whitespace byte separates maxval from the payload
    if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos])))
      format_fail(path, pos, "missing whitespace before P5 payload");
    ++pos;
    size_t bytes_per = maxval > 255 ? 2 : 1;
    size_t need = static_cast<size_t>(width) * height * bytes_per;
    if (buf.size() - pos < need)
      format_fail(path, buf.size(), "truncated P5 payload, need " + std::to_string(need) + " bytes");
    const unsigned char* p = reinterpret_cast<const unsigned char*>(buf.data()) + pos;
    for (Eigen::Index r = 0; r < img.rows(); ++r)
      for (Eigen::Index c = 0; c < img.cols(); ++c) {
        uint32_t v;
        if (bytes_per == 2) {
          v = (static_cast<uint32_t>(p[0]) << 8) | p[1];  // big-endian per PGM
          p += 2;
        } else {
          v = *p++;
        }
        img(r, c) = static_cast<double>(v) * scale;
      }
  } else {
    for (Eigen::Index r = 0; r < img.rows(); ++r)
      for (Eigen::Index c = 0; c < img.cols(); ++c) {
        uint64_t v = parse_pgm_uint(buf, pos, path);
        img(r, c) = static_cast<double>(v) * scale;
      }
  }
  return img;
}

template <typename T>
void put_le(std::string& out, T v) {
  for (size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const std::string& buf, size_t pos) {
  T v = 0;
  for (size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<T>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  return v;
}

bool is_cdlm(const std::string& buf) {
  return buf.size() >= 4 && buf.compare(0, 4, "CDLM") == 0;
}

ImagePlane parse_cdlm(const std::string& buf, const std::string& path) {
  if (buf.size() < 24) format_fail(path, buf.size(), "truncated CDLM header");
  uint32_t version = get_le<uint32_t>(buf, 4);
  if (version != 1) format_fail(path, 4, "unsupported CDLM version " + std::to_string(version));
  uint64_t rows = get_le<uint64_t>(buf, 8);
  uint64_t cols = get_le<uint64_t>(buf, 16);
  size_t need = 24 + rows * cols * 8;
  if (buf.size() != need)
    format_fail(path, buf.size(), "CDLM payload size mismatch, expected " + std::to_string(need) + " bytes");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  size_t pos = 24;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      uint64_t bits = get_le<uint64_t>(buf, pos);
      double d;
      std::memcpy(&d, &bits, 8);
      m(r, c) = d;
      pos += 8;
    }
  return m;
}

}  // namespace

void write_matrix(const Eigen::MatrixXd& m, const std::string& path) {
  std::string out;
  out.reserve(24 + static_cast<size_t>(m.size()) * 8);
  out += "CDLM";
  put_le<uint32_t>(out, 1);
  put_le<uint64_t>(out, static_cast<uint64_t>(m.rows()));
  put_le<uint64_t>(out, static_cast<uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      uint64_t bits;
      double d = m(r, c);
      std::memcpy(&bits, &d, 8);
      put_le<uint64_t>(out, bits);
    }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw FormatError("write failed: " + path);
}

Eigen::MatrixXd read_matrix(const std::string& path) {
  std::string buf = read_file(path);
  if (!is_cdlm(buf)) format_fail(path, 0, "missing CDLM magic");
  return parse_cdlm(buf, path);
}

ImagePlane read_image(const std::string& path) {
  std::string buf = read_file(path);
  if (is_cdlm(buf)) return parse_cdlm(buf, path);
  if (buf.size() >= 2 && buf[0] == 'P' && (buf[1] == '2' || buf[1] == '5'))
    return read_pgm(buf, path);
  format_fail(path, 0, "not a PGM or CDLM file");
}

void write_image(const ImagePlane& img, const std::string& path) {
  if (img.rows() < 1 || img.cols() < 1) throw ArgumentError("empty image");
  if (!img.allFinite()) throw ArgumentError("non-finite pixels in image");
  bool pgm = path.size() >= 4 && path.compare(path.size() - 4, 4, ".pgm") == 0;
  if (!pgm) {
    write_matrix(img, path);
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot open for writing: " + path);
  f << "P5\n" << img.cols() << " " << img.rows() << "\n255\n";
  std::string payload;
  payload.reserve(static_cast<size_t>(img.size()));
  for (Eigen::Index r = 0; r < img.rows(); ++r)
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      double v = std::clamp(img(r, c), 0.0, 255.0);
      payload.push_back(static_cast<char>(static_cast<unsigned char>(std::floor(v + 0.5))));
    }
  f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!f) throw FormatError("write failed: " + path);
}

Eigen::MatrixXd read_mask(const std::string& path) {
  std::string buf = read_file(path);
  if (!(buf.size() >= 2 && buf[0] == 'P' && (buf[1] == '2' || buf[1] == '5')))
    format_fail(path, 0, "mask must be a PGM file");
  ImagePlane img = read_pgm(buf, path);
  return (img.array() != 0.0).cast<double>();
}

// --- IniConfig ---------------------------------------------------------------

namespace {
std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}
}  // namespace

IniConfig IniConfig::load(const std::string& path) {
  return parse(read_file(path));
}

IniConfig IniConfig::parse(const std::string& text) {
  IniConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw FormatError("unterminated section header at line " + std::to_string(lineno));
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos) throw FormatError("expected key = value at line " + std::to_string(lineno));
    cfg.sections_[section][trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return cfg;
}

bool IniConfig::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string IniConfig::get(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  if (s != sections_.end()) {
    auto k = s->second.find(key);
    if (k != s->second.end()) return k->second;
  }
  throw ArgumentError("missing config key [" + section + "] " + key);
}

std::string IniConfig::get_or(const std::string& section, const std::string& key,
                              const std::string& fallback) const {
  return has(section, key) ? get(section, key) : fallback;
}

double IniConfig::get_double(const std::string& section, const std::string& key) const {
  return std::stod(get(section, key));
}

long IniConfig::get_int(const std::string& section, const std::string& key) const {
  return std::stol(get(section, key));
}

void IniConfig::set(const std::string& section, const std::string& key, const std::string& value) {
  sections_[section][key] = value;
}

void IniConfig::save(const std::string& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw FormatError("cannot open for writing: " + path);
  for (const auto& [name, kv] : sections_) {
    if (!name.empty()) f << "[" << name << "]\n";
    for (const auto& [k, v] : kv) f << k << " = " << v << "\n";
  }
}

}  // namespace storage
}  // namespace xsep
