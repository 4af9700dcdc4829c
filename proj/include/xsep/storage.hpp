#pragma once

#include <Eigen/Core>
#include <map>
#include <string>

#include "xsep/errors.hpp"

namespace xsep {

// 2-D grayscale raster, row index = image row. Values are reals in the
// nominal [0,255] range for 8-bit sources; intermediate pipeline results
// may leave that range.
using ImagePlane = Eigen::MatrixXd;

namespace storage {

// --- CDLM matrix container -------------------------------------------------
// "CDLM" magic, u32 version = 1, u64 rows, u64 cols, then rows*cols doubles,
// little-endian, row-major. Round-trips all finite doubles bit-exactly.

void write_matrix(const Eigen::MatrixXd& m, const std::string& path);
Eigen::MatrixXd read_matrix(const std::string& path);

// --- images ------------------------------------------------------------------

// Reads PGM (P2/P5, 8- or 16-bit) or a CDLM file, chosen by content.
// 16-bit samples are rescaled by 255/65535 into the nominal range.
ImagePlane read_image(const std::string& path);

// ".pgm" -> P5 with clamping to [0,255] and round-half-up; anything else is
// written as a lossless CDLM file.
void write_image(const ImagePlane& img, const std::string& path);

// PGM mask: 0 stays 0 (crack), any nonzero value becomes 1 (valid).
Eigen::MatrixXd read_mask(const std::string& path);

// --- INI configuration -------------------------------------------------------
// Minimal `key = value` file with [section] headers and '#'/';' comments.

class IniConfig {
 public:
  IniConfig() = default;
  static IniConfig load(const std::string& path);
  static IniConfig parse(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  long get_int(const std::string& section, const std::string& key) const;

  void set(const std::string& section, const std::string& key, const std::string& value);
  void save(const std::string& path) const;

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace storage
}  // namespace xsep
