#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "hiervo/grid.hpp"

namespace hiervo {

/// Malformed input; the message names the file and byte offset (or line).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, size_t offset, const std::string& what);
  size_t offset() const { return offset_; }

 private:
  size_t offset_;
};

// PGM, binary P5, values quantized from [0,1]; maxval 255 or 65535 (16-bit
// samples big-endian per Netpbm).
void write_pgm(const std::string& path, const Grid& img, int maxval = 255);
Grid read_pgm(const std::string& path);

// PPM, binary P6, 3 channels, maxval 255.
void write_ppm(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);

// PFM, 32-bit float, scale -1.0 (little-endian), rows bottom-to-top per the
// de-facto convention. Round-trips float data exactly.
void write_pfm(const std::string& path, const Grid& img);
Grid read_pfm(const std::string& path);

// Minimal numeric CSV with one header line.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvData read_csv(const std::string& path);

/// %.17g formatting (shortest round-trippable double).
std::string format_double(double v);

}  // namespace hiervo
