#include "hiervo/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace hiervo {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path);
}

// Cursor over a Netpbm/PFM header; tracks the byte offset for errors.
struct HeaderCursor {
  const std::string& buf;
  const std::string& path;
  size_t pos = 0;

  void skip_space_and_comments() {
    while (pos < buf.size()) {
      if (std::isspace(static_cast<unsigned char>(buf[pos]))) {
        ++pos;
      } else if (buf[pos] == '#') {
        while (pos < buf.size() && buf[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  }

  std::string token() {
    skip_space_and_comments();
    if (pos >= buf.size()) throw ParseError(path, pos, "unexpected end of header");
    const size_t start = pos;
    while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
    return buf.substr(start, pos - start);
  }

  long integer() {
    const size_t at = pos;
    const std::string t = token();
    try {
      size_t used = 0;
      const long v = std::stol(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw ParseError(path, at, "expected integer, got '" + t + "'");
    }
  }

  double real() {
    const size_t at = pos;
    const std::string t = token();
    try {
      size_t used = 0;
      const double v = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw ParseError(path, at, "expected number, got '" + t + "'");
    }
  }

  // Exactly one whitespace byte separates the header from raster data.
  void expect_single_space() {
    if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos]))) {
      throw ParseError(path, pos, "expected whitespace before raster data");
    }
    ++pos;
  }
};

bool host_is_little_endian() {
  const uint16_t probe = 1;
  return *reinterpret_cast<const uint8_t*>(&probe) == 1;
}

}  // namespace

ParseError::ParseError(const std::string& path, size_t offset, const std::string& what)
    : std::runtime_error(path + ": byte " + std::to_string(offset) + ": " + what),
      offset_(offset) {}

void write_pgm(const std::string& path, const Grid& img, int maxval) {
  if (img.channels() != 1) throw std::invalid_argument("write_pgm: expected 1 channel");
  if (maxval != 255 && maxval != 65535) throw std::invalid_argument("write_pgm: maxval must be 255 or 65535");
  std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) +
                    "\n" + std::to_string(maxval) + "\n";
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const long q = std::lround(std::clamp(img.at(y, x), 0.0, 1.0) * maxval);
      if (maxval == 255) {
        out.push_back(static_cast<char>(q));
      } else {
        out.push_back(static_cast<char>((q >> 8) & 0xff));
        out.push_back(static_cast<char>(q & 0xff));
      }
    }
  }
  write_file(path, out);
}

Grid read_pgm(const std::string& path) {
  const std::string buf = read_file(path);
  HeaderCursor cur{buf, path};
  const std::string magic = cur.token();
  if (magic != "P5") throw ParseError(path, 0, "expected magic P5, got '" + magic + "'");
  const long w = cur.integer();
  const long h = cur.integer();
  const long maxval = cur.integer();
  if (w <= 0 || h <= 0) throw ParseError(path, cur.pos, "non-positive dimensions");
  if (maxval != 255 && maxval != 65535) throw ParseError(path, cur.pos, "unsupported maxval");
  cur.expect_single_space();
  const int bytes = maxval == 255 ? 1 : 2;
  const size_t need = static_cast<size_t>(w) * h * bytes;
  if (buf.size() - cur.pos < need) throw ParseError(path, buf.size(), "truncated raster data");
  Grid img(static_cast<int>(h), static_cast<int>(w), 1);
  size_t p = cur.pos;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      long q = static_cast<unsigned char>(buf[p++]);
      if (bytes == 2) q = (q << 8) | static_cast<unsigned char>(buf[p++]);
      img.at(y, x) = static_cast<double>(q) / maxval;
    }
  }
  return img;
}

void write_ppm(const std::string& path, const Image& img) {
  if (img.channels() != 3) throw std::invalid_argument("write_ppm: expected 3 channels");
  std::string out = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) +
                    "\n255\n";
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        out.push_back(static_cast<char>(std::lround(std::clamp(img.at(y, x, c), 0.0, 1.0) * 255)));
      }
    }
  }
  write_file(path, out);
}

Image read_ppm(const std::string& path) {
  const std::string buf = read_file(path);
  HeaderCursor cur{buf, path};
  const std::string magic = cur.token();
  if (magic != "P6") throw ParseError(path, 0, "expected magic P6, got '" + magic + "'");
  const long w = cur.integer();
  const long h = cur.integer();
  const long maxval = cur.integer();
  if (w <= 0 || h <= 0) throw ParseError(path, cur.pos, "non-positive dimensions");
  if (maxval != 255) throw ParseError(path, cur.pos, "unsupported maxval");
  cur.expect_single_space();
  const size_t need = static_cast<size_t>(w) * h * 3;
  if (buf.size() - cur.pos < need) throw ParseError(path, buf.size(), "truncated raster data");
  Image img(static_cast<int>(h), static_cast<int>(w), 3);
  size_t p = cur.pos;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<unsigned char>(buf[p++]) / 255.0;
  return img;
}

void write_pfm(const std::string& path, const Grid& img) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw std::invalid_argument("write_pfm: expected 1 or 3 channels");
  }
  const bool color = img.channels() == 3;
  // Negative scale marks little-endian samples.
  std::string out = std::string(color ? "PF" : "Pf") + "\n" + std::to_string(img.width()) + " " +
                    std::to_string(img.height()) + "\n-1.0\n";
  const bool little = host_is_little_endian();
  for (int y = img.height() - 1; y >= 0; --y) {  // bottom-to-top
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        const float f = static_cast<float>(img.at(y, x, c));
        char bytes[4];
        std::memcpy(bytes, &f, 4);
        if (!little) std::swap(bytes[0], bytes[3]), std::swap(bytes[1], bytes[2]);
        out.append(bytes, 4);
      }
    }
  }
  write_file(path, out);
}

Grid read_pfm(const std::string& path) {
  const std::string buf = read_file(path);
  HeaderCursor cur{buf, path};
  const std::string magic = cur.token();
  int channels = 0;
  if (magic == "Pf")
    channels = 1;
  else if (magic == "PF")
    channels = 3;
  else
    throw ParseError(path, 0, "expected magic Pf or PF, got '" + magic + "'");
  const long w = cur.integer();
  const long h = cur.integer();
  const double scale = cur.real();
  if (w <= 0 || h <= 0) throw ParseError(path, cur.pos, "non-positive dimensions");
  if (scale == 0.0) throw ParseError(path, cur.pos, "zero scale");
  cur.expect_single_space();
  const bool file_little = scale < 0;
  const size_t need = static_cast<size_t>(w) * h * channels * 4;
  if (buf.size() - cur.pos < need) throw ParseError(path, buf.size(), "truncated raster data");
  Grid img(static_cast<int>(h), static_cast<int>(w), channels);
  const bool little = host_is_little_endian();
  size_t p = cur.pos;
  for (int y = static_cast<int>(h) - 1; y >= 0; --y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        char bytes[4];
        std::memcpy(bytes, buf.data() + p, 4);
        p += 4;
        if (file_little != little) {
          std::swap(bytes[0], bytes[3]);
          std::swap(bytes[1], bytes[2]);
        }
        float f;
        std::memcpy(&f, bytes, 4);
        img.at(y, x, c) = static_cast<double>(f);
      }
    }
  }
  return img;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (size_t i = 0; i < header.size(); ++i) {
    out += header[i];
    out += (i + 1 < header.size()) ? "," : "\n";
  }
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      out += format_double(row[i]);
      out += (i + 1 < row.size()) ? "," : "\n";
    }
  }
  write_file(path, out);
}

CsvData read_csv(const std::string& path) {
  const std::string buf = read_file(path);
  CsvData out;
  std::istringstream in(buf);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    if (lineno == 1) {
      while (std::getline(ls, cell, ',')) out.header.push_back(cell);
      continue;
    }
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError(path, lineno, "bad number '" + cell + "' on line " + std::to_string(lineno));
      }
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace hiervo
