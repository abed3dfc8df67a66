#include "g2t/image_io.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace g2t {

namespace {

std::atomic<long> g_io_ops{0};

[[noreturn]] void fail(const std::string& path, std::streamoff offset,
                       const std::string& what) {
  std::ostringstream os;
  os << path << ": " << what << " (byte offset " << offset << ")";
  throw DataError(os.str());
}

// One whitespace-delimited token; '#' starts a comment running to end of line.
std::string next_token(std::istream& in, const std::string& path) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) fail(path, in.tellg(), "unexpected end of header");
  return tok;
}

int parse_int(const std::string& tok, std::istream& in,
              const std::string& path, const char* what) {
  try {
    size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    fail(path, in.tellg(), std::string("bad ") + what + " '" + tok + "'");
  }
}

constexpr bool kHostLittle = std::endian::native == std::endian::little;

}  // namespace

long io_op_count() { return g_io_ops.load(); }
void io_op_reset() { g_io_ops.store(0); }
void io_op_note() { ++g_io_ops; }

void write_ppm(const std::string& path, const Image& rgb) {
  ++g_io_ops;
  if (rgb.channels != 3) throw DataError("write_ppm expects a 3-channel image");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError(path + ": cannot open for writing");
  f << "P6\n" << rgb.width << " " << rgb.height << "\n255\n";
  std::vector<unsigned char> row(static_cast<size_t>(rgb.width) * 3);
  for (int y = 0; y < rgb.height; ++y) {
    for (int x = 0; x < rgb.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(rgb.at(y, x, c), 0.0, 1.0) * 255.0;
        // nearbyint under the default rounding mode is round half-to-even
        row[static_cast<size_t>(x) * 3 + c] =
            static_cast<unsigned char>(std::nearbyint(v));
      }
    f.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(row.size()));
  }
  if (!f) throw DataError(path + ": write failed");
}

Image read_ppm(const std::string& path) {
  ++g_io_ops;
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError(path + ": cannot open");
  const std::string magic = next_token(f, path);
  if (magic != "P6") fail(path, 0, "expected magic 'P6', got '" + magic + "'");
  const int w = parse_int(next_token(f, path), f, path, "width");
  const int h = parse_int(next_token(f, path), f, path, "height");
  const int maxval = parse_int(next_token(f, path), f, path, "maxval");
  if (w < 1 || h < 1) fail(path, f.tellg(), "non-positive dimensions");
  if (maxval != 255) fail(path, f.tellg(), "unsupported maxval (only 255)");
  // exactly one whitespace byte separates the header from the payload
  Image img(h, w, 3);
  std::vector<unsigned char> row(static_cast<size_t>(w) * 3);
  for (int y = 0; y < h; ++y) {
    f.read(reinterpret_cast<char*>(row.data()),
           static_cast<std::streamsize>(row.size()));
    if (f.gcount() != static_cast<std::streamsize>(row.size()))
      fail(path, f.tellg() >= 0 ? std::streamoff(f.tellg()) : std::streamoff(-1),
           "truncated pixel payload");
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(y, x, c) = row[static_cast<size_t>(x) * 3 + c] / 255.0;
  }
  return img;
}

void write_pfm(const std::string& path, const Image& map) {
  ++g_io_ops;
  if (map.channels != 1) throw DataError("write_pfm expects a 1-channel image");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError(path + ": cannot open for writing");
  f << "Pf\n" << map.width << " " << map.height << "\n-1.0\n";
  std::vector<float> row(static_cast<size_t>(map.width));
  for (int y = map.height - 1; y >= 0; --y) {  // bottom row first
    for (int x = 0; x < map.width; ++x)
      row[x] = static_cast<float>(map.at(y, x));
    if constexpr (!kHostLittle)
      for (float& v : row) {
        uint32_t u;
        std::memcpy(&u, &v, 4);
        u = __builtin_bswap32(u);
        std::memcpy(&v, &u, 4);
      }
    f.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(row.size() * 4));
  }
  if (!f) throw DataError(path + ": write failed");
}

Image read_pfm(const std::string& path) {
  ++g_io_ops;
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError(path + ": cannot open");
  const std::string magic = next_token(f, path);
  if (magic == "PF") fail(path, 0, "color PFM not supported (expected 'Pf')");
  if (magic != "Pf") fail(path, 0, "expected magic 'Pf', got '" + magic + "'");
  const int w = parse_int(next_token(f, path), f, path, "width");
  const int h = parse_int(next_token(f, path), f, path, "height");
  const std::string scale_tok = next_token(f, path);
  double scale = 0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    fail(path, f.tellg(), "bad scale '" + scale_tok + "'");
  }
  if (w < 1 || h < 1) fail(path, f.tellg(), "non-positive dimensions");
  if (scale == 0) fail(path, f.tellg(), "scale must be nonzero");
  const bool file_little = scale < 0;

  Image img(h, w, 1);
  std::vector<float> row(static_cast<size_t>(w));
  for (int y = h - 1; y >= 0; --y) {
    f.read(reinterpret_cast<char*>(row.data()),
           static_cast<std::streamsize>(row.size() * 4));
    if (f.gcount() != static_cast<std::streamsize>(row.size() * 4))
      fail(path, f.tellg() >= 0 ? std::streamoff(f.tellg()) : std::streamoff(-1),
           "truncated float payload");
    if (file_little != kHostLittle)
      for (float& v : row) {
        uint32_t u;
        std::memcpy(&u, &v, 4);
        u = __builtin_bswap32(u);
        std::memcpy(&v, &u, 4);
      }
    for (int x = 0; x < w; ++x) img.at(y, x) = row[x];
  }
  return img;
}

}  // namespace g2t
