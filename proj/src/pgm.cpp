#include "noisyslp/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace nslp {

namespace {

class Reader {
 public:
  explicit Reader(const std::string& b) : b_(b) {}

  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      const unsigned char c = static_cast<unsigned char>(b_[pos_]);
      if (c == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long read_uint(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    if (pos_ >= b_.size() || !std::isdigit(static_cast<unsigned char>(b_[pos_]))) {
      throw PgmError(std::string("expected ") + what, start);
    }
    long v = 0;
    while (pos_ < b_.size() && std::isdigit(static_cast<unsigned char>(b_[pos_]))) {
      v = v * 10 + (b_[pos_] - '0');
      if (v > 1000000000L) throw PgmError(std::string(what) + " is too large", start);
      ++pos_;
    }
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t k) { pos_ += k; }
  std::size_t size() const { return b_.size(); }
  unsigned char at(std::size_t i) const { return static_cast<unsigned char>(b_[i]); }

 private:
  const std::string& b_;
  std::size_t pos_ = 0;
};

}  // namespace

Matrix parse_pgm(const std::string& bytes) {
  Reader r(bytes);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
    throw PgmError("missing P2/P5 magic number", 0);
  }
  const bool raw = bytes[1] == '5';
  r.advance(2);
  if (r.pos() < r.size() && !std::isspace(r.at(r.pos())) && r.at(r.pos()) != '#') {
    throw PgmError("expected whitespace after magic number", r.pos());
  }
  r.skip_space_and_comments();
  const std::size_t w_off = r.pos();
  const long width = r.read_uint("width");
  const long height = r.read_uint("height");
  if (width <= 0 || height <= 0) throw PgmError("image dimensions must be positive", w_off);
  r.skip_space_and_comments();
  const std::size_t mv_off = r.pos();
  const long maxval = r.read_uint("maxval");
  if (maxval <= 0 || maxval > 65535) throw PgmError("maxval must lie in [1, 65535]", mv_off);

  Matrix img(height, width);
  const double scale = 1.0 / static_cast<double>(maxval);
  if (raw) {
    if (r.pos() >= r.size() || !std::isspace(r.at(r.pos()))) {
      throw PgmError("expected a single whitespace byte before raster", r.pos());
    }
    r.advance(1);
    const std::size_t bpp = maxval < 256 ? 1 : 2;
    const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * bpp;
    if (r.size() - r.pos() < need) throw PgmError("raster is truncated", r.size());
    std::size_t p = r.pos();
    for (long i = 0; i < height; ++i) {
      for (long j = 0; j < width; ++j) {
        long v = r.at(p++);
        if (bpp == 2) v = (v << 8) | r.at(p++);
        if (v > maxval) throw PgmError("sample exceeds maxval", p - bpp);
        img(i, j) = static_cast<double>(v) * scale;
      }
    }
  } else {
    for (long i = 0; i < height; ++i) {
      for (long j = 0; j < width; ++j) {
        r.skip_space_and_comments();
        const std::size_t off = r.pos();
        const long v = r.read_uint("sample");
        if (v > maxval) throw PgmError("sample exceeds maxval", off);
        img(i, j) = static_cast<double>(v) * scale;
      }
    }
  }
  return img;
}

Matrix read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_pgm(ss.str());
}

std::string encode_pgm(const Matrix& img, PgmFormat fmt) {
  require(img.size() > 0, "cannot encode an empty image");
  std::ostringstream out;
  out << (fmt == PgmFormat::Raw ? "P5" : "P2") << '\n' << img.cols() << ' ' << img.rows() << "\n255\n";
  for (Index i = 0; i < img.rows(); ++i) {
    for (Index j = 0; j < img.cols(); ++j) {
      const double v = std::clamp(img(i, j), 0.0, 1.0);
      const int q = static_cast<int>(std::floor(v * 255.0 + 0.5));
      if (fmt == PgmFormat::Raw) {
        out.put(static_cast<char>(static_cast<unsigned char>(q)));
      } else {
        out << q << (j + 1 == img.cols() ? '\n' : ' ');
      }
    }
  }
  return out.str();
}

void write_pgm(const Matrix& img, const std::string& path, PgmFormat fmt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const std::string s = encode_pgm(img, fmt);
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

}  // namespace nslp
