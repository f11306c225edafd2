#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "noisyslp/types.hpp"

namespace nslp {

/// Malformed PGM data; `offset` is the byte where parsing failed.
class PgmError : public std::runtime_error {
 public:
  PgmError(const std::string& what, std::size_t off)
      : std::runtime_error(what + " at byte offset " + std::to_string(off)), offset(off) {}
  std::size_t offset;
};

enum class PgmFormat { Plain /* P2 */, Raw /* P5 */ };

/// Reads P2/P5 with maxval <= 65535; entries are scaled to [0, 1].
Matrix read_pgm(const std::string& path);
Matrix parse_pgm(const std::string& bytes);

/// Writes with maxval 255, rounding half up. Entries are clipped to [0, 1].
void write_pgm(const Matrix& img, const std::string& path, PgmFormat fmt = PgmFormat::Raw);
std::string encode_pgm(const Matrix& img, PgmFormat fmt = PgmFormat::Raw);

}  // namespace nslp
