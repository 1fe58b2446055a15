#pragma once

#include <cstdint>

#include "pqz/common.hpp"

namespace pqz::lossless {

/// Final-stage entropy backends. The chosen backend travels as one bit in the
/// container header, never inside the payload.
enum class Backend : std::uint8_t { Deflate = 0, Bzip2 = 1 };

struct Choice {
  Backend backend = Backend::Deflate;
  Bytes payload;
};

// Standard gzip stream, deflate level 9.
Bytes deflate_compress(ByteSpan data);
Bytes deflate_decompress(ByteSpan stream);

// Standard bzip2 stream, 900 kB block.
Bytes bzip2_compress(ByteSpan data);
Bytes bzip2_decompress(ByteSpan stream);

/// Runs both backends, keeps the smaller output (tie goes to Deflate).
Choice compress_dual(ByteSpan data);

/// Byte-exact inverse of the flagged backend; DecodeError on corrupt input.
Bytes decompress(const Choice& choice);

}  // namespace pqz::lossless
