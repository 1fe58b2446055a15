#include "pqz/lossless.hpp"

#include <limits>

#include <zlib.h>

#include "bzlib_compat.h"

namespace pqz::lossless {

namespace {

constexpr int kDeflateLevel = 9;
constexpr int kGzipWindowBits = 15 + 16;  // gzip framing
constexpr int kBzBlock100k = 9;           // 900 kB block
constexpr int kBzWorkFactor = 30;

constexpr std::size_t kMaxDecompressed = std::size_t{1} << 30;

}  // namespace

Bytes deflate_compress(ByteSpan data) {
  z_stream zs{};
  if (deflateInit2(&zs, kDeflateLevel, Z_DEFLATED, kGzipWindowBits, 9,
                   Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error("deflateInit2 failed");
  }
  Bytes out(deflateBound(&zs, static_cast<uLong>(data.size())) + 32);
  zs.next_in = const_cast<Bytef*>(data.data());
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  if (rc != Z_STREAM_END) {
    deflateEnd(&zs);
    throw Error("deflate failed");
  }
  out.resize(zs.total_out);
  deflateEnd(&zs);
  return out;
}

Bytes deflate_decompress(ByteSpan stream) {
  z_stream zs{};
  if (inflateInit2(&zs, kGzipWindowBits) != Z_OK) throw Error("inflateInit2 failed");
  Bytes out;
  out.resize(stream.size() < 64 ? 256 : stream.size() * 4);
  zs.next_in = const_cast<Bytef*>(stream.data());
  zs.avail_in = static_cast<uInt>(stream.size());
  std::size_t produced = 0;
  for (;;) {
    zs.next_out = out.data() + produced;
    zs.avail_out = static_cast<uInt>(out.size() - produced);
    const int rc = inflate(&zs, Z_NO_FLUSH);
    produced = zs.total_out;
    if (rc == Z_STREAM_END) break;
    if (rc == Z_OK || rc == Z_BUF_ERROR) {
      if (zs.avail_in == 0 && rc == Z_BUF_ERROR && produced < out.size()) {
        inflateEnd(&zs);
        throw DecodeError("truncated deflate stream");
      }
      if (out.size() >= kMaxDecompressed) {
        inflateEnd(&zs);
        throw DecodeError("deflate stream expands beyond limit");
      }
      out.resize(out.size() * 2);
      continue;
    }
    inflateEnd(&zs);
    throw DecodeError("corrupt deflate stream");
  }
  if (zs.avail_in != 0) {
    inflateEnd(&zs);
    throw DecodeError("trailing bytes after deflate stream");
  }
  inflateEnd(&zs);
  out.resize(produced);
  return out;
}

Bytes bzip2_compress(ByteSpan data) {
  if (data.size() > std::numeric_limits<unsigned>::max() / 2) {
    throw InvalidArgument("bzip2 input too large");
  }
  static char dummy = 0;  // libbz2 rejects a null source even for zero length
  char* src = data.empty() ? &dummy
                           : const_cast<char*>(reinterpret_cast<const char*>(data.data()));
  Bytes out(data.size() + data.size() / 100 + 600);
  auto out_len = static_cast<unsigned>(out.size());
  const int rc = BZ2_bzBuffToBuffCompress(reinterpret_cast<char*>(out.data()), &out_len, src,
                                          static_cast<unsigned>(data.size()), kBzBlock100k,
                                          0, kBzWorkFactor);
  if (rc != BZ_OK) throw Error("bzip2 compress failed");
  out.resize(out_len);
  return out;
}

Bytes bzip2_decompress(ByteSpan stream) {
  std::size_t cap = stream.size() < 64 ? 1024 : stream.size() * 8;
  for (;;) {
    Bytes out(cap);
    auto out_len = static_cast<unsigned>(out.size());
    const int rc = BZ2_bzBuffToBuffDecompress(
        reinterpret_cast<char*>(out.data()), &out_len,
        const_cast<char*>(reinterpret_cast<const char*>(stream.data())),
        static_cast<unsigned>(stream.size()), 0, 0);
    if (rc == BZ_OK) {
      out.resize(out_len);
      return out;
    }
    if (rc == BZ_OUTBUFF_FULL) {
      if (cap >= kMaxDecompressed) throw DecodeError("bzip2 stream expands beyond limit");
      cap *= 4;
      continue;
    }
    throw DecodeError("corrupt bzip2 stream");
  }
}

Choice compress_dual(ByteSpan data) {
  Bytes lz = deflate_compress(data);
  Bytes bw = bzip2_compress(data);
  if (bw.size() < lz.size()) return {Backend::Bzip2, std::move(bw)};
  return {Backend::Deflate, std::move(lz)};
}

Bytes decompress(const Choice& choice) {
  switch (choice.backend) {
    case Backend::Deflate:
      return deflate_decompress(choice.payload);
    case Backend::Bzip2:
      return bzip2_decompress(choice.payload);
  }
  throw DecodeError("unknown lossless backend flag");
}

}  // namespace pqz::lossless
