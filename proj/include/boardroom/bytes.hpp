#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace boardroom {

using Bytes = std::vector<uint8_t>;
using ByteSpan = std::span<const uint8_t>;

// Thrown for any malformed wire or file input.
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string ToHex(ByteSpan bytes);
Bytes FromHex(std::string_view hex);

inline ByteSpan AsBytes(std::string_view s) {
  return {reinterpret_cast<const uint8_t*>(s.data()), s.size()};
}

// Big-endian, length-prefixed builder used for every canonical encoding.
class ByteWriter {
 public:
  ByteWriter& U8(uint8_t v);
  ByteWriter& U32(uint32_t v);
  ByteWriter& U64(uint64_t v);
  ByteWriter& Raw(ByteSpan bytes);
  // u32 length followed by the bytes.
  ByteWriter& Field(ByteSpan bytes);
  ByteWriter& Str(std::string_view s) { return Field(AsBytes(s)); }

  const Bytes& bytes() const& { return out_; }
  Bytes&& Take() && { return std::move(out_); }

 private:
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(ByteSpan in) : in_(in) {}

  uint8_t U8();
  uint32_t U32();
  uint64_t U64();
  ByteSpan Raw(size_t n);
  Bytes Field(size_t max_len = kDefaultMaxField);
  std::string Str(size_t max_len = kDefaultMaxField);

  bool Done() const { return offset_ == in_.size(); }
  size_t Remaining() const { return in_.size() - offset_; }
  // Throws unless all input was consumed.
  void ExpectDone() const;

  static constexpr size_t kDefaultMaxField = 1u << 24;

 private:
  ByteSpan in_;
  size_t offset_ = 0;
};

}  // namespace boardroom
