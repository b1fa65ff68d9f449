#include "boardroom/bytes.hpp"

namespace boardroom {

std::string ToHex(ByteSpan bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0F]);
  }
  return out;
}

namespace {

int HexValue(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Bytes FromHex(std::string_view hex) {
  if (hex.size() % 2 != 0) {
    throw DecodeError("hex string has odd length");
  }
  Bytes out(hex.size() / 2);
  for (size_t i = 0; i < out.size(); ++i) {
    const int hi = HexValue(hex[2 * i]);
    const int lo = HexValue(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) {
      throw DecodeError("invalid hex digit");
    }
    out[i] = static_cast<uint8_t>((hi << 4) | lo);
  }
  return out;
}

ByteWriter& ByteWriter::U8(uint8_t v) {
  out_.push_back(v);
  return *this;
}

ByteWriter& ByteWriter::U32(uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out_.push_back(static_cast<uint8_t>((v >> shift) & 0xFF));
  }
  return *this;
}

ByteWriter& ByteWriter::U64(uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out_.push_back(static_cast<uint8_t>((v >> shift) & 0xFF));
  }
  return *this;
}

ByteWriter& ByteWriter::Raw(ByteSpan bytes) {
  out_.insert(out_.end(), bytes.begin(), bytes.end());
  return *this;
}

ByteWriter& ByteWriter::Field(ByteSpan bytes) {
  if (bytes.size() > UINT32_MAX) {
    throw std::invalid_argument("field exceeds u32 length");
  }
  U32(static_cast<uint32_t>(bytes.size()));
  return Raw(bytes);
}

uint8_t ByteReader::U8() { return Raw(1)[0]; }

uint32_t ByteReader::U32() {
  const ByteSpan b = Raw(4);
  return (uint32_t{b[0]} << 24) | (uint32_t{b[1]} << 16) | (uint32_t{b[2]} << 8) | uint32_t{b[3]};
}

uint64_t ByteReader::U64() {
  const ByteSpan b = Raw(8);
  uint64_t v = 0;
  for (uint8_t byte : b) {
    v = (v << 8) | byte;
  }
  return v;
}

ByteSpan ByteReader::Raw(size_t n) {
  if (n > Remaining()) {
    throw DecodeError("truncated input");
  }
  ByteSpan out = in_.subspan(offset_, n);
  offset_ += n;
  return out;
}

Bytes ByteReader::Field(size_t max_len) {
  const uint32_t len = U32();
  if (len > max_len) {
    throw DecodeError("field exceeds maximum length");
  }
  const ByteSpan b = Raw(len);
  return Bytes(b.begin(), b.end());
}

std::string ByteReader::Str(size_t max_len) {
  const Bytes b = Field(max_len);
  return std::string(b.begin(), b.end());
}

void ByteReader::ExpectDone() const {
  if (!Done()) {
    throw DecodeError("trailing bytes after message");
  }
}

}  // namespace boardroom
