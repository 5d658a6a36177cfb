#pragma once

// Self-delimiting binary encoding for job payloads.
//
// Every encoded value starts with a one-byte tag:
//
//   tag   kind       body
//   0x01  unsigned   8 bytes, little-endian
//   0x02  signed     8 bytes, little-endian two's complement
//   0x03  float      8 bytes, IEEE-754 binary64 bit pattern, little-endian
//   0x04  bytes      u32 length (LE), then the raw bytes
//   0x05  sequence   u32 count (LE), then `count` encoded values of one kind
//   0x06  record     u32 count (LE), then `count` fields sorted by name:
//                    u32 name length (LE), name bytes, encoded value
//
// Every value has exactly one encoding. Decoding rejects unknown tags,
// mixed-kind sequences, unsorted or duplicate record fields and trailing
// bytes. See docs/wire-format.md for worked byte examples.

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mpq/error.hpp"

namespace mpq {

using Payload = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

enum class ValueKind : std::uint8_t {
  unsigned_integer = 0x01,
  signed_integer = 0x02,
  floating = 0x03,
  bytes = 0x04,
  sequence = 0x05,
  record = 0x06,
};

class Value {
 public:
  using Bytes = std::string;
  using Sequence = std::vector<Value>;
  using Record = std::map<std::string, Value, std::less<>>;

  Value() : data_(std::uint64_t{0}) {}
  Value(std::uint64_t v) : data_(v) {}
  Value(std::int64_t v) : data_(v) {}
  Value(double v) : data_(v) {}
  Value(Bytes v) : data_(std::move(v)) {}
  Value(const char* v) : data_(Bytes(v)) {}
  Value(Sequence v) : data_(std::move(v)) {}
  Value(Record v) : data_(std::move(v)) {}

  ValueKind kind() const noexcept;

  template <class T>
  bool holds() const noexcept { return std::holds_alternative<T>(data_); }

  // Typed accessors throw Errc::malformed_payload on a kind mismatch.
  std::uint64_t as_unsigned() const;
  std::int64_t as_signed() const;
  double as_double() const;
  const Bytes& as_bytes() const;
  const Sequence& as_sequence() const;
  const Record& as_record() const;

  /// Record field lookup; throws Errc::malformed_payload when absent.
  const Value& at(std::string_view field) const;

  // Structural equality. Floats compare by bit pattern so NaNs with equal
  // payloads are equal and +0.0 differs from -0.0.
  friend bool operator==(const Value& a, const Value& b);

 private:
  std::variant<std::uint64_t, std::int64_t, double, Bytes, Sequence, Record>
      data_;
};

Payload encode(const Value& v);
void encode_to(const Value& v, Payload& out);

/// Decodes exactly one value spanning all of `bytes`.
Value decode(ByteView bytes);

/// Stream decoder over concatenated encodings; each call to next() consumes
/// exactly one value's bytes.
class Decoder {
 public:
  explicit Decoder(ByteView bytes) : bytes_(bytes) {}

  Value next();
  bool done() const noexcept { return pos_ == bytes_.size(); }
  std::size_t position() const noexcept { return pos_; }

 private:
  std::uint8_t take_byte();
  std::uint32_t take_u32();
  std::uint64_t take_u64();
  ByteView take(std::size_t n);
  Value next_at_depth(int depth);

  ByteView bytes_;
  std::size_t pos_ = 0;
};

// Conversions between C++ types and Value, used by pack()/unpack().

template <class T>
struct ValueTraits;

template <class T>
concept Unsigned = std::unsigned_integral<T> && !std::same_as<T, bool>;

template <class T>
concept Signed = std::signed_integral<T>;

template <Unsigned T>
struct ValueTraits<T> {
  static Value to_value(T v) { return Value(static_cast<std::uint64_t>(v)); }
  static T from_value(const Value& v) {
    const auto raw = v.as_unsigned();
    if (raw > std::numeric_limits<T>::max())
      throw Error(Errc::malformed_payload, "unsigned value out of range");
    return static_cast<T>(raw);
  }
};

template <Signed T>
struct ValueTraits<T> {
  static Value to_value(T v) { return Value(static_cast<std::int64_t>(v)); }
  static T from_value(const Value& v) {
    const auto raw = v.as_signed();
    if (raw < std::numeric_limits<T>::min() ||
        raw > std::numeric_limits<T>::max())
      throw Error(Errc::malformed_payload, "signed value out of range");
    return static_cast<T>(raw);
  }
};

template <>
struct ValueTraits<double> {
  static Value to_value(double v) { return Value(v); }
  static double from_value(const Value& v) { return v.as_double(); }
};

template <>
struct ValueTraits<std::string> {
  static Value to_value(const std::string& v) { return Value(v); }
  static std::string from_value(const Value& v) { return v.as_bytes(); }
};

template <class T>
struct ValueTraits<std::vector<T>> {
  static Value to_value(const std::vector<T>& v) {
    Value::Sequence seq;
    seq.reserve(v.size());
    for (const auto& item : v) seq.push_back(ValueTraits<T>::to_value(item));
    return Value(std::move(seq));
  }
  static std::vector<T> from_value(const Value& v) {
    const auto& seq = v.as_sequence();
    std::vector<T> out;
    out.reserve(seq.size());
    for (const auto& item : seq) out.push_back(ValueTraits<T>::from_value(item));
    return out;
  }
};

template <class T>
Value to_value(const T& v) {
  return ValueTraits<T>::to_value(v);
}

template <class T>
T from_value(const Value& v) {
  return ValueTraits<T>::from_value(v);
}

template <class T>
Payload pack(const T& v) {
  return encode(to_value(v));
}

template <class T>
T unpack(ByteView bytes) {
  return from_value<T>(decode(bytes));
}

}  // namespace mpq
