#include "mpq/codec.hpp"

#include <bit>
#include <cstring>
#include <limits>

namespace mpq {

namespace {

// Nesting deeper than this is rejected so hostile input cannot exhaust the
// decoder's stack.
constexpr int kMaxDepth = 256;

void put_u32(Payload& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(Payload& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t checked_length(std::size_t n, const char* what) {
  if (n > std::numeric_limits<std::uint32_t>::max())
    throw Error(Errc::encoding_overflow,
                std::string(what) + " length exceeds the 32-bit count");
  return static_cast<std::uint32_t>(n);
}

void put_bytes(Payload& out, std::string_view s, const char* what) {
  put_u32(out, checked_length(s.size(), what));
  out.insert(out.end(), s.begin(), s.end());
}

[[noreturn]] void kind_mismatch(const char* expected) {
  throw Error(Errc::malformed_payload, std::string("expected ") + expected);
}

}  // namespace

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::encoding_overflow: return "encoding overflow";
    case Errc::truncated: return "truncated input";
    case Errc::malformed_payload: return "malformed payload";
    case Errc::protocol: return "protocol error";
    case Errc::transport: return "transport error";
    case Errc::startup: return "startup error";
    case Errc::configuration: return "configuration error";
    case Errc::lifecycle: return "lifecycle error";
    case Errc::application: return "application error";
    case Errc::usage: return "usage error";
  }
  return "unknown error";
}

ValueKind Value::kind() const noexcept {
  switch (data_.index()) {
    case 0: return ValueKind::unsigned_integer;
    case 1: return ValueKind::signed_integer;
    case 2: return ValueKind::floating;
    case 3: return ValueKind::bytes;
    case 4: return ValueKind::sequence;
    default: return ValueKind::record;
  }
}

std::uint64_t Value::as_unsigned() const {
  if (const auto* p = std::get_if<std::uint64_t>(&data_)) return *p;
  kind_mismatch("unsigned integer");
}

std::int64_t Value::as_signed() const {
  if (const auto* p = std::get_if<std::int64_t>(&data_)) return *p;
  kind_mismatch("signed integer");
}

double Value::as_double() const {
  if (const auto* p = std::get_if<double>(&data_)) return *p;
  kind_mismatch("float");
}

const Value::Bytes& Value::as_bytes() const {
  if (const auto* p = std::get_if<Bytes>(&data_)) return *p;
  kind_mismatch("byte string");
}

const Value::Sequence& Value::as_sequence() const {
  if (const auto* p = std::get_if<Sequence>(&data_)) return *p;
  kind_mismatch("sequence");
}

const Value::Record& Value::as_record() const {
  if (const auto* p = std::get_if<Record>(&data_)) return *p;
  kind_mismatch("record");
}

const Value& Value::at(std::string_view field) const {
  const auto& rec = as_record();
  auto it = rec.find(field);
  if (it == rec.end())
    throw Error(Errc::malformed_payload,
                "record has no field '" + std::string(field) + "'");
  return it->second;
}

bool operator==(const Value& a, const Value& b) {
  if (a.data_.index() != b.data_.index()) return false;
  if (const auto* x = std::get_if<double>(&a.data_))
    return std::bit_cast<std::uint64_t>(*x) ==
           std::bit_cast<std::uint64_t>(std::get<double>(b.data_));
  return a.data_ == b.data_;
}

void encode_to(const Value& v, Payload& out) {
  out.push_back(static_cast<std::uint8_t>(v.kind()));
  switch (v.kind()) {
    case ValueKind::unsigned_integer:
      put_u64(out, v.as_unsigned());
      break;
    case ValueKind::signed_integer:
      put_u64(out, static_cast<std::uint64_t>(v.as_signed()));
      break;
    case ValueKind::floating:
      put_u64(out, std::bit_cast<std::uint64_t>(v.as_double()));
      break;
    case ValueKind::bytes:
      put_bytes(out, v.as_bytes(), "byte string");
      break;
    case ValueKind::sequence: {
      const auto& seq = v.as_sequence();
      put_u32(out, checked_length(seq.size(), "sequence"));
      for (const auto& item : seq) {
        if (item.kind() != seq.front().kind())
          throw Error(Errc::malformed_payload, "sequence elements differ in kind");
        encode_to(item, out);
      }
      break;
    }
    case ValueKind::record: {
      const auto& rec = v.as_record();
      put_u32(out, checked_length(rec.size(), "record"));
      for (const auto& [name, field] : rec) {
        put_bytes(out, name, "field name");
        encode_to(field, out);
      }
      break;
    }
  }
}

Payload encode(const Value& v) {
  Payload out;
  encode_to(v, out);
  return out;
}

Value decode(ByteView bytes) {
  Decoder dec(bytes);
  Value v = dec.next();
  if (!dec.done())
    throw Error(Errc::malformed_payload,
                "trailing bytes after value at offset " +
                    std::to_string(dec.position()));
  return v;
}

ByteView Decoder::take(std::size_t n) {
  if (bytes_.size() - pos_ < n)
    throw Error(Errc::truncated, "value truncated at offset " + std::to_string(pos_));
  auto view = bytes_.subspan(pos_, n);
  pos_ += n;
  return view;
}

std::uint8_t Decoder::take_byte() { return take(1)[0]; }

std::uint32_t Decoder::take_u32() {
  auto b = take(4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t Decoder::take_u64() {
  auto b = take(8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

Value Decoder::next() { return next_at_depth(0); }

Value Decoder::next_at_depth(int depth) {
  if (depth > kMaxDepth)
    throw Error(Errc::malformed_payload, "value nesting too deep");
  const auto tag_offset = pos_;
  const auto tag = take_byte();
  switch (static_cast<ValueKind>(tag)) {
    case ValueKind::unsigned_integer:
      return Value(take_u64());
    case ValueKind::signed_integer:
      return Value(static_cast<std::int64_t>(take_u64()));
    case ValueKind::floating:
      return Value(std::bit_cast<double>(take_u64()));
    case ValueKind::bytes: {
      auto raw = take(take_u32());
      return Value(Value::Bytes(raw.begin(), raw.end()));
    }
    case ValueKind::sequence: {
      const auto count = take_u32();
      Value::Sequence seq;
      // Each element occupies at least 9 bytes except nested empty
      // containers (5); cap the reservation by what the input can hold.
      seq.reserve(std::min<std::size_t>(count, (bytes_.size() - pos_) / 5));
      for (std::uint32_t i = 0; i < count; ++i) {
        seq.push_back(next_at_depth(depth + 1));
        if (seq.back().kind() != seq.front().kind())
          throw Error(Errc::malformed_payload, "sequence elements differ in kind");
      }
      return Value(std::move(seq));
    }
    case ValueKind::record: {
      const auto count = take_u32();
      Value::Record rec;
      const std::string* previous = nullptr;
      for (std::uint32_t i = 0; i < count; ++i) {
        auto raw = take(take_u32());
        std::string name(raw.begin(), raw.end());
        if (previous && !(*previous < name))
          throw Error(Errc::malformed_payload,
                      "record fields not strictly sorted at '" + name + "'");
        auto [it, inserted] = rec.emplace(std::move(name), next_at_depth(depth + 1));
        previous = &it->first;
      }
      return Value(std::move(rec));
    }
  }
  throw Error(Errc::malformed_payload,
              "unknown tag 0x" + [&] {
                static constexpr char hex[] = "0123456789abcdef";
                return std::string{hex[tag >> 4], hex[tag & 0xf]};
              }() + " at offset " + std::to_string(tag_offset));
}

}  // namespace mpq
