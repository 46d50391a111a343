#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wildscav {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

// Append-only little-endian encoder.
class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_bytes(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }
  void put_zeros(std::size_t n) { buf_.insert(buf_.end(), n, 0); }

  // Reserves a u32 length slot; finish_record() fills it with the bytes written since.
  std::size_t begin_record() {
    const std::size_t at = buf_.size();
    put<std::uint32_t>(0);
    return at;
  }
  void finish_record(std::size_t at) {
    const auto len = static_cast<std::uint32_t>(buf_.size() - at - 4);
    std::memcpy(buf_.data() + at, &len, 4);
  }

  std::vector<std::uint8_t>& bytes() { return buf_; }
  std::size_t size() const { return buf_.size(); }

 private:
  std::vector<std::uint8_t> buf_;
};

// Bounds-checked little-endian decoder; throws Error on truncation.
template <typename Error>
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  template <typename T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  // Reads a u32-length-prefixed record and returns a reader over its body.
  ByteReader record() {
    const auto len = get<std::uint32_t>();
    return ByteReader(take(len));
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw Error("truncated data at byte " + std::to_string(pos_));
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace wildscav
