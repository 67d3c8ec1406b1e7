// Copyright 2026 The splin Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SPLIN_SPLB_HPP
#define SPLIN_SPLB_HPP

// SPLB binary container, little-endian throughout:
//   "SPLB" | u16 version (=1) | u16 reserved (=0) | u32 section_count
//   per section: char tag[4] | u64 rows | u64 cols | payload
// Numeric sections carry rows*cols f64 in row-major order. The META section
// carries `rows` raw bytes (UTF-8 JSON) and has cols = 0.

#include <splin/core.hpp>
#include <splin/sae.hpp>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace splin {

inline constexpr std::uint16_t kSplbVersion = 1;

struct SplbSection {
  std::string tag;    // exactly four ASCII characters
  Matrix data;        // numeric sections
  std::string bytes;  // META only
};

struct SplbFile {
  std::vector<SplbSection> sections;

  const SplbSection* find(const std::string& tag) const {
    for (const auto& s : sections)
      if (s.tag == tag) return &s;
    return nullptr;
  }
  const Matrix& matrix(const std::string& tag) const {
    const SplbSection* s = find(tag);
    if (!s) throw IoError("SPLB section '" + tag + "' is missing");
    return s->data;
  }
};

namespace detail {

template <class T>
void put_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  U u = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xFFu));
}

class Reader {
 public:
  explicit Reader(const std::string& buf) : buf_(buf) {}

  template <class T>
  T get_le() {
    need(sizeof(T));
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      u |= static_cast<U>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return std::bit_cast<T>(u);
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw IoError("SPLB data is truncated");
  }
  const std::string& buf_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_splb(const SplbFile& file) {
  std::string out = "SPLB";
  detail::put_le<std::uint16_t>(out, kSplbVersion);
  detail::put_le<std::uint16_t>(out, 0);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(file.sections.size()));
  for (const SplbSection& s : file.sections) {
    require(s.tag.size() == 4, "SPLB section tags must be four characters");
    out += s.tag;
    if (s.tag == "META") {
      detail::put_le<std::uint64_t>(out, s.bytes.size());
      detail::put_le<std::uint64_t>(out, 0);
      out += s.bytes;
      continue;
    }
    detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(s.data.rows()));
    detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(s.data.cols()));
    for (Index r = 0; r < s.data.rows(); ++r)
      for (Index c = 0; c < s.data.cols(); ++c) detail::put_le<double>(out, s.data(r, c));
  }
  return out;
}

inline SplbFile decode_splb(const std::string& buf) {
  detail::Reader in(buf);
  if (in.bytes(4) != "SPLB") throw IoError("not an SPLB file (bad magic)");
  const auto version = in.get_le<std::uint16_t>();
  if (version != kSplbVersion) throw IoError("unsupported SPLB version " + std::to_string(version));
  in.get_le<std::uint16_t>();
  const auto count = in.get_le<std::uint32_t>();
  SplbFile file;
  for (std::uint32_t i = 0; i < count; ++i) {
    SplbSection s;
    s.tag = in.bytes(4);
    const auto rows = in.get_le<std::uint64_t>();
    const auto cols = in.get_le<std::uint64_t>();
    if (s.tag == "META") {
      s.bytes = in.bytes(static_cast<std::size_t>(rows));
    } else {
      if (cols != 0 && rows > (std::uint64_t(1) << 40) / cols) throw IoError("SPLB section is implausibly large");
      s.data.resize(static_cast<Index>(rows), static_cast<Index>(cols));
      for (Index r = 0; r < s.data.rows(); ++r)
        for (Index c = 0; c < s.data.cols(); ++c) s.data(r, c) = in.get_le<double>();
    }
    file.sections.push_back(std::move(s));
  }
  if (!in.done()) throw IoError("trailing bytes after the last SPLB section");
  return file;
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_splb(const std::string& path, const SplbFile& file) { write_file(path, encode_splb(file)); }
inline SplbFile read_splb(const std::string& path) { return decode_splb(read_file(path)); }

inline SplbFile dictionary_splb(const Dictionary& dict) { return {{{"DICT", dict.atoms(), {}}}}; }
inline Dictionary dictionary_from_splb(const SplbFile& f) { return Dictionary::normalized(f.matrix("DICT")); }

/// OBSV holds samples as columns; META holds the provenance JSON.
inline SplbFile observations_splb(const ObservationBatch& batch, const std::string& meta_json) {
  return {{{"OBSV", batch.samples(), {}}, {"META", {}, meta_json}}};
}

inline SplbFile sae_splb(const SaeParams& p) {
  return {{{"ENCW", p.enc_weight, {}}, {"ENCB", Matrix(p.enc_bias), {}}, {"DECD", p.decoder, {}}}};
}

inline SaeParams sae_from_splb(const SplbFile& f) {
  SaeParams p;
  p.enc_weight = f.matrix("ENCW");
  const Matrix& b = f.matrix("ENCB");
  if (b.cols() != 1) throw IoError("ENCB must be a column");
  p.enc_bias = b.col(0);
  p.decoder = f.matrix("DECD");
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("inconsistent SAE sections: ") + e.what());
  }
  return p;
}

}  // namespace splin

#endif  // SPLIN_SPLB_HPP
