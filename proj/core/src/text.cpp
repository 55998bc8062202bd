#include "ff/text.hpp"

#include "ff/errors.hpp"

namespace ff::text {

bool is_unicode_space(char32_t cp) noexcept {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
    case 0x20: case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

namespace {

struct Decoded {
  char32_t cp;
  std::size_t width;
};

Decoded decode_one(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1};

  std::size_t width = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if ((b0 & 0xE0) == 0xC0) {
    width = 2; cp = b0 & 0x1F; min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    width = 3; cp = b0 & 0x0F; min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    width = 4; cp = b0 & 0x07; min = 0x10000;
  } else {
    throw DataError("invalid UTF-8 lead byte at offset " + std::to_string(i));
  }
  if (i + width > s.size()) throw DataError("truncated UTF-8 sequence at offset " + std::to_string(i));
  for (std::size_t k = 1; k < width; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) throw DataError("invalid UTF-8 continuation at offset " + std::to_string(i + k));
    cp = (cp << 6) | (b & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    throw DataError("invalid UTF-8 scalar at offset " + std::to_string(i));
  }
  return {cp, width};
}

}  // namespace

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto d = decode_one(s, i);
    out.push_back(d.cp);
    i += d.width;
  }
  return out;
}

std::size_t count_words(std::string_view utf8) {
  std::size_t words = 0;
  bool in_word = false;
  for (std::size_t i = 0; i < utf8.size();) {
    const auto d = decode_one(utf8, i);
    i += d.width;
    const bool space = is_unicode_space(d.cp);
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

std::size_t char_length(std::string_view utf8) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < utf8.size(); ++n) i += decode_one(utf8, i).width;
  return n;
}

std::vector<std::string> split_whitespace(std::string_view utf8) {
  std::vector<std::string> out;
  std::size_t start = 0;
  bool in_word = false;
  for (std::size_t i = 0; i < utf8.size();) {
    const auto d = decode_one(utf8, i);
    const bool space = is_unicode_space(d.cp);
    if (space && in_word) out.emplace_back(utf8.substr(start, i - start));
    if (!space && !in_word) start = i;
    in_word = !space;
    i += d.width;
  }
  if (in_word) out.emplace_back(utf8.substr(start));
  return out;
}

}  // namespace ff::text
