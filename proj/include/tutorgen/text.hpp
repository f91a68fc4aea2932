#pragma once

// String helpers shared by the corpus, dialog and metrics code.

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <string>
#include <string_view>
#include <vector>

#include "tutorgen/error.hpp"

namespace tutorgen {

inline bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

/// Maximal runs of non-whitespace characters.
inline std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_ascii_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_ascii_space(text[i])) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

/// Canonical word count: whitespace-separated tokens, punctuation and
/// markdown emphasis stay attached to their token.
inline std::size_t word_count(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_ascii_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

inline std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  for (auto tok : split_whitespace(s)) {
    if (!out.empty()) out.push_back(' ');
    out.append(tok);
  }
  return out;
}

namespace detail {

// Three-byte UTF-8 punctuation that shows up in worksheet text.
enum class WidePunct { none, drop, space };

inline WidePunct classify_wide(std::string_view s, std::size_t i) {
  if (i + 2 >= s.size()) return WidePunct::none;
  if (static_cast<unsigned char>(s[i]) != 0xE2 ||
      static_cast<unsigned char>(s[i + 1]) != 0x80) {
    return WidePunct::none;
  }
  switch (static_cast<unsigned char>(s[i + 2])) {
    case 0x98: case 0x99: case 0x9C: case 0x9D:  // curly quotes
      return WidePunct::drop;
    case 0x93: case 0x94: case 0xA6:  // en dash, em dash, ellipsis
      return WidePunct::space;
    default:
      return WidePunct::none;
  }
}

}  // namespace detail

/// Lowercase, drop punctuation, collapse whitespace. Used to match option
/// text inside free-form utterances.
inline std::string normalize_for_match(std::string_view s) {
  std::string buf;
  buf.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    auto w = detail::classify_wide(s, i);
    if (w != detail::WidePunct::none) {
      if (w == detail::WidePunct::space) buf.push_back(' ');
      i += 3;
      continue;
    }
    auto c = static_cast<unsigned char>(s[i]);
    if (c < 0x80 && std::ispunct(c)) {
      ++i;
      continue;
    }
    buf.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    ++i;
  }
  return collapse_whitespace(buf);
}

/// Option normalization for the distinctness rule: lowercase, trim, collapse
/// internal whitespace, strip terminal punctuation.
inline std::string normalize_option(std::string_view s) {
  std::string out = collapse_whitespace(to_lower_ascii(s));
  for (;;) {
    if (!out.empty() && static_cast<unsigned char>(out.back()) < 0x80 &&
        std::ispunct(static_cast<unsigned char>(out.back()))) {
      out.pop_back();
    } else if (out.size() >= 3 &&
               detail::classify_wide(out, out.size() - 3) != detail::WidePunct::none) {
      out.resize(out.size() - 3);
    } else {
      break;
    }
    while (!out.empty() && is_ascii_space(out.back())) out.pop_back();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Time

using Instant = std::chrono::sys_time<std::chrono::milliseconds>;

inline Instant now_ms() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(
      std::chrono::system_clock::now());
}

/// ISO-8601 UTC with millisecond precision, e.g. 2024-05-01T10:20:30.123Z.
inline std::string format_instant(Instant t) {
  auto ms = t.time_since_epoch().count();
  auto secs = static_cast<std::time_t>(ms >= 0 ? ms / 1000 : (ms - 999) / 1000);
  int frac = static_cast<int>(ms - static_cast<std::int64_t>(secs) * 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  std::array<char, 96> buf{};
  std::snprintf(buf.data(), buf.size(), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec, frac);
  return buf.data();
}

inline Instant parse_instant(std::string_view s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0, frac = 0;
  std::string str(s);
  int consumed = 0;
  if (std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3dZ%n", &y, &mo, &d, &h,
                  &mi, &sec, &frac, &consumed) != 7 ||
      consumed != static_cast<int>(str.size())) {
    throw FormatError("invalid timestamp '" + str + "'");
  }
  using namespace std::chrono;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60 || h < 0 || mi < 0 || sec < 0 || frac < 0) {
    throw FormatError("invalid timestamp '" + str + "'");
  }
  return time_point_cast<milliseconds>(sys_days{ymd}) + hours{h} + minutes{mi} + seconds{sec} +
         milliseconds{frac};
}

inline double seconds_between(Instant from, Instant to) {
  return std::chrono::duration<double>(to - from).count();
}

}  // namespace tutorgen
