#pragma once

// Line-oriented parsing helpers shared by the text readers.

#include "vidtraj/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace vidtraj::text {

class LineReader {
 public:
  LineReader(std::istream& in, std::string_view source) : in_(in), source_(source) {}

  /// Next non-blank, non-comment line split on whitespace.
  bool next(std::vector<std::string_view>& tokens) {
    while (std::getline(in_, line_)) {
      ++line_no_;
      tokens.clear();
      std::string_view rest(line_);
      while (!rest.empty()) {
        const auto b = rest.find_first_not_of(" \t\r");
        if (b == std::string_view::npos) break;
        rest.remove_prefix(b);
        const auto e = rest.find_first_of(" \t\r");
        tokens.push_back(rest.substr(0, e));
        if (e == std::string_view::npos) break;
        rest.remove_prefix(e);
      }
      if (tokens.empty() || tokens.front().front() == '#') continue;
      return true;
    }
    if (in_.bad()) fail(Errc::io_failure, std::string(source_) + ": read failure");
    return false;
  }

  const std::string& line() const { return line_; }
  std::size_t line_no() const { return line_no_; }

  [[noreturn]] void error(const std::string& what) const {
    fail(Errc::parse_error, std::string(source_) + ":" + std::to_string(line_no_) + ": " + what);
  }

  double number(std::string_view tok) const {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(v))
      error("malformed number '" + std::string(tok) + "'");
    return v;
  }

  std::int64_t integer(std::string_view tok) const {
    std::int64_t v = 0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
      error("malformed integer '" + std::string(tok) + "'");
    return v;
  }

 private:
  std::istream& in_;
  std::string_view source_;
  std::string line_;
  std::size_t line_no_ = 0;
};

}  // namespace vidtraj::text
