#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ecc {

// Raised when an input stream is structurally broken (e.g. unclosed markup).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a record violates a documented invariant and strict mode is on,
// or when a caller supplies data that cannot be processed at all.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a model cannot be trained from the given instances.
class TrainingError : public std::runtime_error {
 public:
  explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

// Raised by the pipeline driver when a stage fails; carries the stage name.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Grammatical slot a protagonist fills in an event.
enum class Role { Subj, Obj };

inline const char* to_string(Role r) { return r == Role::Subj ? "SUBJ" : "OBJ"; }

inline std::optional<Role> role_from_string(std::string_view s) {
  if (s == "SUBJ") return Role::Subj;
  if (s == "OBJ") return Role::Obj;
  return std::nullopt;
}

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

inline bool is_space_byte(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

// Collapses internal whitespace runs to single spaces and trims both ends.
inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space_byte(c)) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

// Half-up rounding of the rational numerator/denominator, scaled to `digits`
// fractional digits. Integer arithmetic throughout; inputs must be >= 0.
inline std::int64_t scaled_round_half_up(std::int64_t numerator, std::int64_t denominator,
                                         int digits) {
  std::int64_t scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  const std::int64_t p = numerator * scale;
  return (2 * p + denominator) / (2 * denominator);
}

// Formats `scaled` (an integer number of 10^-digits units) as a plain decimal.
inline std::string format_scaled(std::int64_t scaled, int digits) {
  std::int64_t scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%lld.%0*lld", static_cast<long long>(scaled / scale), digits,
                static_cast<long long>(scaled % scale));
  return buf;
}

inline std::string format_fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  return buf;
}

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size()) lines.emplace_back(text.substr(start));
      break;
    }
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = nl + 1;
  }
  return lines;
}

}  // namespace ecc
