#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ppid {

// Error categories; the CLI maps each to a distinct exit code.
struct ConfigError : std::runtime_error { using std::runtime_error::runtime_error; };
struct DataError : std::runtime_error { using std::runtime_error::runtime_error; };
struct NumericError : std::runtime_error { using std::runtime_error::runtime_error; };
struct MetricError : std::runtime_error { using std::runtime_error::runtime_error; };

enum class ClassLabel : std::uint8_t { Normal = 0, Attack = 1 };

inline const char* to_string(ClassLabel c) {
  return c == ClassLabel::Attack ? "Attack" : "Normal";
}

inline bool try_parse_class_label(const std::string& s, ClassLabel& out) {
  if (s == "Normal") { out = ClassLabel::Normal; return true; }
  if (s == "Attack") { out = ClassLabel::Attack; return true; }
  return false;
}

inline ClassLabel parse_class_label(const std::string& s) {
  ClassLabel c{};
  if (!try_parse_class_label(s, c))
    throw DataError("unknown class label '" + s + "' (expected Normal or Attack)");
  return c;
}

// Seeded generator with hand-rolled sampling so sequences are identical across
// platforms and standard-library versions (std distributions are not portable).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // uniform in [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform integer in [0, n), rejection-sampled to avoid modulo bias
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw NumericError("Rng::below called with n = 0");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do { x = next_u64(); } while (x >= limit);
    return x % n;
  }

  // standard normal via Box-Muller (second variate discarded)
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  std::mt19937_64 gen_;
};

// Round-trip exact decimal rendering: 17 significant digits recover the same
// double bit pattern on parse.
inline std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Splits on delim, preserving empty fields (including a trailing one).
inline std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace ppid
