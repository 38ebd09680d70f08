/* Copyright 2026 The h2h Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "h2h/error.hpp"

namespace h2h::io {

namespace fs = std::filesystem;
using Json = nlohmann::json;

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

namespace detail {

template <typename T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

inline std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

// Little-endian binary32 array. Throws IngestError if the file is missing or
// its size is not `expected` values (when expected != 0).
inline std::vector<float> read_f32(const fs::path& path, std::size_t expected = 0) {
  auto bytes = detail::read_bytes(path);
  if (bytes.size() % 4 != 0) throw IngestError(path.string() + ": size not a multiple of 4");
  const std::size_t n = bytes.size() / 4;
  if (expected != 0 && n != expected) {
    throw IngestError(path.string() + ": expected " + std::to_string(expected) + " values, found " +
                      std::to_string(n));
  }
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    float v;
    std::memcpy(&v, bytes.data() + 4 * i, 4);
    out[i] = detail::byteswap_if_big(v);
  }
  return out;
}

inline std::vector<std::uint32_t> read_u32(const fs::path& path, std::size_t expected = 0) {
  auto bytes = detail::read_bytes(path);
  if (bytes.size() % 4 != 0) throw IngestError(path.string() + ": size not a multiple of 4");
  const std::size_t n = bytes.size() / 4;
  if (expected != 0 && n != expected) {
    throw IngestError(path.string() + ": expected " + std::to_string(expected) + " values, found " +
                      std::to_string(n));
  }
  std::vector<std::uint32_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + 4 * i, 4);
    out[i] = detail::byteswap_if_big(v);
  }
  return out;
}

template <typename T>
void write_le(const fs::path& path, const std::vector<T>& values) {
  static_assert(sizeof(T) == 4);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write " + path.string());
  for (T v : values) {
    v = detail::byteswap_if_big(v);
    out.write(reinterpret_cast<const char*>(&v), 4);
  }
}

inline Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw IngestError(path.string() + ": " + e.what());
  }
}

// JSON text with every floating-point number printed as %.17g, so doubles
// round-trip bit-exactly and output is byte-stable.
inline void dump_json(const Json& j, std::string& out, int indent, int depth) {
  auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) throw ValidationError("non-finite value in JSON output");
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out += buf;
      // keep the value a float on re-parse
      if (std::strpbrk(buf, ".eEn") == nullptr) out += ".0";
      break;
    }
    case Json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        dump_json(e, out, indent, depth + 1);
      }
      if (!j.empty()) newline(depth);
      out += ']';
      break;
    }
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        dump_json(it.value(), out, indent, depth + 1);
      }
      if (!j.empty()) newline(depth);
      out += '}';
      break;
    }
    default:
      out += j.dump();
  }
}

inline std::string dump_json(const Json& j, int indent = 2) {
  std::string out;
  dump_json(j, out, indent, 0);
  return out;
}

inline void write_json(const fs::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write " + path.string());
  out << dump_json(j) << '\n';
}

// "<prefix>_%06d.<ext>"
inline std::string numbered(const std::string& prefix, std::size_t index, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_%06zu.", index);
  return prefix + buf + ext;
}

// Counts a gap-free run prefix_000000.ext, prefix_000001.ext, ... in `dir`.
// Any file matching the pattern beyond the run means a gap: IngestError.
inline std::size_t count_sequence(const fs::path& dir, const std::string& prefix, const std::string& ext) {
  if (!fs::is_directory(dir)) throw IngestError("not a directory: " + dir.string());
  std::size_t matching = 0;
  const std::string head = prefix + "_";
  const std::string tail = "." + ext;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() == head.size() + 6 + tail.size() && name.starts_with(head) && name.ends_with(tail)) {
      const std::string digits = name.substr(head.size(), 6);
      if (digits.find_first_not_of("0123456789") == std::string::npos) ++matching;
    }
  }
  std::size_t run = 0;
  while (fs::exists(dir / numbered(prefix, run, ext))) ++run;
  if (run != matching) {
    throw IngestError(dir.string() + ": " + prefix + "_%06d." + ext + " sequence has a gap after frame " +
                      std::to_string(run));
  }
  return run;
}

}  // namespace h2h::io
