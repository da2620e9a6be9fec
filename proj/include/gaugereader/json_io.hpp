#pragma once

// Small helpers around nlohmann::json: typed field access that reports the
// JSON path of a schema violation, and a deterministic writer that prints
// reals with a fixed number of significant digits.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "gaugereader/core.hpp"

namespace gauge::json_io {

using Json = nlohmann::ordered_json;

inline Json parse_document(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::Syntax, e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open file", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write file", path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(Errc::Io, "write failed", path);
}

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}
inline std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

inline const Json& require(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw Error(Errc::Schema, "expected an object", path);
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(Errc::Schema, "missing required field", join(path, key));
  return *it;
}

inline const Json* optional_field(const Json& obj, const std::string& key) {
  if (!obj.is_object()) return nullptr;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

inline double as_number(const Json& v, const std::string& path) {
  if (!v.is_number()) throw Error(Errc::Schema, "expected a number", path);
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw Error(Errc::Schema, "number is not finite", path);
  return d;
}

inline long long as_integer(const Json& v, const std::string& path) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15) return static_cast<long long>(d);
  }
  throw Error(Errc::Schema, "expected an integer", path);
}

inline std::string as_string(const Json& v, const std::string& path) {
  if (!v.is_string()) throw Error(Errc::Schema, "expected a string", path);
  return v.get<std::string>();
}

inline const Json& as_array(const Json& v, const std::string& path, std::optional<std::size_t> size = {}) {
  if (!v.is_array()) throw Error(Errc::Schema, "expected an array", path);
  if (size && v.size() != *size)
    throw Error(Errc::Schema, "expected an array of length " + std::to_string(*size), path);
  return v;
}

inline double number_or(const Json& obj, const std::string& key, double fallback, const std::string& path) {
  const Json* v = optional_field(obj, key);
  return v ? as_number(*v, join(path, key)) : fallback;
}

namespace writer {

inline void write_real(std::string& out, double d, int significant_digits) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", significant_digits, d);
  out += buf;
}

inline void write_value(std::string& out, const Json& v, int digits, int indent, int depth) {
  auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (v.type()) {
    case Json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        write_value(out, it.value(), digits, indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& e : v) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        write_value(out, e, digits, indent, depth + 1);
      }
      newline(depth);
      out += ']';
      return;
    }
    case Json::value_t::number_float:
      write_real(out, v.get<double>(), digits);
      return;
    default:
      out += v.dump();
  }
}

}  // namespace writer

/// Serializes with insertion-ordered keys and reals at `significant_digits`.
inline std::string dump(const Json& v, int significant_digits = 9, int indent = 2) {
  std::string out;
  writer::write_value(out, v, significant_digits, indent, 0);
  out += '\n';
  return out;
}

}  // namespace gauge::json_io
