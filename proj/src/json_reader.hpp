#pragma once

// Strict reader over a JSON object: every key must be consumed, types are
// checked, and errors carry the dotted field path.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "qkdnet/errors.hpp"
#include "qkdnet/time.hpp"

namespace qkdnet::detail {

using Json = nlohmann::ordered_json;

inline std::string index_path(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

template <class T>
T convert(const Json& j, const std::string& path);

template <>
inline double convert<double>(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

template <>
inline std::uint64_t convert<std::uint64_t>(const Json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return j.get<std::uint64_t>();
  throw ConfigError(path, "expected a non-negative integer");
}

template <>
inline int convert<int>(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<int>();
}

template <>
inline bool convert<bool>(const Json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
  return j.get<bool>();
}

template <>
inline std::string convert<std::string>(const Json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

template <>
inline Timestamp convert<Timestamp>(const Json& j, const std::string& path) {
  try {
    return parse_iso8601(convert<std::string>(j, path));
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
}

template <>
inline std::vector<double> convert<std::vector<double>>(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(convert<double>(j[i], index_path(path, i)));
  return out;
}

template <>
inline std::vector<std::string> convert<std::vector<std::string>>(const Json& j,
                                                                  const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(convert<std::string>(j[i], index_path(path, i)));
  }
  return out;
}

class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const std::string& path() const noexcept { return path_; }

  const Json* find(const std::string& key) {
    known_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <class T>
  std::optional<T> optional(const std::string& key) {
    const Json* v = find(key);
    if (!v || v->is_null()) return std::nullopt;
    return convert<T>(*v, at(key));
  }

  template <class T>
  T required(const std::string& key) {
    const Json* v = find(key);
    if (!v) throw ConfigError(at(key), "missing required field");
    return convert<T>(*v, at(key));
  }

  template <class T>
  void into(const std::string& key, T& dst) {
    if (auto v = optional<T>(key)) dst = std::move(*v);
  }

  // Array of objects under `key` (absent means empty).
  template <class F>
  void each(const std::string& key, F&& f) {
    const Json* v = find(key);
    if (!v) return;
    if (!v->is_array()) throw ConfigError(at(key), "expected an array");
    for (std::size_t i = 0; i < v->size(); ++i) {
      ObjectReader item((*v)[i], index_path(at(key), i));
      f(item);
      item.done();
    }
  }

  // Nested object under `key`, if present.
  template <class F>
  void nested(const std::string& key, F&& f) {
    const Json* v = find(key);
    if (!v) return;
    ObjectReader sub(*v, at(key));
    f(sub);
    sub.done();
  }

  void done() const {
    for (const auto& item : j_.items()) {
      if (known_.contains(item.key())) continue;
      std::string expected;
      for (const auto& k : known_) expected += (expected.empty() ? "" : ", ") + k;
      throw ConfigError(at(item.key()), "unknown key (expected one of: " + expected + ")");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> known_;
};

// Parses JSON text; syntax errors report the line and column.
inline Json parse_text(std::string_view text, const std::string& what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string detail = e.what();
    if (const auto cut = detail.find(": "); cut != std::string::npos) detail.erase(0, cut + 2);
    throw ConfigError(what + ":" + std::to_string(line) + ":" + std::to_string(column),
                      "malformed JSON (" + detail + ")");
  }
}

}  // namespace qkdnet::detail
