#pragma once

// Field-path-aware accessors over nlohmann::json used by every config loader.

#include "cbfshield/error.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <string>
#include <string_view>

namespace cbfshield::detail {

using nlohmann::json;

inline json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, what + ": " + e.what());
  }
}

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

inline const json& require(const json& obj, const std::string& path, const char* key) {
  if (!obj.is_object()) throw Error(ErrorCode::Parse, "expected an object", path);
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::Parse, "missing field", join(path, key));
  return *it;
}

inline double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw Error(ErrorCode::Parse, "expected a number", path);
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw Error(ErrorCode::Validation, "value must be finite", path);
  return x;
}

inline double number(const json& obj, const std::string& path, const char* key) {
  return as_number(require(obj, path, key), join(path, key));
}

inline double number_or(const json& obj, const std::string& path, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  return number(obj, path, key);
}

inline std::int64_t integer(const json& obj, const std::string& path, const char* key) {
  const json& v = require(obj, path, key);
  if (!v.is_number_integer()) throw Error(ErrorCode::Parse, "expected an integer", join(path, key));
  return v.get<std::int64_t>();
}

inline std::string string(const json& obj, const std::string& path, const char* key) {
  const json& v = require(obj, path, key);
  if (!v.is_string()) throw Error(ErrorCode::Parse, "expected a string", join(path, key));
  return v.get<std::string>();
}

inline bool boolean(const json& obj, const std::string& path, const char* key) {
  const json& v = require(obj, path, key);
  if (!v.is_boolean()) throw Error(ErrorCode::Parse, "expected a boolean", join(path, key));
  return v.get<bool>();
}

inline const json& array(const json& obj, const std::string& path, const char* key) {
  const json& v = require(obj, path, key);
  if (!v.is_array()) throw Error(ErrorCode::Parse, "expected an array", join(path, key));
  return v;
}

template <int N>
Eigen::Matrix<double, N, 1> as_vector(const json& v, const std::string& path) {
  if (!v.is_array()) throw Error(ErrorCode::Parse, "expected an array", path);
  if (v.size() != static_cast<std::size_t>(N)) {
    throw Error(ErrorCode::Parse,
                "expected " + std::to_string(N) + " entries, got " + std::to_string(v.size()), path);
  }
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) out[i] = as_number(v[i], index(path, i));
  return out;
}

template <int N>
Eigen::Matrix<double, N, 1> vector(const json& obj, const std::string& path, const char* key) {
  return as_vector<N>(require(obj, path, key), join(path, key));
}

template <typename Derived>
json to_array(const Eigen::MatrixBase<Derived>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace cbfshield::detail
