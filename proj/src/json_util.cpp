#include "daef/json_util.hpp"

#include "daef/error.hpp"

#include <cmath>
#include <cstdio>

namespace daef {

namespace {

double number_at(const Json& v, std::string_view field) {
  if (!v.is_number()) {
    throw Error(ErrorCode::SchemaError, std::string(field) + ": expected a number");
  }
  const double x = v.get<double>();
  if (!std::isfinite(x)) {
    throw Error(ErrorCode::SchemaError, std::string(field) + ": non-finite value");
  }
  return x;
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Matrix matrix_from_json(const Json& j, std::string_view field) {
  if (!j.is_array()) {
    throw Error(ErrorCode::SchemaError, std::string(field) + ": expected an array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Matrix(0, 0);
  if (!j[0].is_array()) {
    throw Error(ErrorCode::SchemaError, std::string(field) + ": rows must be arrays");
  }
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorCode::SchemaError, std::string(field) + ": ragged row " + std::to_string(i));
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = number_at(row[static_cast<std::size_t>(c)], field);
  }
  return m;
}

Vector vector_from_json(const Json& j, std::string_view field) {
  if (!j.is_array()) {
    throw Error(ErrorCode::SchemaError, std::string(field) + ": expected an array");
  }
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number_at(j[i], field);
  return v;
}

const Json& require_field(const Json& j, std::string_view key) {
  if (!j.is_object()) {
    throw Error(ErrorCode::SchemaError, "expected an object holding '" + std::string(key) + "'");
  }
  auto it = j.find(key);
  if (it == j.end()) {
    throw Error(ErrorCode::SchemaError, "missing field '" + std::string(key) + "'");
  }
  return *it;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace daef
