#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <json.hpp>
#include <string>

#include "dockrl/errors.hpp"

namespace dockrl {

// shortest exact decimal form; %.17g round-trips IEEE doubles bit-exactly
inline std::string g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Eigen <-> json as nested row-major arrays
inline nlohmann::json to_json_matrix(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline nlohmann::json to_json_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index rows,
                                        Eigen::Index cols, const std::string& name) {
  if (!j.is_array() || Eigen::Index(j.size()) != rows)
    throw ConfigError(name + ": expected " + std::to_string(rows) + " rows");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[i];
    if (!row.is_array() || Eigen::Index(row.size()) != cols)
      throw ConfigError(name + ": expected " + std::to_string(cols) + " columns");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[c].get<double>();
  }
  return m;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j, Eigen::Index size,
                                        const std::string& name) {
  if (!j.is_array() || Eigen::Index(j.size()) != size)
    throw ConfigError(name + ": expected " + std::to_string(size) + " entries");
  Eigen::VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace dockrl
