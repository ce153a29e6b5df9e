#pragma once

#include <Eigen/Dense>

#include <json.hpp>

#include <string>

#include "hopgag/errors.hpp"

namespace hopgag {

/// JSON matrix format: {"rows": R, "cols": C, "data": [row-major numbers]}.
/// Vectors are encoded with R = 1. Unknown keys are rejected.
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

/// File helpers. Parse or I/O failures raise invalid_input with the path.
Eigen::MatrixXd read_matrix_file(const std::string& path);
Eigen::VectorXd read_vector_file(const std::string& path);
void write_matrix_file(const Eigen::MatrixXd& m, const std::string& path);

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& text, const std::string& path);

} // namespace hopgag
