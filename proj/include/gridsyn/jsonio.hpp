#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <string>

namespace gridsyn {

using json = nlohmann::ordered_json;

// Matrices serialize as row-major nested arrays, vectors as flat arrays.
json matrix_to_json(const Eigen::MatrixXd& m);
json vector_to_json(const Eigen::VectorXd& v);
Eigen::MatrixXd matrix_from_json(const json& j);
Eigen::VectorXd vector_from_json(const json& j);

json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& doc);

}  // namespace gridsyn
