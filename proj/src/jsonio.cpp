#include "gridsyn/jsonio.hpp"

#include "gridsyn/errors.hpp"

#include <fstream>

namespace gridsyn {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    if (!j.is_array()) throw ParseError("matrix: expected array of rows");
    const auto r = static_cast<Eigen::Index>(j.size());
    if (r == 0) return Eigen::MatrixXd(0, 0);
    const auto c = static_cast<Eigen::Index>(j.at(0).size());
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        const json& row = j.at(i);
        if (static_cast<Eigen::Index>(row.size()) != c)
            throw ParseError("matrix: ragged rows");
        for (Eigen::Index k = 0; k < c; ++k) m(i, k) = row.at(k).get<double>();
    }
    return m;
}

Eigen::VectorXd vector_from_json(const json& j) {
    if (!j.is_array()) throw ParseError("vector: expected array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(i).get<double>();
    return v;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return doc;
}

void write_json_file(const std::string& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write file: " + path);
    out << doc.dump(2) << "\n";
}

}  // namespace gridsyn
