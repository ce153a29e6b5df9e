#include "hopgag/matrix_io.hpp"

#include <fstream>
#include <sstream>

namespace hopgag {

namespace {

void reject_unknown_keys(const nlohmann::json& j,
                         std::initializer_list<const char*> allowed,
                         const char* what) {
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed) {
            if (key == a) { known = true; break; }
        }
        if (!known) {
            throw invalid_input(std::string(what) + ": unknown key '" + key + "'");
        }
    }
}

} // namespace

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    auto data = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            data.push_back(m(r, c));
        }
    }
    j["data"] = std::move(data);
    return j;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw invalid_input("matrix: expected a JSON object");
    }
    reject_unknown_keys(j, {"rows", "cols", "data"}, "matrix");
    if (!j.contains("rows") || !j.contains("cols") || !j.contains("data")) {
        throw invalid_input("matrix: requires keys rows, cols, data");
    }
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    if (rows < 1 || cols < 1) {
        throw invalid_input("matrix: rows and cols must be >= 1");
    }
    if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols) {
        throw invalid_input("matrix: data length must equal rows * cols");
    }
    Eigen::MatrixXd m(rows, cols);
    Eigen::Index i = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c, ++i) {
            if (!data[i].is_number()) {
                throw invalid_input("matrix: data entries must be numbers");
            }
            m(r, c) = data[i].get<double>();
        }
    }
    if (!m.allFinite()) {
        throw invalid_input("matrix: non-finite entry");
    }
    return m;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    return matrix_to_json(v.transpose());
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    const Eigen::MatrixXd m = matrix_from_json(j);
    if (m.rows() != 1) {
        throw invalid_input("vector: expected rows = 1");
    }
    return m.row(0).transpose();
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw invalid_input("cannot open file: " + path);
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw invalid_input("cannot parse JSON in " + path + ": " + e.what());
    }
}

Eigen::MatrixXd read_matrix_file(const std::string& path) {
    return matrix_from_json(read_json_file(path));
}

Eigen::VectorXd read_vector_file(const std::string& path) {
    return vector_from_json(read_json_file(path));
}

void write_matrix_file(const Eigen::MatrixXd& m, const std::string& path) {
    write_text_file(matrix_to_json(m).dump(), path);
}

void write_text_file(const std::string& text, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << text;
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

} // namespace hopgag
