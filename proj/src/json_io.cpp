#include "qndtomo/json_io.hpp"

#include "qndtomo/errors.hpp"

namespace qndtomo {

nlohmann::json matrix_to_json(const ComplexMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

ComplexMatrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw ConfigError("matrix JSON: expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    ComplexMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw ConfigError("matrix JSON: ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& entry = row[static_cast<std::size_t>(c)];
            if (entry.is_number()) {
                m(r, c) = entry.get<double>();
            } else if (entry.is_array() && entry.size() == 2 && entry[0].is_number() &&
                       entry[1].is_number()) {
                m(r, c) = Complex(entry[0].get<double>(), entry[1].get<double>());
            } else {
                throw ConfigError("matrix JSON: entries must be [re, im] pairs");
            }
        }
    }
    return m;
}

nlohmann::json density_to_json(const DensityMatrix& rho) {
    return {{"num_qubits", rho.num_qubits()}, {"matrix", matrix_to_json(rho.matrix())}};
}

DensityMatrix density_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("matrix"))
        throw ConfigError("density JSON: missing 'matrix'");
    DensityMatrix rho(matrix_from_json(j.at("matrix")));
    if (j.contains("num_qubits") && j.at("num_qubits").get<int>() != rho.num_qubits())
        throw ConfigError("density JSON: num_qubits does not match matrix dimension");
    return rho;
}

}  // namespace qndtomo
