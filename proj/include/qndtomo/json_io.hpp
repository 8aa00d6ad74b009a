#pragma once

#include "qndtomo/linalg.hpp"

#include <json.hpp>

namespace qndtomo {

/// Nested rows of [re, im] pairs.
nlohmann::json matrix_to_json(const ComplexMatrix& m);
ComplexMatrix matrix_from_json(const nlohmann::json& j);

/// {"num_qubits": n, "matrix": [...]}
nlohmann::json density_to_json(const DensityMatrix& rho);
DensityMatrix density_from_json(const nlohmann::json& j);

}  // namespace qndtomo
