#pragma once

#include "qndtomo/linalg.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace qndtomo {

enum class GateKind { Ux, Uy, Uz, UFF };

/// exp(i power pi sigma / 4) on one qubit, or
/// U_FF^power = exp(i power pi (sigma_y1 sigma_y2 + sigma_z1 sigma_z2) / 4).
struct UnitaryGate {
    GateKind kind = GateKind::Ux;
    /// 1-based target qubit; 0 for UFF.
    int qubit = 1;
    int power = 1;
    int num_qubits = 1;
    ComplexMatrix matrix;

    /// "Ux1", "Uy2^3", "UFF" ...
    std::string label() const;
};

/// Builds the gate embedded in an n-qubit register (qubit 1 leftmost).
/// Throws ConfigError for an invalid qubit index or a UFF on one qubit.
UnitaryGate make_gate(GateKind kind, int qubit, int num_qubits, int power = 1);

/// Gates stored in application order: gates()[0] acts on the state first.
///
/// Text form is operator-product notation, "UFF*Ux1" = U_FF U_x1, so the
/// rightmost factor is applied first. "identity" (or an empty string) is the
/// empty sequence.
class GateSequence {
public:
    explicit GateSequence(int num_qubits = 2);

    static GateSequence parse(std::string_view text, int num_qubits);

    int num_qubits() const { return num_qubits_; }
    const std::vector<UnitaryGate>& gates() const { return gates_; }
    bool empty() const { return gates_.empty(); }

    /// Appends a gate that acts after all gates already present.
    GateSequence& then(const UnitaryGate& gate);

    /// W = U_last ... U_first.
    ComplexMatrix product() const;
    /// Product notation, "identity" when empty.
    std::string str() const;

private:
    int num_qubits_;
    std::vector<UnitaryGate> gates_;
};

/// W rho W^dagger with W = seq.product().
DensityMatrix apply_sequence(const GateSequence& seq, const DensityMatrix& rho);
DensityMatrix apply_unitary(const ComplexMatrix& w, const DensityMatrix& rho);

struct PhaseComparison {
    bool equal = false;
    /// max |a - e^{i phase} b| at the optimal phase.
    double residual = 0.0;
    double phase = 0.0;
};

/// Optimal phase arg Tr(b^dagger a), then the residual at that phase.
PhaseComparison equal_up_to_global_phase(const ComplexMatrix& a, const ComplexMatrix& b,
                                         double tol = 1e-12);

/// exp(i pi sigma_y / 4) against exp(i pi sigma_z / 4) exp(i 3pi sigma_x / 4)
/// exp(i 3pi sigma_z / 4).
PhaseComparison verify_y_decomposition();

}  // namespace qndtomo
