#include "qndtomo/gates.hpp"

#include "qndtomo/errors.hpp"

#include <cctype>
#include <cmath>
#include <numbers>

namespace qndtomo {

namespace {

ComplexMatrix quarter_turn(const ComplexMatrix& generator, int power) {
    return matexp(kI * (power * std::numbers::pi / 4.0) * generator);
}

ComplexMatrix embed(const ComplexMatrix& op, int qubit, int num_qubits) {
    ComplexMatrix out = qubit == 1 ? op : identity(2);
    for (int j = 2; j <= num_qubits; ++j) out = kron(out, j == qubit ? op : identity(2));
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

UnitaryGate parse_token(const std::string& token, int num_qubits) {
    std::string body = token;
    int power = 1;
    if (const auto caret = token.find('^'); caret != std::string::npos) {
        body = token.substr(0, caret);
        const std::string exp = token.substr(caret + 1);
        if (exp.empty() || exp.find_first_not_of("0123456789") != std::string::npos)
            throw ConfigError("gate '" + token + "': power must be a positive integer");
        power = std::stoi(exp);
    }
    if (body == "UFF") return make_gate(GateKind::UFF, 0, num_qubits, power);
    if (body.size() == 3 && body[0] == 'U' && (body[2] == '1' || body[2] == '2')) {
        const int qubit = body[2] - '0';
        switch (body[1]) {
        case 'x':
            return make_gate(GateKind::Ux, qubit, num_qubits, power);
        case 'y':
            return make_gate(GateKind::Uy, qubit, num_qubits, power);
        case 'z':
            return make_gate(GateKind::Uz, qubit, num_qubits, power);
        default:
            break;
        }
    }
    throw ConfigError("unknown gate '" + token + "'");
}

}  // namespace

std::string UnitaryGate::label() const {
    std::string s;
    switch (kind) {
    case GateKind::Ux:
        s = "Ux" + std::to_string(qubit);
        break;
    case GateKind::Uy:
        s = "Uy" + std::to_string(qubit);
        break;
    case GateKind::Uz:
        s = "Uz" + std::to_string(qubit);
        break;
    case GateKind::UFF:
        s = "UFF";
        break;
    }
    if (power != 1) s += "^" + std::to_string(power);
    return s;
}

UnitaryGate make_gate(GateKind kind, int qubit, int num_qubits, int power) {
    if (num_qubits < 1 || num_qubits > 2) throw ConfigError("make_gate: 1 or 2 qubits");
    if (power < 1) throw ConfigError("make_gate: power must be positive");
    UnitaryGate g;
    g.kind = kind;
    g.power = power;
    g.num_qubits = num_qubits;
    if (kind == GateKind::UFF) {
        if (num_qubits != 2) throw ConfigError("make_gate: UFF needs two qubits");
        g.qubit = 0;
        const ComplexMatrix yy = kron(pauli(Pauli::Y), pauli(Pauli::Y));
        const ComplexMatrix zz = kron(pauli(Pauli::Z), pauli(Pauli::Z));
        g.matrix = quarter_turn(yy + zz, power);
        return g;
    }
    if (qubit < 1 || qubit > num_qubits)
        throw ConfigError("make_gate: qubit index " + std::to_string(qubit) + " out of range");
    g.qubit = qubit;
    const Pauli axis = kind == GateKind::Ux ? Pauli::X : kind == GateKind::Uy ? Pauli::Y : Pauli::Z;
    g.matrix = embed(quarter_turn(pauli(axis), power), qubit, num_qubits);
    return g;
}

GateSequence::GateSequence(int num_qubits) : num_qubits_(num_qubits) {
    if (num_qubits < 1 || num_qubits > 2) throw ConfigError("GateSequence: 1 or 2 qubits");
}

GateSequence GateSequence::parse(std::string_view text, int num_qubits) {
    GateSequence seq(num_qubits);
    const std::string all = trim(text);
    if (all.empty() || all == "identity" || all == "I") return seq;
    std::vector<UnitaryGate> factors;
    std::size_t start = 0;
    while (start <= all.size()) {
        const std::size_t star = all.find('*', start);
        const std::string token = trim(std::string_view(all).substr(
            start, star == std::string::npos ? std::string::npos : star - start));
        if (token.empty()) throw ConfigError("gate sequence '" + all + "' has an empty factor");
        factors.push_back(parse_token(token, num_qubits));
        if (star == std::string::npos) break;
        start = star + 1;
    }
    for (auto it = factors.rbegin(); it != factors.rend(); ++it) seq.then(*it);
    return seq;
}

GateSequence& GateSequence::then(const UnitaryGate& gate) {
    if (gate.num_qubits != num_qubits_) throw ConfigError("GateSequence: gate register size differs");
    gates_.push_back(gate);
    return *this;
}

ComplexMatrix GateSequence::product() const {
    ComplexMatrix w = identity(Eigen::Index{1} << num_qubits_);
    for (const auto& g : gates_) w = g.matrix * w;
    return w;
}

std::string GateSequence::str() const {
    if (gates_.empty()) return "identity";
    std::string s;
    for (auto it = gates_.rbegin(); it != gates_.rend(); ++it) {
        if (!s.empty()) s += '*';
        s += it->label();
    }
    return s;
}

DensityMatrix apply_unitary(const ComplexMatrix& w, const DensityMatrix& rho) {
    if (w.rows() != rho.dim() || w.cols() != rho.dim())
        throw ConfigError("apply_unitary: dimension mismatch");
    ComplexMatrix out = w * rho.matrix() * w.adjoint();
    out = 0.5 * (out + out.adjoint()).eval();
    return DensityMatrix(std::move(out));
}

DensityMatrix apply_sequence(const GateSequence& seq, const DensityMatrix& rho) {
    if (seq.num_qubits() != rho.num_qubits())
        throw ConfigError("apply_sequence: sequence and state sizes differ");
    return apply_unitary(seq.product(), rho);
}

PhaseComparison equal_up_to_global_phase(const ComplexMatrix& a, const ComplexMatrix& b,
                                         double tol) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ConfigError("equal_up_to_global_phase: dimension mismatch");
    PhaseComparison out;
    const Complex overlap = (b.adjoint() * a).trace();
    out.phase = std::abs(overlap) > 0.0 ? std::arg(overlap) : 0.0;
    out.residual = max_abs(a - std::polar(1.0, out.phase) * b);
    out.equal = out.residual < tol;
    return out;
}

PhaseComparison verify_y_decomposition() {
    const ComplexMatrix lhs = quarter_turn(pauli(Pauli::Y), 1);
    const ComplexMatrix rhs =
        quarter_turn(pauli(Pauli::Z), 1) * quarter_turn(pauli(Pauli::X), 3) * quarter_turn(pauli(Pauli::Z), 3);
    return equal_up_to_global_phase(rhs, lhs);
}

}  // namespace qndtomo
