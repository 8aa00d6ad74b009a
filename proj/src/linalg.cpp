#include "qndtomo/linalg.hpp"

#include "qndtomo/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace qndtomo {

ComplexMatrix pauli(Pauli p) {
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    switch (p) {
    case Pauli::I:
        m(0, 0) = 1.0;
        m(1, 1) = 1.0;
        break;
    case Pauli::X:
        m(0, 1) = 1.0;
        m(1, 0) = 1.0;
        break;
    case Pauli::Y:
        m(0, 1) = -kI;
        m(1, 0) = kI;
        break;
    case Pauli::Z:
        m(0, 0) = 1.0;
        m(1, 1) = -1.0;
        break;
    }
    return m;
}

ComplexMatrix identity(Eigen::Index dim) { return ComplexMatrix::Identity(dim, dim); }

ComplexMatrix sigma_minus() {
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(1, 0) = 1.0;
    return m;
}

ComplexMatrix annihilation(int n_max) {
    if (n_max < 1) throw ConfigError("annihilation: n_max must be >= 1");
    const Eigen::Index dim = n_max + 1;
    ComplexMatrix a = ComplexMatrix::Zero(dim, dim);
    for (Eigen::Index n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    const Eigen::Index p = b.rows();
    const Eigen::Index q = b.cols();
    ComplexMatrix out(a.rows() * p, a.cols() * q);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * p, j * q, p, q) = a(i, j) * b;
    return out;
}

ComplexMatrix matexp(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) throw ConfigError("matexp: matrix must be square");
    if (m.rows() == 0) return m;
    return m.exp();
}

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) { return a * b - b * a; }

double max_abs(const ComplexMatrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ConfigError("max_abs_diff: dimension mismatch");
    return max_abs(a - b);
}

double hermiticity_error(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) throw ConfigError("hermiticity_error: matrix must be square");
    return max_abs(m - m.adjoint());
}

double unitarity_error(const ComplexMatrix& u) {
    if (u.rows() != u.cols()) throw ConfigError("unitarity_error: matrix must be square");
    return max_abs(u.adjoint() * u - identity(u.rows()));
}

// --- PauliLabel --------------------------------------------------------------

PauliLabel::PauliLabel(std::vector<Pauli> ops) : ops_(std::move(ops)) {
    if (ops_.empty()) throw ConfigError("PauliLabel: empty label");
}

PauliLabel PauliLabel::parse(std::string_view text) {
    std::vector<Pauli> ops;
    for (char c : text) {
        switch (c) {
        case '0':
        case 'i':
        case 'I':
            ops.push_back(Pauli::I);
            break;
        case 'x':
        case 'X':
            ops.push_back(Pauli::X);
            break;
        case 'y':
        case 'Y':
            ops.push_back(Pauli::Y);
            break;
        case 'z':
        case 'Z':
            ops.push_back(Pauli::Z);
            break;
        default:
            throw ConfigError("PauliLabel: invalid character in '" + std::string(text) + "'");
        }
    }
    return PauliLabel(std::move(ops));
}

std::vector<PauliLabel> PauliLabel::all(int num_qubits) {
    if (num_qubits < 1) throw ConfigError("PauliLabel::all: need at least one qubit");
    int count = 1;
    for (int q = 0; q < num_qubits; ++q) count *= 4;
    std::vector<PauliLabel> labels;
    labels.reserve(static_cast<std::size_t>(count));
    for (int idx = 0; idx < count; ++idx) {
        std::vector<Pauli> ops(static_cast<std::size_t>(num_qubits));
        int rest = idx;
        for (int q = num_qubits - 1; q >= 0; --q) {
            ops[static_cast<std::size_t>(q)] = static_cast<Pauli>(rest % 4);
            rest /= 4;
        }
        labels.emplace_back(std::move(ops));
    }
    return labels;
}

int PauliLabel::index() const {
    int idx = 0;
    for (Pauli p : ops_) idx = idx * 4 + static_cast<int>(p);
    return idx;
}

std::string PauliLabel::str() const {
    static constexpr char kNames[] = {'0', 'x', 'y', 'z'};
    std::string s;
    for (Pauli p : ops_) s.push_back(kNames[static_cast<int>(p)]);
    return s;
}

ComplexMatrix PauliLabel::matrix() const {
    ComplexMatrix m = pauli(ops_.front());
    for (std::size_t q = 1; q < ops_.size(); ++q) m = kron(m, pauli(ops_[q]));
    return m;
}

// --- DensityMatrix -----------------------------------------------------------

namespace {

int qubits_for_dim(Eigen::Index dim) {
    if (dim == 2) return 1;
    if (dim == 4) return 2;
    return 0;
}

}  // namespace

DensityMatrix::DensityMatrix(ComplexMatrix m) : matrix_(std::move(m)) {
    if (matrix_.rows() != matrix_.cols())
        throw ConfigError("DensityMatrix: matrix must be square");
    num_qubits_ = qubits_for_dim(matrix_.rows());
    if (num_qubits_ == 0) throw ConfigError("DensityMatrix: only 1 or 2 qubits are supported");
    const double herm = hermiticity_error(matrix_);
    if (herm > kHermitianTol)
        throw ConfigError("DensityMatrix: not Hermitian (max deviation " + std::to_string(herm) + ")");
    const Complex tr = matrix_.trace();
    if (std::abs(tr - 1.0) > kHermitianTol)
        throw ConfigError("DensityMatrix: trace " + std::to_string(tr.real()) + " differs from 1");
}

DensityMatrix DensityMatrix::basis_state(std::string_view bits) {
    if (bits.empty() || bits.size() > 2) throw ConfigError("basis_state: expected 1 or 2 bits");
    Eigen::Index idx = 0;
    for (char c : bits) {
        if (c != '0' && c != '1') throw ConfigError("basis_state: bits must be 0 or 1");
        idx = idx * 2 + (c - '0');
    }
    const Eigen::Index dim = Eigen::Index{1} << bits.size();
    ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
    m(idx, idx) = 1.0;
    return DensityMatrix(std::move(m));
}

DensityMatrix DensityMatrix::pure(const Eigen::VectorXcd& psi) {
    const double norm = psi.norm();
    if (norm == 0.0) throw ConfigError("DensityMatrix::pure: zero state vector");
    const Eigen::VectorXcd v = psi / norm;
    ComplexMatrix m = v * v.adjoint();
    m = 0.5 * (m + m.adjoint()).eval();
    return DensityMatrix(std::move(m));
}

DensityMatrix DensityMatrix::maximally_mixed(int num_qubits) {
    const Eigen::Index dim = Eigen::Index{1} << num_qubits;
    return DensityMatrix(identity(dim) / static_cast<double>(dim));
}

std::vector<double> DensityMatrix::populations() const {
    std::vector<double> p(static_cast<std::size_t>(dim()));
    for (Eigen::Index i = 0; i < dim(); ++i) p[static_cast<std::size_t>(i)] = matrix_(i, i).real();
    return p;
}

double DensityMatrix::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(matrix_, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

// --- Pauli expansion ---------------------------------------------------------

std::map<PauliLabel, double> pauli_expectations(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) throw ConfigError("pauli_expectations: matrix must be square");
    const int n = qubits_for_dim(m.rows());
    if (n == 0) throw ConfigError("pauli_expectations: dimension must be 2 or 4");
    std::map<PauliLabel, double> out;
    for (const PauliLabel& label : PauliLabel::all(n)) {
        const Complex value = (m * label.matrix()).trace();
        if (std::abs(value.imag()) > kHermitianTol)
            throw NumericalError("pauli_expectations: Tr[rho " + label.str() +
                                 "] has imaginary part; input is not Hermitian");
        out.emplace(label, value.real());
    }
    return out;
}

std::map<PauliLabel, double> pauli_expectations(const DensityMatrix& rho) {
    return pauli_expectations(rho.matrix());
}

ComplexMatrix from_pauli_expectations(const std::map<PauliLabel, double>& r, int num_qubits) {
    const Eigen::Index dim = Eigen::Index{1} << num_qubits;
    ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
    for (const auto& [label, value] : r) {
        if (label.num_qubits() != num_qubits)
            throw ConfigError("from_pauli_expectations: label " + label.str() + " has wrong length");
        m += value * label.matrix();
    }
    return m / static_cast<double>(dim);
}

}  // namespace qndtomo
