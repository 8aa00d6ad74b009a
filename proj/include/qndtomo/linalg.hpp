#pragma once

#include <Eigen/Dense>

#include <complex>
#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace qndtomo {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;

inline constexpr Complex kI{0.0, 1.0};

/// Absolute tolerance on max |m_ij - conj(m_ji)| and on |Tr - 1| for density
/// matrices. All entries handled here are O(1).
inline constexpr double kHermitianTol = 1e-12;

// --- basic operators -------------------------------------------------------

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

/// sigma_x = [[0,1],[1,0]], sigma_y = [[0,-i],[i,0]], sigma_z = [[1,0],[0,-1]].
/// |0> is the sigma_z = +1 eigenstate.
ComplexMatrix pauli(Pauli p);
ComplexMatrix identity(Eigen::Index dim);

/// Lowering operator sigma_- = |1><0| in the basis above, so that
/// sigma_+ sigma_- projects on |0> and relaxation drives <sigma_z> to -1.
ComplexMatrix sigma_minus();

/// Truncated annihilation operator on Fock levels 0..n_max.
ComplexMatrix annihilation(int n_max);

/// Standard Kronecker product: (a (x) b)[i*p + k, j*q + l] = a[i,j] b[k,l].
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

/// Matrix exponential (scaling and squaring with Pade approximant).
/// Throws ConfigError for non-square input.
ComplexMatrix matexp(const ComplexMatrix& m);

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);

double max_abs(const ComplexMatrix& m);
double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);
/// max |m_ij - conj(m_ji)|
double hermiticity_error(const ComplexMatrix& m);
/// max |U^dagger U - I|
double unitarity_error(const ComplexMatrix& u);

// --- Pauli labels ----------------------------------------------------------

/// Tensor label sigma_{m1} (x) sigma_{m2} ...; qubit 1 is the leftmost factor.
class PauliLabel {
public:
    PauliLabel() = default;
    explicit PauliLabel(std::vector<Pauli> ops);

    /// Parses "0", "x", "0z", "xy" ... (characters 0/i, x, y, z).
    static PauliLabel parse(std::string_view text);
    /// All 4^n labels in lexicographic order 0 < x < y < z, qubit 1 slowest.
    static std::vector<PauliLabel> all(int num_qubits);

    int num_qubits() const { return static_cast<int>(ops_.size()); }
    Pauli operator[](int qubit) const { return ops_.at(static_cast<std::size_t>(qubit)); }
    const std::vector<Pauli>& ops() const { return ops_; }

    /// Base-4 index consistent with all().
    int index() const;
    std::string str() const;
    ComplexMatrix matrix() const;

    auto operator<=>(const PauliLabel&) const = default;

private:
    std::vector<Pauli> ops_;
};

// --- density matrices ------------------------------------------------------

/// Hermitian, unit-trace 2x2 or 4x4 matrix. Positivity is deliberately not
/// required; min_eigenvalue() reports it.
class DensityMatrix {
public:
    /// Validates Hermiticity and trace to kHermitianTol; throws ConfigError.
    explicit DensityMatrix(ComplexMatrix m);

    /// Projector onto a computational basis state, e.g. "01".
    static DensityMatrix basis_state(std::string_view bits);
    static DensityMatrix pure(const Eigen::VectorXcd& psi);
    static DensityMatrix maximally_mixed(int num_qubits);

    int num_qubits() const { return num_qubits_; }
    Eigen::Index dim() const { return matrix_.rows(); }
    const ComplexMatrix& matrix() const { return matrix_; }
    Complex operator()(Eigen::Index i, Eigen::Index j) const { return matrix_(i, j); }

    /// Diagonal entries in basis order |0..0>, ..., |1..1>.
    std::vector<double> populations() const;
    double min_eigenvalue() const;
    bool is_positive(double tol = 1e-12) const { return min_eigenvalue() >= -tol; }

private:
    ComplexMatrix matrix_;
    int num_qubits_ = 0;
};

/// Tr[rho P] for every Pauli label P. Throws NumericalError when an imaginary
/// part exceeds kHermitianTol.
std::map<PauliLabel, double> pauli_expectations(const DensityMatrix& rho);

/// Same map for an arbitrary square matrix of dimension 2^n (no validation of
/// the density-matrix invariants, imaginary parts still checked).
std::map<PauliLabel, double> pauli_expectations(const ComplexMatrix& m);

/// sum_P r_P P / 2^n, the inverse of pauli_expectations.
ComplexMatrix from_pauli_expectations(const std::map<PauliLabel, double>& r, int num_qubits);

}  // namespace qndtomo
