#pragma once

#include <Eigen/Dense>

#include <complex>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace fidbound {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

// Input violates a documented precondition (dimensions, hermiticity,
// normalization, malformed documents).
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A hierarchy instance would exceed the configured size cap.
struct SizeCapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The solver cannot make progress (factorization breakdown, invalid state).
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Subset of tensor-factor positions, kept sorted and duplicate-free.
class FactorSubset {
 public:
  FactorSubset() = default;
  FactorSubset(std::initializer_list<int> indices);
  explicit FactorSubset(std::vector<int> indices);

  const std::vector<int>& indices() const { return indices_; }
  int count() const { return static_cast<int>(indices_.size()); }
  bool empty() const { return indices_.empty(); }
  bool contains(int factor) const;

  // Throws ValidationError if any index falls outside [0, factor_count).
  void validate_for(int factor_count, const std::string& context) const;

  FactorSubset complement(int factor_count) const;

  bool operator==(const FactorSubset& other) const {
    return indices_ == other.indices_;
  }

 private:
  std::vector<int> indices_;
};

// Hermitian matrix together with the tensor-factor dimensions of the space it
// acts on.  Construction symmetrizes to (M + M^dagger)/2 after checking that
// the input is Hermitian within relative tolerance 1e-9 in Frobenius norm.
class HermitianOperator {
 public:
  HermitianOperator(std::vector<int> dims, ComplexMatrix matrix);

  static HermitianOperator identity(std::vector<int> dims);

  const std::vector<int>& dims() const { return dims_; }
  int side() const { return static_cast<int>(matrix_.rows()); }
  int factor_count() const { return static_cast<int>(dims_.size()); }
  const ComplexMatrix& matrix() const { return matrix_; }

  double trace() const { return matrix_.trace().real(); }

  // Same matrix reinterpreted over a different factor split; the product of
  // new_dims must equal side().
  HermitianOperator with_dims(std::vector<int> new_dims) const;

 private:
  std::vector<int> dims_;
  ComplexMatrix matrix_;
};

HermitianOperator kron(const HermitianOperator& a, const HermitianOperator& b);

// Trace over the factors in `traced`; remaining factors keep their order.
HermitianOperator partial_trace(const HermitianOperator& h,
                                const FactorSubset& traced);

// Transpose the factors in `transposed`, identity on the rest.
HermitianOperator partial_transpose(const HermitianOperator& h,
                                    const FactorSubset& transposed);

// Factor k of the result is factor new_order[k] of the input; new_order must
// be a permutation of 0..factor_count-1.
HermitianOperator reorder_factors(const HermitianOperator& h,
                                  const std::vector<int>& new_order);

struct EigResult {
  RealVector eigenvalues;   // ascending
  ComplexMatrix eigenvectors;  // columns, orthonormal, aligned with values
};

// Eigendecomposition of a Hermitian operator.  The factorization residual
// ||H V - V diag(w)||_F stays below 1e-10 * max(1, ||H||_F) and the computed
// basis is orthonormal to the same tolerance.
EigResult hermitian_eig(const HermitianOperator& h);

double min_eigenvalue(const HermitianOperator& h);
double min_eigenvalue(const ComplexMatrix& hermitian);

// Swap operator V|i,j> = |j,i> on C^d tensor C^d, with dims {d, d}.
HermitianOperator flip_operator(int d);

// Unitary that moves the content of tensor slot k to slot perm[k]; all
// factors have dimension d.  perm must be a permutation of 0..n-1.
ComplexMatrix permutation_operator(const std::vector<int>& perm, int d);

// Re tr(A B) without forming the product; A and B must be same-size square.
double trace_product(const ComplexMatrix& a, const ComplexMatrix& b);

}  // namespace fidbound
