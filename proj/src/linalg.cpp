#include "fidbound/linalg.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <utility>

namespace fidbound {

namespace {

std::vector<long> flat_strides(const std::vector<int>& dims) {
  std::vector<long> strides(dims.size(), 1);
  for (int k = static_cast<int>(dims.size()) - 2; k >= 0; --k)
    strides[k] = strides[k + 1] * dims[k + 1];
  return strides;
}

long product(const std::vector<int>& dims) {
  long p = 1;
  for (int d : dims) p *= d;
  return p;
}

void check_dims(const std::vector<int>& dims, const std::string& context) {
  if (dims.empty())
    throw ValidationError(context + ": factor list is empty");
  for (int d : dims)
    if (d < 1) throw ValidationError(context + ": factor dimension < 1");
}

// Offsets of every multi-index over `sub` factor positions into the flat
// index of the full space, i.e. result[m] = sum_k digit_k(m) * stride[sub[k]].
std::vector<long> subset_offsets(const std::vector<int>& dims,
                                 const std::vector<int>& subset) {
  std::vector<long> strides = flat_strides(dims);
  long count = 1;
  for (int k : subset) count *= dims[k];
  std::vector<long> offsets(count, 0);
  long repeat = 1;  // how many consecutive entries share the current digit
  for (int pos = static_cast<int>(subset.size()) - 1; pos >= 0; --pos) {
    const int d = dims[subset[pos]];
    const long stride = strides[subset[pos]];
    for (long m = 0; m < count; ++m) {
      long digit = (m / repeat) % d;
      offsets[m] += digit * stride;
    }
    repeat *= d;
  }
  return offsets;
}

}  // namespace

FactorSubset::FactorSubset(std::initializer_list<int> indices)
    : FactorSubset(std::vector<int>(indices)) {}

FactorSubset::FactorSubset(std::vector<int> indices) : indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  for (size_t k = 0; k < indices_.size(); ++k) {
    if (indices_[k] < 0)
      throw ValidationError("FactorSubset: negative factor index");
    if (k > 0 && indices_[k] == indices_[k - 1])
      throw ValidationError("FactorSubset: duplicate factor index " +
                            std::to_string(indices_[k]));
  }
}

bool FactorSubset::contains(int factor) const {
  return std::binary_search(indices_.begin(), indices_.end(), factor);
}

void FactorSubset::validate_for(int factor_count, const std::string& context) const {
  for (int k : indices_)
    if (k >= factor_count)
      throw ValidationError(context + ": factor index " + std::to_string(k) +
                            " out of range for " + std::to_string(factor_count) +
                            " factors");
}

FactorSubset FactorSubset::complement(int factor_count) const {
  validate_for(factor_count, "FactorSubset::complement");
  std::vector<int> rest;
  for (int k = 0; k < factor_count; ++k)
    if (!contains(k)) rest.push_back(k);
  return FactorSubset(std::move(rest));
}

HermitianOperator::HermitianOperator(std::vector<int> dims, ComplexMatrix matrix)
    : dims_(std::move(dims)), matrix_(std::move(matrix)) {
  check_dims(dims_, "HermitianOperator");
  if (matrix_.rows() != matrix_.cols())
    throw ValidationError("HermitianOperator: matrix is not square");
  if (product(dims_) != matrix_.rows())
    throw ValidationError(
        "HermitianOperator: factor dimensions multiply to " +
        std::to_string(product(dims_)) + " but matrix side is " +
        std::to_string(matrix_.rows()));
  const double scale = std::max(1.0, matrix_.norm());
  if ((matrix_ - matrix_.adjoint()).norm() > 1e-9 * scale)
    throw ValidationError("HermitianOperator: matrix is not Hermitian");
  matrix_ = 0.5 * (matrix_ + matrix_.adjoint().eval());
}

HermitianOperator HermitianOperator::identity(std::vector<int> dims) {
  check_dims(dims, "HermitianOperator::identity");
  const long n = product(dims);
  return HermitianOperator(std::move(dims), ComplexMatrix::Identity(n, n));
}

HermitianOperator HermitianOperator::with_dims(std::vector<int> new_dims) const {
  check_dims(new_dims, "HermitianOperator::with_dims");
  if (product(new_dims) != side())
    throw ValidationError("with_dims: product of new factor dimensions " +
                          std::to_string(product(new_dims)) +
                          " does not match side " + std::to_string(side()));
  return HermitianOperator(std::move(new_dims), matrix_);
}

HermitianOperator kron(const HermitianOperator& a, const HermitianOperator& b) {
  std::vector<int> dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  ComplexMatrix m(a.side() * b.side(), a.side() * b.side());
  for (int i = 0; i < a.side(); ++i)
    for (int j = 0; j < a.side(); ++j)
      m.block(i * b.side(), j * b.side(), b.side(), b.side()) =
          a.matrix()(i, j) * b.matrix();
  return HermitianOperator(std::move(dims), std::move(m));
}

HermitianOperator partial_trace(const HermitianOperator& h,
                                const FactorSubset& traced) {
  traced.validate_for(h.factor_count(), "partial_trace");
  if (traced.count() == h.factor_count()) {
    ComplexMatrix m(1, 1);
    m(0, 0) = h.matrix().trace();
    return HermitianOperator({1}, std::move(m));
  }
  const FactorSubset kept = traced.complement(h.factor_count());
  std::vector<int> kept_dims;
  for (int k : kept.indices()) kept_dims.push_back(h.dims()[k]);

  const std::vector<long> kept_off = subset_offsets(h.dims(), kept.indices());
  const std::vector<long> traced_off = subset_offsets(h.dims(), traced.indices());
  const long nk = static_cast<long>(kept_off.size());

  ComplexMatrix m = ComplexMatrix::Zero(nk, nk);
  for (long r = 0; r < nk; ++r)
    for (long c = 0; c < nk; ++c) {
      Complex sum = 0.0;
      for (long off_t : traced_off)
        sum += h.matrix()(kept_off[r] + off_t, kept_off[c] + off_t);
      m(r, c) = sum;
    }
  return HermitianOperator(std::move(kept_dims), std::move(m));
}

HermitianOperator partial_transpose(const HermitianOperator& h,
                                    const FactorSubset& transposed) {
  transposed.validate_for(h.factor_count(), "partial_transpose");
  const FactorSubset rest = transposed.complement(h.factor_count());
  const std::vector<long> sub_off = subset_offsets(h.dims(), transposed.indices());
  const std::vector<long> rest_off = subset_offsets(h.dims(), rest.indices());

  ComplexMatrix m(h.side(), h.side());
  for (long is = 0; is < static_cast<long>(sub_off.size()); ++is)
    for (long js = 0; js < static_cast<long>(sub_off.size()); ++js)
      for (long ir = 0; ir < static_cast<long>(rest_off.size()); ++ir)
        for (long jr = 0; jr < static_cast<long>(rest_off.size()); ++jr)
          m(sub_off[is] + rest_off[ir], sub_off[js] + rest_off[jr]) =
              h.matrix()(sub_off[js] + rest_off[ir], sub_off[is] + rest_off[jr]);
  return HermitianOperator(h.dims(), std::move(m));
}

HermitianOperator reorder_factors(const HermitianOperator& h,
                                  const std::vector<int>& new_order) {
  const int n = h.factor_count();
  if (static_cast<int>(new_order.size()) != n)
    throw ValidationError("reorder_factors: order list has wrong length");
  std::set<int> seen(new_order.begin(), new_order.end());
  if (static_cast<int>(seen.size()) != n || *seen.begin() != 0 ||
      *seen.rbegin() != n - 1)
    throw ValidationError("reorder_factors: order list is not a permutation");

  std::vector<int> new_dims(n);
  for (int k = 0; k < n; ++k) new_dims[k] = h.dims()[new_order[k]];

  const std::vector<long> old_strides = flat_strides(h.dims());
  const std::vector<long> new_strides = flat_strides(new_dims);

  // map[old_flat] = new_flat
  const long side = h.side();
  std::vector<long> map(side, 0);
  for (long idx = 0; idx < side; ++idx) {
    long rem = idx;
    std::vector<int> digit(n);
    for (int k = 0; k < n; ++k) {
      digit[k] = static_cast<int>(rem / old_strides[k]);
      rem %= old_strides[k];
    }
    long out = 0;
    for (int k = 0; k < n; ++k) out += digit[new_order[k]] * new_strides[k];
    map[idx] = out;
  }

  ComplexMatrix m(side, side);
  for (long r = 0; r < side; ++r)
    for (long c = 0; c < side; ++c)
      m(map[r], map[c]) = h.matrix()(r, c);
  return HermitianOperator(std::move(new_dims), std::move(m));
}

EigResult hermitian_eig(const HermitianOperator& h) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h.matrix());
  if (solver.info() != Eigen::Success)
    throw SolverError("hermitian_eig: eigensolver did not converge");
  return EigResult{solver.eigenvalues(), solver.eigenvectors()};
}

double min_eigenvalue(const ComplexMatrix& hermitian) {
  if (hermitian.rows() != hermitian.cols())
    throw ValidationError("min_eigenvalue: matrix is not square");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian,
                                                      Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw SolverError("min_eigenvalue: eigensolver did not converge");
  return solver.eigenvalues()(0);
}

double min_eigenvalue(const HermitianOperator& h) {
  return min_eigenvalue(h.matrix());
}

HermitianOperator flip_operator(int d) {
  if (d < 1) throw ValidationError("flip_operator: dimension < 1");
  ComplexMatrix m = ComplexMatrix::Zero(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i * d + j, j * d + i) = 1.0;
  return HermitianOperator({d, d}, std::move(m));
}

ComplexMatrix permutation_operator(const std::vector<int>& perm, int d) {
  if (d < 1) throw ValidationError("permutation_operator: dimension < 1");
  const int n = static_cast<int>(perm.size());
  std::set<int> seen(perm.begin(), perm.end());
  if (static_cast<int>(seen.size()) != n || (n > 0 && (*seen.begin() != 0 ||
                                                       *seen.rbegin() != n - 1)))
    throw ValidationError("permutation_operator: not a permutation of 0..n-1");

  long side = 1;
  for (int k = 0; k < n; ++k) side *= d;
  std::vector<long> strides(n, 1);
  for (int k = n - 2; k >= 0; --k) strides[k] = strides[k + 1] * d;

  ComplexMatrix p = ComplexMatrix::Zero(side, side);
  for (long src = 0; src < side; ++src) {
    long rem = src, dst = 0;
    for (int k = 0; k < n; ++k) {
      const long digit = rem / strides[k];
      rem %= strides[k];
      dst += digit * strides[perm[k]];
    }
    p(dst, src) = 1.0;
  }
  return p;
}

double trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw ValidationError("trace_product: size mismatch");
  return a.cwiseProduct(b.transpose()).sum().real();
}

}  // namespace fidbound
