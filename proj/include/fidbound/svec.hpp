#pragma once

#include "fidbound/linalg.hpp"

#include <vector>

namespace fidbound {

// Real coordinates for Hermitian matrices.  An N x N Hermitian matrix is
// identified with a vector of length N^2 in an orthonormal basis: the N
// diagonal units first, then for each pair k < l (row-major) the real unit
// (e_k e_l^+ + e_l e_k^+)/sqrt(2) followed by the imaginary unit
// i (e_k e_l^+ - e_l e_k^+)/sqrt(2).  Orthonormality is under tr(A B), so
// tr(A B) equals the dot product of the coordinate vectors.
class SvecLayout {
 public:
  explicit SvecLayout(int side);

  int side() const { return side_; }
  int size() const { return side_ * side_; }

  int diag_index(int k) const { return k; }
  int re_index(int k, int l) const { return side_ + 2 * pair_offset(k, l); }
  int im_index(int k, int l) const { return side_ + 2 * pair_offset(k, l) + 1; }

  RealVector to_coords(const ComplexMatrix& hermitian) const;
  ComplexMatrix from_coords(const RealVector& coords) const;

  // Unit basis matrix for one coordinate.
  ComplexMatrix basis_element(int alpha) const;

  enum class Kind { diag, real_part, imag_part };
  struct Coord {
    Kind kind;
    int k;
    int l;  // equals k for diagonal coordinates
  };
  Coord decode(int alpha) const;

 private:
  int pair_offset(int k, int l) const;
  int side_;
};

// Linear map on coordinate vectors that permutes coordinates up to sign:
// (L v)[alpha] = sign[alpha] * v[source[alpha]].  Exactly the form taken by
// partial transposition and by conjugation with a basis-ket permutation.
struct SignedPermutation {
  std::vector<int> source;
  std::vector<double> sign;

  int size() const { return static_cast<int>(source.size()); }
  RealVector apply(const RealVector& v) const;
  SignedPermutation inverse() const;
};

// Coordinate action of X -> partial_transpose(X) on the given factor subset.
SignedPermutation transpose_permutation(const std::vector<int>& dims,
                                        const FactorSubset& transposed);

// Coordinate action of X -> P X P^+ where P maps ket |i> to ket |sigma[i]>.
SignedPermutation conjugation_permutation(const std::vector<int>& sigma);

// One linear relation among coordinates implied by a set of invariance
// constraints: coord[alpha] = sign * coord[beta], or coord[alpha] = 0 when
// beta is negative.
struct CoordRelation {
  int alpha;
  int beta;
  double sign;
};

// Minimal relation set equivalent to {v : L v = v for every generator L}.
// Union-find over coordinate orbits with sign parity: each emitted relation
// restates one original constraint, redundant ones are skipped, and a sign
// conflict inside an orbit collapses it to a single forced-zero relation.
std::vector<CoordRelation> invariance_relations(
    const std::vector<SignedPermutation>& generators);

}  // namespace fidbound
