#include "fidbound/svec.hpp"

#include <cmath>
#include <functional>
#include <utility>

namespace fidbound {

namespace {
const double kSqrt2 = std::sqrt(2.0);
}

SvecLayout::SvecLayout(int side) : side_(side) {
  if (side < 1) throw ValidationError("SvecLayout: side < 1");
}

int SvecLayout::pair_offset(int k, int l) const {
  return k * side_ - k * (k + 1) / 2 + (l - k - 1);
}

RealVector SvecLayout::to_coords(const ComplexMatrix& hermitian) const {
  if (hermitian.rows() != side_ || hermitian.cols() != side_)
    throw ValidationError("SvecLayout::to_coords: size mismatch");
  RealVector v(size());
  for (int k = 0; k < side_; ++k) v(k) = hermitian(k, k).real();
  int idx = side_;
  for (int k = 0; k < side_; ++k)
    for (int l = k + 1; l < side_; ++l) {
      v(idx++) = kSqrt2 * hermitian(k, l).real();
      v(idx++) = kSqrt2 * hermitian(k, l).imag();
    }
  return v;
}

ComplexMatrix SvecLayout::from_coords(const RealVector& coords) const {
  if (coords.size() != size())
    throw ValidationError("SvecLayout::from_coords: size mismatch");
  ComplexMatrix m(side_, side_);
  for (int k = 0; k < side_; ++k) m(k, k) = coords(k);
  int idx = side_;
  for (int k = 0; k < side_; ++k)
    for (int l = k + 1; l < side_; ++l) {
      const double re = coords(idx++) / kSqrt2;
      const double im = coords(idx++) / kSqrt2;
      m(k, l) = Complex(re, im);
      m(l, k) = Complex(re, -im);
    }
  return m;
}

SvecLayout::Coord SvecLayout::decode(int alpha) const {
  if (alpha < 0 || alpha >= size())
    throw ValidationError("SvecLayout::decode: index out of range");
  if (alpha < side_) return {Kind::diag, alpha, alpha};
  int rem = alpha - side_;
  const bool imag = rem % 2 != 0;
  rem /= 2;
  int k = 0;
  while (rem >= side_ - k - 1) {
    rem -= side_ - k - 1;
    ++k;
  }
  return {imag ? Kind::imag_part : Kind::real_part, k, k + 1 + rem};
}

ComplexMatrix SvecLayout::basis_element(int alpha) const {
  const Coord c = decode(alpha);
  ComplexMatrix m = ComplexMatrix::Zero(side_, side_);
  switch (c.kind) {
    case Kind::diag:
      m(c.k, c.k) = 1.0;
      break;
    case Kind::real_part:
      m(c.k, c.l) = 1.0 / kSqrt2;
      m(c.l, c.k) = 1.0 / kSqrt2;
      break;
    case Kind::imag_part:
      m(c.k, c.l) = Complex(0.0, 1.0 / kSqrt2);
      m(c.l, c.k) = Complex(0.0, -1.0 / kSqrt2);
      break;
  }
  return m;
}

RealVector SignedPermutation::apply(const RealVector& v) const {
  if (v.size() != size())
    throw ValidationError("SignedPermutation::apply: size mismatch");
  RealVector out(v.size());
  for (int a = 0; a < size(); ++a) out(a) = sign[a] * v(source[a]);
  return out;
}

SignedPermutation SignedPermutation::inverse() const {
  SignedPermutation inv;
  inv.source.resize(source.size());
  inv.sign.resize(sign.size());
  for (int a = 0; a < size(); ++a) {
    inv.source[source[a]] = a;
    inv.sign[source[a]] = sign[a];
  }
  return inv;
}

namespace {

// Builds the coordinate action of an entry map out(i, j) = in(r(i,j), c(i,j))
// that sends Hermitian matrices to Hermitian matrices and preserves the unit
// basis up to sign.  Both partial transposition and ket-permutation
// conjugation have this shape.
SignedPermutation entry_map_permutation(
    int side, const std::function<std::pair<int, int>(int, int)>& entry) {
  SvecLayout layout(side);
  SignedPermutation p;
  p.source.resize(layout.size());
  p.sign.resize(layout.size());
  for (int k = 0; k < side; ++k) {
    auto [r, c] = entry(k, k);
    if (r != c)
      throw ValidationError("entry_map_permutation: diagonal not preserved");
    p.source[layout.diag_index(k)] = layout.diag_index(r);
    p.sign[layout.diag_index(k)] = 1.0;
  }
  for (int k = 0; k < side; ++k)
    for (int l = k + 1; l < side; ++l) {
      auto [a, b] = entry(k, l);
      if (a == b)
        throw ValidationError("entry_map_permutation: off-diagonal collapsed");
      if (a < b) {
        p.source[layout.re_index(k, l)] = layout.re_index(a, b);
        p.sign[layout.re_index(k, l)] = 1.0;
        p.source[layout.im_index(k, l)] = layout.im_index(a, b);
        p.sign[layout.im_index(k, l)] = 1.0;
      } else {
        p.source[layout.re_index(k, l)] = layout.re_index(b, a);
        p.sign[layout.re_index(k, l)] = 1.0;
        p.source[layout.im_index(k, l)] = layout.im_index(b, a);
        p.sign[layout.im_index(k, l)] = -1.0;
      }
    }
  return p;
}

}  // namespace

SignedPermutation transpose_permutation(const std::vector<int>& dims,
                                        const FactorSubset& transposed) {
  const int n = static_cast<int>(dims.size());
  transposed.validate_for(n, "transpose_permutation");
  long side = 1;
  for (int d : dims) side *= d;
  std::vector<long> strides(n, 1);
  for (int k = n - 2; k >= 0; --k) strides[k] = strides[k + 1] * dims[k + 1];

  // swap(i, j) = flat index whose digits over `transposed` come from j and
  // whose remaining digits come from i
  auto swap_digits = [&](int i, int j) {
    long out = 0;
    for (int k = 0; k < n; ++k) {
      const long src = transposed.contains(k) ? j : i;
      out += ((src / strides[k]) % dims[k]) * strides[k];
    }
    return static_cast<int>(out);
  };
  return entry_map_permutation(static_cast<int>(side), [&](int i, int j) {
    return std::make_pair(swap_digits(i, j), swap_digits(j, i));
  });
}

SignedPermutation conjugation_permutation(const std::vector<int>& sigma) {
  const int side = static_cast<int>(sigma.size());
  std::vector<int> inv(side, -1);
  for (int i = 0; i < side; ++i) {
    if (sigma[i] < 0 || sigma[i] >= side || inv[sigma[i]] != -1)
      throw ValidationError("conjugation_permutation: not a permutation");
    inv[sigma[i]] = i;
  }
  return entry_map_permutation(side, [&](int i, int j) {
    return std::make_pair(inv[i], inv[j]);
  });
}

namespace {

struct SignedUnionFind {
  std::vector<int> parent;
  std::vector<double> to_parent;
  std::vector<bool> zeroed;

  explicit SignedUnionFind(int n)
      : parent(n), to_parent(n, 1.0), zeroed(n, false) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }

  // returns {root, sign} with coord[i] = sign * coord[root]
  std::pair<int, double> find(int i) {
    if (parent[i] == i) return {i, 1.0};
    auto [root, s] = find(parent[i]);
    parent[i] = root;
    to_parent[i] *= s;
    return {root, to_parent[i]};
  }
};

}  // namespace

std::vector<CoordRelation> invariance_relations(
    const std::vector<SignedPermutation>& generators) {
  std::vector<CoordRelation> rel;
  if (generators.empty()) return rel;
  const int n = generators.front().size();
  for (const auto& g : generators)
    if (g.size() != n)
      throw ValidationError("invariance_relations: generator size mismatch");

  SignedUnionFind uf(n);
  for (const auto& g : generators) {
    for (int a = 0; a < n; ++a) {
      const int b = g.source[a];
      const double s = g.sign[a];
      if (a == b) {
        if (s < 0.0) {
          auto [root, sa] = uf.find(a);
          (void)sa;
          if (!uf.zeroed[root]) {
            uf.zeroed[root] = true;
            rel.push_back({a, -1, 0.0});
          }
        }
        continue;
      }
      auto [ra, sa] = uf.find(a);
      auto [rb, sb] = uf.find(b);
      if (ra != rb) {
        // coord[a] = s * coord[b]  =>  coord[ra] = (sa * s * sb) * coord[rb]
        uf.parent[ra] = rb;
        uf.to_parent[ra] = sa * s * sb;
        uf.zeroed[rb] = uf.zeroed[rb] || uf.zeroed[ra];
        rel.push_back({a, b, s});
      } else if (sa != s * sb && !uf.zeroed[ra]) {
        uf.zeroed[ra] = true;
        rel.push_back({a, -1, 0.0});
      }
    }
  }
  return rel;
}

}  // namespace fidbound
