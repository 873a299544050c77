// Internal row builders shared by the global and local hierarchy programs.
#pragma once

#include "fidbound/sdp.hpp"
#include "fidbound/svec.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace fidbound {
namespace detail {

// Appends scale * (svec basis element alpha) as sparse entries.
inline void append_basis(const SvecLayout& layout, int alpha, double scale,
                         std::vector<CoeffMatrix::Entry>& out) {
  const SvecLayout::Coord c = layout.decode(alpha);
  const double s = 1.0 / std::sqrt(2.0);
  switch (c.kind) {
    case SvecLayout::Kind::diag:
      out.push_back({c.k, c.k, Complex(scale, 0.0)});
      break;
    case SvecLayout::Kind::real_part:
      out.push_back({c.k, c.l, Complex(scale * s, 0.0)});
      out.push_back({c.l, c.k, Complex(scale * s, 0.0)});
      break;
    case SvecLayout::Kind::imag_part:
      out.push_back({c.k, c.l, Complex(0.0, scale * s)});
      out.push_back({c.l, c.k, Complex(0.0, -scale * s)});
      break;
  }
}

// Row-major strides of a factor list.
inline std::vector<int> factor_strides(const std::vector<int>& dims) {
  std::vector<int> strides(dims.size(), 1);
  for (int f = static_cast<int>(dims.size()) - 2; f >= 0; --f)
    strides[f] = strides[f + 1] * dims[f + 1];
  return strides;
}

// Flat-index offsets of every multi-index over the `chosen` factors.
inline std::vector<int> subset_offsets(const std::vector<int>& dims,
                                       const std::vector<int>& strides,
                                       const std::vector<int>& chosen) {
  int side = 1;
  for (int f : chosen) side *= dims[f];
  std::vector<int> offsets(side, 0);
  int repeat = side;
  for (int f : chosen) {
    repeat /= dims[f];
    for (int idx = 0; idx < side; ++idx)
      offsets[idx] += ((idx / repeat) % dims[f]) * strides[f];
  }
  return offsets;
}

// Rows forcing the partial trace of `block` onto the `kept` factors (in
// their given order) to equal the identity: one row per Hermitian basis
// element F of the kept product space, <F embedded, X> = tr F.
inline void append_reduction_rows(int block, const std::vector<int>& dims,
                                  const std::vector<int>& kept,
                                  std::vector<Equality>& out) {
  std::vector<int> rest;
  for (int f = 0; f < static_cast<int>(dims.size()); ++f) {
    bool in_kept = false;
    for (int k : kept) in_kept = in_kept || (k == f);
    if (!in_kept) rest.push_back(f);
  }
  const std::vector<int> strides = factor_strides(dims);
  const std::vector<int> kept_off = subset_offsets(dims, strides, kept);
  const std::vector<int> rest_off = subset_offsets(dims, strides, rest);
  const int side = static_cast<int>(kept_off.size() * rest_off.size());

  const SvecLayout layout(static_cast<int>(kept_off.size()));
  for (int alpha = 0; alpha < layout.size(); ++alpha) {
    std::vector<CoeffMatrix::Entry> fentries;
    append_basis(layout, alpha, 1.0, fentries);
    std::vector<CoeffMatrix::Entry> entries;
    entries.reserve(fentries.size() * rest_off.size());
    for (const CoeffMatrix::Entry& e : fentries)
      for (int r : rest_off)
        entries.push_back({kept_off[e.row] + r, kept_off[e.col] + r, e.value});
    Equality eq;
    eq.terms.emplace_back(block, CoeffMatrix(side, std::move(entries)));
    eq.rhs = (alpha < layout.side()) ? 1.0 : 0.0;
    out.push_back(std::move(eq));
  }
}

// Rows pinning the invariance X = P X P^+ for every generator, reduced to
// one 2-sparse (or forced-zero) row per non-redundant coordinate relation.
inline void append_invariance_rows(int block, const std::vector<int>& dims,
                                   const std::vector<SignedPermutation>& gens,
                                   std::vector<Equality>& out) {
  if (gens.empty()) return;
  int side = 1;
  for (int d : dims) side *= d;
  const SvecLayout layout(side);
  for (const CoordRelation& rel : invariance_relations(gens)) {
    std::vector<CoeffMatrix::Entry> entries;
    append_basis(layout, rel.alpha, 1.0, entries);
    if (rel.beta >= 0) append_basis(layout, rel.beta, -rel.sign, entries);
    Equality eq;
    eq.terms.emplace_back(block, CoeffMatrix(side, std::move(entries)));
    eq.rhs = 0.0;
    out.push_back(std::move(eq));
  }
}

// Flat-index permutation swapping tensor factors a and b of `dims`.
inline std::vector<int> swap_factors_sigma(const std::vector<int>& dims, int a,
                                           int b) {
  const int count = static_cast<int>(dims.size());
  const std::vector<int> strides = factor_strides(dims);
  const int side = strides[0] * dims[0];
  std::vector<int> sigma(side);
  std::vector<int> digit(count);
  for (int idx = 0; idx < side; ++idx) {
    int rem = idx;
    for (int f = 0; f < count; ++f) {
      digit[f] = rem / strides[f];
      rem %= strides[f];
    }
    std::swap(digit[a], digit[b]);
    int mapped = 0;
    for (int f = 0; f < count; ++f) mapped += digit[f] * strides[f];
    sigma[idx] = mapped;
  }
  return sigma;
}

inline std::string cut_name(const FactorSubset& cut) {
  std::string name = "ppt";
  for (int f : cut.indices()) name += "_" + std::to_string(f);
  return name;
}

}  // namespace detail
}  // namespace fidbound
