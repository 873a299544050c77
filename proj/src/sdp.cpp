#include "fidbound/sdp.hpp"

#include "fidbound/svec.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <utility>

namespace fidbound {

namespace {
const double kSqrt2 = std::sqrt(2.0);
constexpr double kQrDropThreshold = 1e-12;   // relative to the row norm
constexpr double kStepFraction = 0.98;       // fraction of the boundary step
constexpr double kBigStep = 1e8;             // "unblocked" step placeholder
constexpr double kUnboundedScale = 1e10;
constexpr double kEigFloor = 1e-14;          // relative eigenvalue floor
}  // namespace

// ---------------------------------------------------------------------------
// CoeffMatrix

CoeffMatrix::CoeffMatrix(int side, std::vector<Entry> entries) : side_(side) {
  if (side < 1) throw ValidationError("CoeffMatrix: side < 1");
  std::map<std::pair<int, int>, Complex> acc;
  for (const Entry& e : entries) {
    if (e.row < 0 || e.row >= side || e.col < 0 || e.col >= side)
      throw ValidationError("CoeffMatrix: entry index out of range");
    acc[{e.row, e.col}] += e.value;
  }
  for (auto& [pos, v] : acc) {
    const auto [r, c] = pos;
    const double tol = 1e-12 * std::max(1.0, std::abs(v));
    if (r == c) {
      if (std::abs(v.imag()) > tol)
        throw ValidationError("CoeffMatrix: diagonal entry is not real");
      v = Complex(v.real(), 0.0);
    } else {
      auto mirror = acc.find({c, r});
      if (mirror == acc.end())
        acc[{c, r}] = std::conj(v);  // other triangle implied
      else if (std::abs(mirror->second - std::conj(v)) > tol)
        throw ValidationError("CoeffMatrix: entries are not Hermitian");
    }
  }
  entries_.clear();
  for (const auto& [pos, v] : acc)
    if (v != Complex(0.0, 0.0)) entries_.push_back({pos.first, pos.second, v});
}

CoeffMatrix::CoeffMatrix(const ComplexMatrix& dense)
    : side_(static_cast<int>(dense.rows())) {
  if (dense.rows() != dense.cols())
    throw ValidationError("CoeffMatrix: matrix is not square");
  const double scale = std::max(1.0, dense.norm());
  if ((dense - dense.adjoint()).norm() > 1e-9 * scale)
    throw ValidationError("CoeffMatrix: matrix is not Hermitian");
  const ComplexMatrix h = 0.5 * (dense + dense.adjoint());
  for (int r = 0; r < side_; ++r)
    for (int c = 0; c < side_; ++c)
      if (h(r, c) != Complex(0.0, 0.0)) entries_.push_back({r, c, h(r, c)});
}

ComplexMatrix CoeffMatrix::dense() const {
  ComplexMatrix m = ComplexMatrix::Zero(side_, side_);
  for (const Entry& e : entries_) m(e.row, e.col) = e.value;
  return m;
}

double CoeffMatrix::inner(const ComplexMatrix& x) const {
  if (x.rows() != side_ || x.cols() != side_)
    throw ValidationError("CoeffMatrix::inner: size mismatch");
  double sum = 0.0;
  for (const Entry& e : entries_) sum += (e.value * x(e.col, e.row)).real();
  return sum;
}

// ---------------------------------------------------------------------------
// ConicProgram

int BlockSpec::side() const {
  int s = 1;
  for (int d : dims) s *= d;
  return s;
}

int ConicProgram::add_block(std::string name, std::vector<int> dims) {
  blocks.push_back({std::move(name), std::move(dims)});
  trace_caps.resize(blocks.size());
  return static_cast<int>(blocks.size()) - 1;
}

int ConicProgram::block_index(const std::string& name) const {
  for (size_t b = 0; b < blocks.size(); ++b)
    if (blocks[b].name == name) return static_cast<int>(b);
  return -1;
}

void ConicProgram::validate() const {
  const int nb = static_cast<int>(blocks.size());
  if (nb == 0) throw ValidationError("ConicProgram: no blocks");
  for (const BlockSpec& blk : blocks) {
    if (blk.dims.empty())
      throw ValidationError("ConicProgram: block '" + blk.name +
                            "' has no factor dimensions");
    for (int d : blk.dims)
      if (d < 1)
        throw ValidationError("ConicProgram: block '" + blk.name +
                              "' has a factor dimension < 1");
  }
  if (!trace_caps.empty() && trace_caps.size() != blocks.size())
    throw ValidationError("ConicProgram: trace_caps length mismatch");
  for (size_t b = 0; b < trace_caps.size(); ++b)
    if (trace_caps[b] && *trace_caps[b] <= 0.0)
      throw ValidationError("ConicProgram: non-positive trace cap on block '" +
                            blocks[b].name + "'");

  std::set<int> tied;
  for (const TransposeTie& tie : ties) {
    if (tie.block < 0 || tie.block >= nb || tie.source < 0 || tie.source >= nb)
      throw ValidationError("ConicProgram: tie references a missing block");
    if (tie.block == tie.source)
      throw ValidationError("ConicProgram: block tied to itself");
    if (!tied.insert(tie.block).second)
      throw ValidationError("ConicProgram: block '" +
                            blocks[tie.block].name + "' tied twice");
    if (blocks[tie.block].dims != blocks[tie.source].dims)
      throw ValidationError("ConicProgram: tied block '" +
                            blocks[tie.block].name +
                            "' does not match its source dimensions");
    tie.transposed.validate_for(
        static_cast<int>(blocks[tie.source].dims.size()),
        "ConicProgram tie on block '" + blocks[tie.block].name + "'");
  }
  for (const TransposeTie& tie : ties)
    if (tied.count(tie.source))
      throw ValidationError("ConicProgram: tie source '" +
                            blocks[tie.source].name + "' is itself tied");

  for (const auto& [b, coeff] : objective) {
    if (b < 0 || b >= nb)
      throw ValidationError("ConicProgram: objective references missing block");
    if (coeff.side() != blocks[b].side())
      throw ValidationError("ConicProgram: objective size mismatch on block '" +
                            blocks[b].name + "'");
    if (tied.count(b))
      throw ValidationError("ConicProgram: objective on tied block '" +
                            blocks[b].name + "'");
  }
  for (size_t k = 0; k < equalities.size(); ++k) {
    for (const auto& [b, coeff] : equalities[k].terms) {
      if (b < 0 || b >= nb)
        throw ValidationError("ConicProgram: equality " + std::to_string(k) +
                              " references a missing block");
      if (coeff.side() != blocks[b].side())
        throw ValidationError("ConicProgram: equality " + std::to_string(k) +
                              " size mismatch on block '" + blocks[b].name +
                              "'");
      if (tied.count(b))
        throw ValidationError("ConicProgram: equality " + std::to_string(k) +
                              " constrains tied block '" + blocks[b].name +
                              "'");
    }
  }
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iterations: return "max-iterations";
    case SolveStatus::infeasible_detected: return "infeasible-detected";
    case SolveStatus::unbounded_detected: return "unbounded-detected";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// solver internals

namespace {

// svec coordinates of a sparse Hermitian coefficient
std::vector<std::pair<int, double>> coeff_coords(const CoeffMatrix& a,
                                                 const SvecLayout& layout) {
  std::vector<std::pair<int, double>> out;
  for (const CoeffMatrix::Entry& e : a.entries()) {
    if (e.row == e.col) {
      out.push_back({layout.diag_index(e.row), e.value.real()});
    } else if (e.row < e.col) {
      if (e.value.real() != 0.0)
        out.push_back({layout.re_index(e.row, e.col), kSqrt2 * e.value.real()});
      if (e.value.imag() != 0.0)
        out.push_back({layout.im_index(e.row, e.col), kSqrt2 * e.value.imag()});
    }
  }
  return out;
}

struct ConeState {
  int program_block = -1;
  FactorSubset subset;       // empty for the identity cone
  SignedPermutation perm;    // svec action of T_subset (identity when empty)
  ComplexMatrix Z;           // dual slack iterate
  ComplexMatrix Y;           // T_subset(X)
  ComplexMatrix S;           // inverse scaling point W^-1
  ComplexMatrix G, Gi;       // W^(1/2), W^(-1/2)
  ComplexMatrix Vq;          // eigenvectors of V = G Z G
  RealVector Vw;             // eigenvalues of V
  ComplexMatrix R;           // complementarity right-hand side
  ComplexMatrix dZ, dZ_aff;
  ComplexMatrix TdX, TdX_aff;
};

struct GroupState {
  int main_block = -1;
  std::vector<int> dims;
  int N = 0;
  int ns = 0;
  int offset = 0;  // first coordinate in the concatenated layout
  SvecLayout layout{1};
  std::vector<ConeState> cones;  // cones[0] is the identity cone
  RealVector c;                  // objective coordinates
  double cnorm = 0.0;
  RealMatrix At;                 // ns x m_kept
  ComplexMatrix X, dX;
  RealVector xvec, rd, f;
  RealMatrix H;
  std::unique_ptr<Eigen::LLT<Eigen::Ref<RealMatrix>>> hfac;
};

ComplexMatrix hermitize(const ComplexMatrix& m) {
  return 0.5 * (m + m.adjoint());
}

ComplexMatrix apply_transpose(const GroupState& g, const FactorSubset& subset,
                              const ComplexMatrix& m) {
  if (subset.empty()) return m;
  return partial_transpose(HermitianOperator(g.dims, m), subset).matrix();
}

// A^(1/2) and A^(-1/2) with a relative eigenvalue floor
void herm_sqrt_pair(const ComplexMatrix& a, ComplexMatrix& sqrt_a,
                    ComplexMatrix& invsqrt_a) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a);
  if (es.info() != Eigen::Success)
    throw SolverError("solve: eigendecomposition failed in scaling");
  RealVector w = es.eigenvalues();
  const double floor = kEigFloor * std::max(w.cwiseAbs().maxCoeff(), 1e-100);
  for (int i = 0; i < w.size(); ++i) w(i) = std::max(w(i), floor);
  const RealVector ws = w.cwiseSqrt();
  sqrt_a = es.eigenvectors() * ws.asDiagonal() * es.eigenvectors().adjoint();
  invsqrt_a = es.eigenvectors() * ws.cwiseInverse().asDiagonal() *
              es.eigenvectors().adjoint();
  sqrt_a = hermitize(sqrt_a);
  invsqrt_a = hermitize(invsqrt_a);
}

// Largest t <= kBigStep with P + t D >= 0, for P > 0.
double max_step(const ComplexMatrix& p, const ComplexMatrix& d) {
  Eigen::LLT<ComplexMatrix> llt(p);
  if (llt.info() != Eigen::Success) return 0.0;
  ComplexMatrix b = llt.matrixL().solve(d);
  b = llt.matrixL().solve(b.adjoint()).adjoint();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitize(b),
                                                  Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) return 0.0;
  const double lmin = es.eigenvalues()(0);
  if (lmin >= -1.0 / kBigStep) return kBigStep;
  return -1.0 / lmin;
}

// Solves V U + U V = 2 RHS in the eigenbasis of V.
ComplexMatrix lyapunov_solve(const ComplexMatrix& vq, const RealVector& vw,
                             const ComplexMatrix& rhs) {
  ComplexMatrix r = vq.adjoint() * rhs * vq;
  for (int i = 0; i < vw.size(); ++i)
    for (int j = 0; j < vw.size(); ++j) r(i, j) *= 2.0 / (vw(i) + vw(j));
  return hermitize(vq * r * vq.adjoint());
}

// Accumulates the signed-permuted Gram matrix of one cone into H:
//   H[a, b] += sign[a] sign[b] * <E_src[a], S E_src[b] S>.
void accumulate_cone_hessian(const GroupState& g, const ConeState& cone,
                             RealMatrix& h) {
  const int n = g.N;
  const int ns = g.ns;
  const ComplexMatrix& s = cone.S;
  const bool ident = cone.subset.empty();
  ComplexMatrix m(n, n);
  RealVector v(ns);
  for (int beta = 0; beta < ns; ++beta) {
    const int sb = ident ? beta : cone.perm.source[beta];
    const double sgn_b = ident ? 1.0 : cone.perm.sign[beta];
    const auto coord = g.layout.decode(sb);
    switch (coord.kind) {
      case SvecLayout::Kind::diag:
        m.noalias() = s.col(coord.k) * s.col(coord.k).adjoint();
        break;
      case SvecLayout::Kind::real_part:
        m.noalias() = s.col(coord.k) * s.col(coord.l).adjoint();
        m.noalias() += s.col(coord.l) * s.col(coord.k).adjoint();
        m *= 1.0 / kSqrt2;
        break;
      case SvecLayout::Kind::imag_part:
        m.noalias() = s.col(coord.k) * s.col(coord.l).adjoint();
        m.noalias() -= s.col(coord.l) * s.col(coord.k).adjoint();
        m *= Complex(0.0, 1.0 / kSqrt2);
        break;
    }
    v = g.layout.to_coords(m);
    double* col = h.col(beta).data();
    if (ident) {
      for (int a = 0; a < ns; ++a) col[a] += v(a);
    } else {
      const int* src = cone.perm.source.data();
      const double* sgn = cone.perm.sign.data();
      for (int a = 0; a < ns; ++a) col[a] += sgn_b * sgn[a] * v(src[a]);
    }
  }
}

struct RowReduction {
  std::vector<int> kept;  // original row indices, ascending
  bool inconsistent = false;
  int bad_row = -1;
};

RowReduction reduce_rows(const RealMatrix& at_full, const RealVector& b,
                         double feas_tol) {
  RowReduction out;
  const int m = static_cast<int>(at_full.cols());
  if (m == 0) return out;

  RealVector norms(m);
  for (int j = 0; j < m; ++j) norms(j) = at_full.col(j).norm();

  Eigen::ColPivHouseholderQR<RealMatrix> qr(at_full);
  const auto& perm = qr.colsPermutation().indices();
  const auto rdiag = qr.matrixQR().diagonal();
  const int kmax = static_cast<int>(std::min(at_full.rows(), at_full.cols()));
  for (int k = 0; k < kmax; ++k) {
    const int j = perm(k);
    if (std::abs(rdiag(k)) > kQrDropThreshold * norms(j))
      out.kept.push_back(j);
    else
      break;  // pivoting orders residuals, later columns are smaller
  }
  std::sort(out.kept.begin(), out.kept.end());
  if (static_cast<int>(out.kept.size()) == m) return out;

  // minimum-norm solution of the kept system, checked against dropped rows
  const int mk = static_cast<int>(out.kept.size());
  RealMatrix at_kept(at_full.rows(), mk);
  RealVector b_kept(mk);
  for (int k = 0; k < mk; ++k) {
    at_kept.col(k) = at_full.col(out.kept[k]);
    b_kept(k) = b(out.kept[k]);
  }
  RealVector x;
  if (mk == 0) {
    x = RealVector::Zero(at_full.rows());
  } else {
    Eigen::CompleteOrthogonalDecomposition<RealMatrix> cod(
        at_kept.transpose());
    x = cod.solve(b_kept);
  }
  std::set<int> kept_set(out.kept.begin(), out.kept.end());
  for (int j = 0; j < m; ++j) {
    if (kept_set.count(j)) continue;
    const double res = std::abs(at_full.col(j).dot(x) - b(j));
    if (res > feas_tol * (1.0 + std::abs(b(j)))) {
      out.inconsistent = true;
      out.bad_row = j;
      return out;
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// solve

Solution solve(const ConicProgram& program, const SolverSettings& settings) {
  program.validate();
  if (settings.max_iterations < 1)
    throw ValidationError("solve: max_iterations < 1");
  if (settings.feasibility_tolerance <= 0.0 || settings.gap_tolerance <= 0.0)
    throw ValidationError("solve: tolerances must be positive");

  const int nb = static_cast<int>(program.blocks.size());

  // tied blocks are derived quantities; everything else is a free group
  std::vector<int> tie_of_block(nb, -1);
  for (size_t t = 0; t < program.ties.size(); ++t)
    tie_of_block[program.ties[t].block] = static_cast<int>(t);

  std::vector<GroupState> groups;
  std::vector<int> group_of_block(nb, -1);
  int total_coords = 0;
  for (int b = 0; b < nb; ++b) {
    if (tie_of_block[b] >= 0) continue;
    GroupState g;
    g.main_block = b;
    g.dims = program.blocks[b].dims;
    g.N = program.blocks[b].side();
    g.ns = g.N * g.N;
    g.offset = total_coords;
    g.layout = SvecLayout(g.N);
    ConeState ident;
    ident.program_block = b;
    g.cones.push_back(std::move(ident));
    total_coords += g.ns;
    group_of_block[b] = static_cast<int>(groups.size());
    groups.push_back(std::move(g));
  }
  for (const TransposeTie& tie : program.ties) {
    GroupState& g = groups[group_of_block[tie.source]];
    ConeState cone;
    cone.program_block = tie.block;
    cone.subset = tie.transposed;
    cone.perm = transpose_permutation(g.dims, tie.transposed);
    g.cones.push_back(std::move(cone));
  }

  for (GroupState& g : groups) g.c = RealVector::Zero(g.ns);
  for (const auto& [b, coeff] : program.objective) {
    GroupState& g = groups[group_of_block[b]];
    for (const auto& [idx, val] : coeff_coords(coeff, g.layout)) g.c(idx) += val;
  }
  double cnorm_all = 0.0;
  for (GroupState& g : groups) {
    g.cnorm = g.c.norm();
    cnorm_all += g.cnorm * g.cnorm;
  }
  cnorm_all = std::sqrt(cnorm_all);

  // equality rows over the concatenated coordinates
  const int m_all = static_cast<int>(program.equalities.size());
  if (static_cast<double>(total_coords) * m_all > 2e8)
    throw SolverError("solve: constraint matrix too large for dense reduction");
  RealMatrix at_full = RealMatrix::Zero(total_coords, m_all);
  RealVector b_full(m_all);
  for (int k = 0; k < m_all; ++k) {
    b_full(k) = program.equalities[k].rhs;
    for (const auto& [b, coeff] : program.equalities[k].terms) {
      const GroupState& g = groups[group_of_block[b]];
      for (const auto& [idx, val] : coeff_coords(coeff, g.layout))
        at_full(g.offset + idx, k) += val;
    }
  }

  Solution sol;
  sol.dual_multipliers = RealVector::Zero(m_all);
  auto package = [&](SolveStatus status, const RealVector& y_kept,
                     const std::vector<int>& kept, int iters,
                     double pval, double dval, const Residuals& res) {
    sol.status = status;
    sol.iterations = iters;
    sol.primal_value = pval;
    sol.dual_value = dval;
    sol.residuals = res;
    for (size_t k = 0; k < kept.size(); ++k)
      sol.dual_multipliers(kept[k]) = y_kept(static_cast<int>(k));
    sol.primal_blocks.assign(nb, ComplexMatrix());
    sol.dual_slacks.assign(nb, ComplexMatrix());
    for (const GroupState& g : groups) {
      for (const ConeState& cone : g.cones) {
        sol.primal_blocks[cone.program_block] =
            apply_transpose(g, cone.subset, g.X);
        sol.dual_slacks[cone.program_block] = cone.Z;
      }
    }
    return sol;
  };

  const RowReduction reduction =
      reduce_rows(at_full, b_full, settings.feasibility_tolerance);

  // deterministic identity-scaled start
  for (GroupState& g : groups) {
    const auto& cap = program.trace_caps.empty()
                          ? std::optional<double>()
                          : program.trace_caps[g.main_block];
    const double xs = cap ? *cap / g.N : 1.0;
    g.X = xs * ComplexMatrix::Identity(g.N, g.N);
    const double zs = std::max(1.0, g.cnorm / std::sqrt(double(g.N)));
    for (ConeState& cone : g.cones)
      cone.Z = zs * ComplexMatrix::Identity(g.N, g.N);
  }

  if (reduction.inconsistent) {
    Residuals res;
    res.primal_feasibility = 1.0;
    return package(SolveStatus::infeasible_detected, RealVector(),
                   std::vector<int>(), 0, 0.0, 0.0, res);
  }

  const int mk = static_cast<int>(reduction.kept.size());
  RealVector b(mk);
  for (int k = 0; k < mk; ++k) b(k) = b_full(reduction.kept[k]);
  for (GroupState& g : groups) {
    g.At.resize(g.ns, mk);
    for (int k = 0; k < mk; ++k)
      g.At.col(k) = at_full.block(g.offset, reduction.kept[k], g.ns, 1);
  }
  at_full.resize(0, 0);

  if (mk == 0) {
    // No binding equalities survive reduction: the optimum is 0 at X = 0
    // unless some product-cone direction improves the objective.  One
    // trace-normalized auxiliary solve decides which case holds and supplies
    // either the improving ray or the dual slacks certifying X = 0.
    ConicProgram aux = program;
    Equality simplex;
    for (const GroupState& g : groups)
      simplex.terms.emplace_back(
          g.main_block, CoeffMatrix(ComplexMatrix::Identity(g.N, g.N)));
    simplex.rhs = 1.0;
    aux.equalities.push_back(simplex);
    const Solution normalized = solve(aux, settings);
    if (normalized.status == SolveStatus::optimal &&
        normalized.primal_value > 10.0 * settings.gap_tolerance) {
      for (GroupState& g : groups) {
        g.X = normalized.primal_blocks[g.main_block];
        for (ConeState& cone : g.cones) cone.Z = ComplexMatrix::Zero(g.N, g.N);
      }
      Residuals diverged;
      diverged.primal_feasibility = 0.0;
      diverged.dual_feasibility = 1.0;
      diverged.duality_gap = 1.0;
      return package(SolveStatus::unbounded_detected, RealVector(),
                     std::vector<int>(), normalized.iterations,
                     normalized.primal_value, 0.0, diverged);
    }
    // bounded (or undecided): move the simplex multiplier out of the main
    // slacks so the remaining slacks certify X = 0 against the original
    // constraint set
    const double shift = normalized.dual_multipliers(m_all);
    double rdnorm2 = 0.0;
    for (GroupState& g : groups) {
      g.X = ComplexMatrix::Zero(g.N, g.N);
      for (ConeState& cone : g.cones)
        cone.Z = normalized.dual_slacks[cone.program_block];
      g.cones.front().Z -= shift * ComplexMatrix::Identity(g.N, g.N);
      RealVector rd = -g.c;
      for (const ConeState& cone : g.cones) {
        const RealVector zv = g.layout.to_coords(cone.Z);
        if (cone.subset.empty())
          rd -= zv;
        else
          rd -= cone.perm.apply(zv);
      }
      rdnorm2 += rd.squaredNorm();
    }
    Residuals at_zero;
    at_zero.primal_feasibility = 0.0;
    at_zero.dual_feasibility = std::sqrt(rdnorm2) / (1.0 + cnorm_all);
    at_zero.duality_gap = 0.0;
    const bool clean = normalized.status == SolveStatus::optimal &&
                       at_zero.dual_feasibility <= settings.feasibility_tolerance;
    return package(clean ? SolveStatus::optimal : SolveStatus::max_iterations,
                   RealVector(), std::vector<int>(), normalized.iterations, 0.0,
                   0.0, at_zero);
  }

  const double bnorm = b.norm();
  int nu = 0;
  for (const GroupState& g : groups)
    nu += g.N * static_cast<int>(g.cones.size());

  RealVector y = RealVector::Zero(mk);
  Residuals res;
  double pval = 0.0, dval = 0.0;
  SolveStatus status = SolveStatus::max_iterations;
  int iters_done = 0;
  int stall = 0;

  // Near-degenerate instances can stall with residuals rebounding after
  // their minimum; any dual iterate certifies, so remember the best one
  // and report it if the loop exits without converging.
  double best_score = std::numeric_limits<double>::infinity();
  RealVector best_y;
  std::vector<ComplexMatrix> best_X, best_Z;
  Residuals best_res;
  double best_pval = 0.0, best_dval = 0.0;

  for (int iter = 0;; ++iter) {
    // residuals at the current iterate
    RealVector rp = b;
    pval = 0.0;
    for (GroupState& g : groups) {
      g.xvec = g.layout.to_coords(g.X);
      pval += g.c.dot(g.xvec);
      if (mk > 0) rp.noalias() -= g.At.transpose() * g.xvec;
      for (ConeState& cone : g.cones)
        cone.Y = apply_transpose(g, cone.subset, g.X);
    }
    dval = b.dot(y);
    double rdnorm2 = 0.0;
    for (GroupState& g : groups) {
      g.rd = -g.c;
      if (mk > 0) g.rd.noalias() += g.At * y;
      for (ConeState& cone : g.cones) {
        const RealVector zv = g.layout.to_coords(cone.Z);
        if (cone.subset.empty())
          g.rd -= zv;
        else
          g.rd -= cone.perm.apply(zv);
      }
      rdnorm2 += g.rd.squaredNorm();
    }
    res.primal_feasibility = rp.norm() / (1.0 + bnorm);
    res.dual_feasibility = std::sqrt(rdnorm2) / (1.0 + cnorm_all);
    res.duality_gap =
        std::abs(pval - dval) / (1.0 + std::abs(pval) + std::abs(dval));

    const double score =
        std::max({res.primal_feasibility / settings.feasibility_tolerance,
                  res.dual_feasibility / settings.feasibility_tolerance,
                  res.duality_gap / settings.gap_tolerance});
    if (score < best_score) {  // NaN scores never displace a snapshot
      best_score = score;
      best_y = y;
      best_res = res;
      best_pval = pval;
      best_dval = dval;
      best_X.clear();
      best_Z.clear();
      for (const GroupState& g : groups) {
        best_X.push_back(g.X);
        for (const ConeState& cone : g.cones) best_Z.push_back(cone.Z);
      }
    }

    double mu = 0.0;
    for (GroupState& g : groups)
      for (ConeState& cone : g.cones) mu += trace_product(cone.Y, cone.Z);
    mu /= nu;

    if (settings.verbosity >= 2)
      std::fprintf(stderr,
                   "iter %3d  mu %9.3e  rp %9.3e  rd %9.3e  gap %9.3e  "
                   "p %+.9e  d %+.9e\n",
                   iter, mu, res.primal_feasibility, res.dual_feasibility,
                   res.duality_gap, pval, dval);

    iters_done = iter;
    if (res.primal_feasibility <= settings.feasibility_tolerance &&
        res.dual_feasibility <= settings.feasibility_tolerance &&
        res.duality_gap <= settings.gap_tolerance) {
      status = SolveStatus::optimal;
      break;
    }
    double xnorm = 0.0;
    for (const GroupState& g : groups) xnorm = std::max(xnorm, g.X.norm());
    if (iter >= 3 &&
        res.primal_feasibility <= 10.0 * settings.feasibility_tolerance &&
        (pval > kUnboundedScale * (1.0 + bnorm + cnorm_all) ||
         xnorm > kUnboundedScale * kUnboundedScale)) {
      status = SolveStatus::unbounded_detected;
      break;
    }
    // Primal infeasibility shows up as a diverging dual ray: the dual
    // objective runs to -inf while the dual residual stays small.
    if (iter >= 3 &&
        res.dual_feasibility <= 10.0 * settings.feasibility_tolerance &&
        (dval < -kUnboundedScale * (1.0 + bnorm + cnorm_all) ||
         y.norm() > kUnboundedScale * kUnboundedScale)) {
      status = SolveStatus::infeasible_detected;
      break;
    }
    if (iter >= settings.max_iterations || stall >= 3) {
      status = SolveStatus::max_iterations;
      break;
    }
    bool iterate_finite = y.allFinite();
    for (const GroupState& g : groups) {
      if (!g.X.allFinite()) iterate_finite = false;
      for (const ConeState& cone : g.cones)
        if (!cone.Z.allFinite()) iterate_finite = false;
    }
    if (!iterate_finite) {
      status = SolveStatus::max_iterations;
      break;
    }

    // Nesterov-Todd scaling per cone
    for (GroupState& g : groups) {
      for (ConeState& cone : g.cones) {
        ComplexMatrix ys, yi;
        herm_sqrt_pair(cone.Y, ys, yi);
        ComplexMatrix t = hermitize(ys * cone.Z * ys);
        ComplexMatrix ts, ti;
        herm_sqrt_pair(t, ts, ti);
        const ComplexMatrix w = hermitize(ys * ti * ys);
        cone.S = hermitize(yi * ts * yi);
        herm_sqrt_pair(w, cone.G, cone.Gi);
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> vs(
            hermitize(cone.G * cone.Z * cone.G));
        if (vs.info() != Eigen::Success)
          throw SolverError("solve: scaling eigendecomposition failed");
        cone.Vq = vs.eigenvectors();
        cone.Vw = vs.eigenvalues();
        const double floor =
            kEigFloor * std::max(cone.Vw.cwiseAbs().maxCoeff(), 1e-100);
        for (int i = 0; i < cone.Vw.size(); ++i)
          cone.Vw(i) = std::max(cone.Vw(i), floor);
      }
    }

    // reduced Hessian per group, factored in place; reassembled on retries
    bool factor_ok = true;
    for (GroupState& g : groups) {
      double jitter = 0.0;
      for (int attempt = 0; attempt < 3; ++attempt) {
        if (g.H.rows() != g.ns) g.H.resize(g.ns, g.ns);
        g.H.setZero();
        for (const ConeState& cone : g.cones)
          accumulate_cone_hessian(g, cone, g.H);
        if (jitter > 0.0)
          g.H.diagonal().array() += jitter;
        g.hfac = std::make_unique<Eigen::LLT<Eigen::Ref<RealMatrix>>>(g.H);
        if (g.hfac->info() == Eigen::Success) break;
        const double scale = std::max(g.H.diagonal().maxCoeff(), 1.0);
        jitter = (jitter == 0.0) ? 1e-13 * scale : jitter * 100.0;
        if (attempt == 2) factor_ok = false;
      }
      if (!factor_ok) break;
    }
    if (!factor_ok) {
      status = SolveStatus::max_iterations;
      break;
    }

    RealMatrix mmat = RealMatrix::Zero(mk, mk);
    Eigen::LLT<RealMatrix> mfac;
    if (mk > 0) {
      for (GroupState& g : groups) {
        RealMatrix t = g.hfac->matrixL().solve(g.At);
        mmat.noalias() += t.transpose() * t;
      }
      double jitter = 0.0;
      for (int attempt = 0; attempt < 3; ++attempt) {
        RealMatrix mj = mmat;
        if (jitter > 0.0) mj.diagonal().array() += jitter;
        mfac.compute(mj);
        if (mfac.info() == Eigen::Success) break;
        const double scale = std::max(mmat.diagonal().maxCoeff(), 1.0);
        jitter = (jitter == 0.0) ? 1e-13 * scale : jitter * 100.0;
        if (attempt == 2) factor_ok = false;
      }
    }
    if (!factor_ok) {
      status = SolveStatus::max_iterations;
      break;
    }

    // one Newton solve for the current per-cone right-hand sides
    RealVector dy = RealVector::Zero(mk);
    auto newton_solve = [&]() {
      RealVector rhs = -rp;
      for (GroupState& g : groups) {
        g.f = -g.rd;
        for (ConeState& cone : g.cones) {
          const ComplexMatrix srs = hermitize(cone.S * cone.R * cone.S);
          const RealVector sv = g.layout.to_coords(srs);
          if (cone.subset.empty())
            g.f += sv;
          else
            g.f += cone.perm.apply(sv);
        }
        if (mk > 0) rhs.noalias() += g.At.transpose() * g.hfac->solve(g.f);
      }
      if (mk > 0) dy = mfac.solve(rhs);
      for (GroupState& g : groups) {
        RealVector xr = g.f;
        if (mk > 0) xr.noalias() -= g.At * dy;
        g.dX = hermitize(g.layout.from_coords(g.hfac->solve(xr)));
        for (ConeState& cone : g.cones) {
          cone.TdX = apply_transpose(g, cone.subset, g.dX);
          cone.dZ = hermitize(cone.S * (cone.R - cone.TdX) * cone.S);
        }
      }
    };

    // predictor
    for (GroupState& g : groups)
      for (ConeState& cone : g.cones) cone.R = -cone.Y;
    newton_solve();
    double ap = kBigStep, ad = kBigStep;
    for (GroupState& g : groups)
      for (ConeState& cone : g.cones) {
        ap = std::min(ap, max_step(cone.Y, cone.TdX));
        ad = std::min(ad, max_step(cone.Z, cone.dZ));
        cone.TdX_aff = cone.TdX;
        cone.dZ_aff = cone.dZ;
      }
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double mu_aff = 0.0;
    for (GroupState& g : groups)
      for (ConeState& cone : g.cones)
        mu_aff += trace_product(cone.Y + ap * cone.TdX_aff,
                                cone.Z + ad * cone.dZ_aff);
    mu_aff = std::max(mu_aff / nu, 0.0);
    const double sigma =
        std::clamp(std::pow(mu_aff / std::max(mu, 1e-300), 3.0), 1e-8, 1.0);

    // corrector in the scaled space
    for (GroupState& g : groups) {
      for (ConeState& cone : g.cones) {
        const ComplexMatrix dyh =
            hermitize(cone.Gi * cone.TdX_aff * cone.Gi);
        const ComplexMatrix dzh = hermitize(cone.G * cone.dZ_aff * cone.G);
        const ComplexMatrix cross = dyh * dzh;
        ComplexMatrix rhs =
            -hermitize(cone.Vq * cone.Vw.cwiseAbs2().asDiagonal() *
                       cone.Vq.adjoint()) -
            hermitize(cross);
        rhs.diagonal().array() += sigma * mu;
        const ComplexMatrix u = lyapunov_solve(cone.Vq, cone.Vw, rhs);
        cone.R = hermitize(cone.G * u * cone.G);
      }
    }
    newton_solve();

    double sp = kBigStep, sd = kBigStep;
    for (GroupState& g : groups)
      for (ConeState& cone : g.cones) {
        sp = std::min(sp, max_step(cone.Y, cone.TdX));
        sd = std::min(sd, max_step(cone.Z, cone.dZ));
      }
    const double alpha = std::min(1.0, kStepFraction * sp);
    const double beta = std::min(1.0, kStepFraction * sd);

    for (GroupState& g : groups) {
      g.X = hermitize(g.X + alpha * g.dX);
      for (ConeState& cone : g.cones)
        cone.Z = hermitize(cone.Z + beta * cone.dZ);
    }
    y += beta * dy;

    if (alpha < 1e-5 && beta < 1e-5)
      ++stall;
    else
      stall = 0;
  }

  if (status == SolveStatus::max_iterations && !best_X.empty()) {
    y = best_y;
    res = best_res;
    pval = best_pval;
    dval = best_dval;
    std::size_t xi = 0, zi = 0;
    for (GroupState& g : groups) {
      g.X = best_X[xi++];
      for (ConeState& cone : g.cones) cone.Z = best_Z[zi++];
    }
  }

  if (settings.verbosity >= 1)
    std::fprintf(stderr,
                 "solve: %s after %d iterations, p %.12e d %.12e gap %.3e\n",
                 to_string(status).c_str(), iters_done, pval, dval,
                 res.duality_gap);

  return package(status, y, reduction.kept, iters_done, pval, dval, res);
}

// ---------------------------------------------------------------------------
// certificates and feasibility

double certified_upper_bound(const ConicProgram& program,
                             const Solution& solution) {
  program.validate();
  const int nb = static_cast<int>(program.blocks.size());
  if (program.trace_caps.size() != program.blocks.size())
    throw ValidationError("certified_upper_bound: trace caps missing");
  for (int b = 0; b < nb; ++b)
    if (!program.trace_caps[b])
      throw ValidationError("certified_upper_bound: block '" +
                            program.blocks[b].name + "' has no trace cap");
  if (solution.dual_multipliers.size() !=
      static_cast<int>(program.equalities.size()))
    throw ValidationError("certified_upper_bound: multiplier count mismatch");
  if (solution.dual_slacks.size() != program.blocks.size())
    throw ValidationError("certified_upper_bound: slack count mismatch");

  std::vector<int> tie_of_block(nb, -1);
  for (size_t t = 0; t < program.ties.size(); ++t)
    tie_of_block[program.ties[t].block] = static_cast<int>(t);

  double bound = 0.0;
  for (size_t k = 0; k < program.equalities.size(); ++k)
    bound += solution.dual_multipliers(static_cast<int>(k)) *
             program.equalities[k].rhs;

  // recomputed slack of every free block
  std::vector<ComplexMatrix> slack(nb);
  for (int b = 0; b < nb; ++b) {
    if (tie_of_block[b] >= 0) continue;
    slack[b] = ComplexMatrix::Zero(program.blocks[b].side(),
                                   program.blocks[b].side());
  }
  for (size_t k = 0; k < program.equalities.size(); ++k) {
    const double yk = solution.dual_multipliers(static_cast<int>(k));
    if (yk == 0.0) continue;
    for (const auto& [b, coeff] : program.equalities[k].terms)
      slack[b] += yk * coeff.dense();
  }
  for (const auto& [b, coeff] : program.objective) slack[b] -= coeff.dense();
  for (const TransposeTie& tie : program.ties) {
    const ComplexMatrix& z = solution.dual_slacks[tie.block];
    if (z.rows() != program.blocks[tie.block].side())
      throw ValidationError("certified_upper_bound: tied slack size mismatch");
    slack[tie.source] -=
        partial_transpose(
            HermitianOperator(program.blocks[tie.source].dims, hermitize(z)),
            tie.transposed)
            .matrix();
  }

  for (int b = 0; b < nb; ++b) {
    const double cap = *program.trace_caps[b];
    const ComplexMatrix& s =
        tie_of_block[b] >= 0 ? solution.dual_slacks[b] : slack[b];
    if (s.rows() != program.blocks[b].side())
      throw ValidationError("certified_upper_bound: slack size mismatch");
    const double lmin = min_eigenvalue(hermitize(s));
    bound += std::max(0.0, -lmin) * cap;
  }
  return bound;
}

FeasibilityReport check_feasibility(const ConicProgram& program,
                                    const std::vector<ComplexMatrix>& blocks) {
  program.validate();
  if (blocks.size() != program.blocks.size())
    throw ValidationError("check_feasibility: block count mismatch");
  for (size_t b = 0; b < blocks.size(); ++b)
    if (blocks[b].rows() != program.blocks[b].side() ||
        blocks[b].cols() != program.blocks[b].side())
      throw ValidationError("check_feasibility: block size mismatch at '" +
                            program.blocks[b].name + "'");

  FeasibilityReport report;
  report.min_block_eigenvalue = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < program.equalities.size(); ++k) {
    double lhs = 0.0;
    for (const auto& [b, coeff] : program.equalities[k].terms)
      lhs += coeff.inner(blocks[b]);
    report.max_equality_violation = std::max(
        report.max_equality_violation, std::abs(lhs - program.equalities[k].rhs));
  }
  for (size_t b = 0; b < blocks.size(); ++b)
    report.min_block_eigenvalue = std::min(
        report.min_block_eigenvalue, min_eigenvalue(hermitize(blocks[b])));
  for (const TransposeTie& tie : program.ties) {
    const ComplexMatrix expected =
        partial_transpose(HermitianOperator(program.blocks[tie.source].dims,
                                            hermitize(blocks[tie.source])),
                          tie.transposed)
            .matrix();
    const double dev =
        (blocks[tie.block] - expected).cwiseAbs().maxCoeff();
    report.max_tie_violation = std::max(report.max_tie_violation, dev);
  }
  return report;
}

// ---------------------------------------------------------------------------
// real embedding

namespace {

ComplexMatrix embed_real(const ComplexMatrix& m) {
  const int n = static_cast<int>(m.rows());
  ComplexMatrix out = ComplexMatrix::Zero(2 * n, 2 * n);
  out.topLeftCorner(n, n) = m.real().cast<Complex>();
  out.bottomRightCorner(n, n) = m.real().cast<Complex>();
  out.topRightCorner(n, n) = -m.imag().cast<Complex>();
  out.bottomLeftCorner(n, n) = m.imag().cast<Complex>();
  return out;
}

}  // namespace

ConicProgram real_embedding(const ConicProgram& program) {
  program.validate();
  ConicProgram out;
  for (const BlockSpec& blk : program.blocks) {
    std::vector<int> dims = {2};
    dims.insert(dims.end(), blk.dims.begin(), blk.dims.end());
    out.add_block(blk.name, std::move(dims));
  }
  for (const auto& [b, coeff] : program.objective)
    out.objective.push_back({b, CoeffMatrix(embed_real(coeff.dense()))});
  for (const Equality& eq : program.equalities) {
    Equality e2;
    e2.rhs = 2.0 * eq.rhs;
    for (const auto& [b, coeff] : eq.terms)
      e2.terms.push_back({b, CoeffMatrix(embed_real(coeff.dense()))});
    out.equalities.push_back(std::move(e2));
  }
  for (const TransposeTie& tie : program.ties) {
    std::vector<int> shifted;
    for (int k : tie.transposed.indices()) shifted.push_back(k + 1);
    out.ties.push_back({tie.block, tie.source, FactorSubset(shifted)});
  }
  for (size_t b = 0; b < program.trace_caps.size(); ++b)
    if (program.trace_caps[b]) out.trace_caps[b] = 2.0 * *program.trace_caps[b];
  return out;
}

}  // namespace fidbound
