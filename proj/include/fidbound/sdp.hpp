#pragma once

#include "fidbound/linalg.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fidbound {

struct SolverSettings {
  double feasibility_tolerance = 1e-8;
  double gap_tolerance = 1e-8;
  int max_iterations = 200;
  int verbosity = 0;  // 0 silent, 1 summary line, 2 per-iteration trace
};

// Sparse Hermitian coefficient matrix acting on one block.  Entries are
// normalized to a full sorted list (both triangles present).
class CoeffMatrix {
 public:
  struct Entry {
    int row;
    int col;
    Complex value;
  };

  // Entries may be given in any order and either triangle; values on
  // mirrored positions must be conjugates within 1e-12 of their magnitude.
  CoeffMatrix(int side, std::vector<Entry> entries);
  explicit CoeffMatrix(const ComplexMatrix& dense);

  int side() const { return side_; }
  const std::vector<Entry>& entries() const { return entries_; }
  ComplexMatrix dense() const;

  // Re tr(A X)
  double inner(const ComplexMatrix& x) const;

 private:
  int side_;
  std::vector<Entry> entries_;
};

struct BlockSpec {
  std::string name;
  std::vector<int> dims;
  int side() const;
};

struct Equality {
  // terms: (block index, coefficient); sum of Re tr(A_b X_b) = rhs
  std::vector<std::pair<int, CoeffMatrix>> terms;
  double rhs = 0.0;
};

// Declares that `block` equals the partial transpose of `source` over the
// given factor subset.  Tied blocks are solver outputs, not free variables:
// they may not carry objective terms or appear in equalities.
struct TransposeTie {
  int block;
  int source;
  FactorSubset transposed;
};

// Maximize sum_b Re tr(C_b X_b) over X_b >= 0 subject to the equalities,
// with every tied block positive semidefinite as well.
struct ConicProgram {
  std::vector<BlockSpec> blocks;
  std::vector<std::pair<int, CoeffMatrix>> objective;
  std::vector<Equality> equalities;
  std::vector<TransposeTie> ties;
  // Exact trace of each block on the feasible set, when the equalities imply
  // one; required by certified_upper_bound.
  std::vector<std::optional<double>> trace_caps;

  int add_block(std::string name, std::vector<int> dims);
  int block_index(const std::string& name) const;  // -1 when absent
  void validate() const;
};

enum class SolveStatus {
  optimal,
  max_iterations,
  infeasible_detected,
  unbounded_detected,
};

std::string to_string(SolveStatus status);

struct Residuals {
  double primal_feasibility = 0.0;  // ||b - A(x)|| / (1 + ||b||)
  double dual_feasibility = 0.0;    // ||A*(y) - C - Z|| / (1 + ||C||)
  double duality_gap = 0.0;         // |p - d| / (1 + |p| + |d|)
};

struct Solution {
  SolveStatus status = SolveStatus::max_iterations;
  double primal_value = 0.0;
  double dual_value = 0.0;
  // One matrix per program block; tied blocks are materialized from their
  // source, so they satisfy their tie exactly.
  std::vector<ComplexMatrix> primal_blocks;
  // One multiplier per original equality; rows dropped by preprocessing
  // carry zero.
  RealVector dual_multipliers;
  // One Hermitian slack per program block.  The slack of a tied block is the
  // multiplier of its positivity constraint; together with the multipliers
  // these form the dual certificate that certified_upper_bound repairs.
  std::vector<ComplexMatrix> dual_slacks;
  Residuals residuals;
  int iterations = 0;
};

// Infeasible-start primal-dual interior-point method with Nesterov-Todd
// scaling and a Mehrotra predictor-corrector step, operating natively on
// complex Hermitian blocks.  Deterministic: no randomized choices anywhere.
Solution solve(const ConicProgram& program, const SolverSettings& settings = {});

// Rigorous upper bound on the primal optimum from any multiplier vector and
// tied-cone slacks: recompute each free block's slack S_b = A_b*(y) - C_b -
// sum of transposed tie slacks, then
//   bound = b.y + sum_b max(0, -lambda_min(S_b)) * cap_b
// over free and tied blocks alike.  Valid whatever the solve status, since
// every feasible X has tr(X_b) = cap_b and X_b >= 0.  Throws when a block
// has no trace cap.
double certified_upper_bound(const ConicProgram& program, const Solution& solution);

struct FeasibilityReport {
  double max_equality_violation = 0.0;
  double min_block_eigenvalue = 0.0;
  double max_tie_violation = 0.0;  // largest entrywise deviation from a tie
};

// Measures how far candidate blocks (one per program block) are from the
// feasible set.  Pure measurement, no repair.
FeasibilityReport check_feasibility(const ConicProgram& program,
                                    const std::vector<ComplexMatrix>& blocks);

// Real-symmetric doubling of every block: X becomes
// [[Re X, -Im X], [Im X, Re X]] with a leading dimension-2 factor, and the
// embedded optimum is exactly twice the original.  The solver does not need
// this form; it exists so the equivalence stays testable.
ConicProgram real_embedding(const ConicProgram& program);

}  // namespace fidbound
