#pragma once

// Motion-primitive dictionary learning by augmented semi-nonnegative sparse
// coding:
//
//   min_{D,S} ||Z - D S||_F^2 + lambda * sum_i ||s_i||_1
//   s.t. d_k in Q, s_ki >= 0
//
// Z holds one grid-encoded trajectory per column ([vx; vy; a], length 3MN).
// Q is the per-cell set {|vx| <= a, |vy| <= a, 0 <= a <= 1}, which keeps
// atoms trajectory-like: velocity mass only where the atom is active.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "casnsc/trajkit.hpp"

namespace casnsc::dict {

/// Zero-based atom index. Human-facing output prints id + 1.
using AtomId = std::size_t;

struct SparseCodingProblem {
  Eigen::MatrixXd Z;        // p x n
  double lambda = 0.05;
  std::size_t k_max = 8;
  std::size_t max_iters = 300;
  double tol = 1e-7;        // relative objective decrease
  std::uint64_t seed = 0;

  void validate() const;
};

struct DictionaryModel {
  Eigen::MatrixXd D;  // p x K
  Eigen::MatrixXd S;  // K x n

  std::size_t atoms() const { return static_cast<std::size_t>(D.cols()); }
  std::size_t cells() const { return static_cast<std::size_t>(D.rows()) / 3; }
  /// Activeness a_k(cell) of an atom.
  double activeness(AtomId k, traj::CellId cell) const {
    return D(static_cast<Eigen::Index>(2 * cells() + cell),
             static_cast<Eigen::Index>(k));
  }
};

struct SolverStats {
  /// Objective after initialization and after every accepted half-step
  /// (S-update, then D-update). Non-increasing by construction.
  std::vector<double> objective_history;
  std::size_t iterations = 0;
  std::size_t rejected_d_steps = 0;
  std::size_t rejected_s_steps = 0;
  std::size_t pruned_atoms = 0;
  bool converged = false;
};

/// ||Z - D S||_F^2 + lambda * sum |S|.
double objective(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& D,
                 const Eigen::MatrixXd& S, double lambda);

/// Euclidean projection of one atom onto Q, cell by cell.
Eigen::VectorXd project_to_Q(const Eigen::VectorXd& atom);

/// Per-cell projection of (vx, vy, a) onto {|vx|<=a, |vy|<=a, 0<=a<=1}.
struct CellTriple {
  double vx, vy, a;
};
CellTriple project_cell(CellTriple v);

/// Nonnegative lasso for one column by cyclic coordinate descent:
/// min ||z - D s||^2 + lambda * sum s, s >= 0. `s` is the warm start.
void solve_codes(const Eigen::MatrixXd& gram, const Eigen::VectorXd& dtz,
                 double lambda, Eigen::Ref<Eigen::VectorXd> s,
                 std::size_t max_sweeps = 200, double tol = 1e-12);

/// Block coordinate descent: nonnegative-lasso S-update, then projected
/// gradient D-update with a backtracking line search that only accepts
/// non-increasing steps. Atoms that end up empty or unused are pruned.
DictionaryModel learn_dictionary(const SparseCodingProblem& problem,
                                 SolverStats* stats = nullptr);

struct SegmentLabeling {
  /// Label of every entry of the cell order that was passed in.
  std::vector<AtomId> cell_labels;
  /// cell_labels with consecutive duplicates collapsed.
  std::vector<AtomId> runs;
};

/// Labels each visited cell with argmax_k s_k * a_k(cell) (ties to the
/// lowest id). Cells where every score is zero take the trajectory's
/// dominant atom argmax_k s_k.
SegmentLabeling assign_segments(const Eigen::VectorXd& codes,
                                std::span<const traj::CellId> cell_order,
                                const DictionaryModel& model);

class TransitionMatrix {
 public:
  TransitionMatrix() = default;
  explicit TransitionMatrix(std::size_t atoms)
      : atoms_(atoms), counts_(atoms * atoms, 0) {}

  std::size_t atoms() const { return atoms_; }
  std::uint64_t operator()(AtomId from, AtomId to) const {
    return counts_.at(from * atoms_ + to);
  }
  std::uint64_t& operator()(AtomId from, AtomId to) {
    return counts_.at(from * atoms_ + to);
  }
  std::uint64_t total() const;
  /// Successors j with T(from, j) > 0, ascending.
  std::vector<AtomId> successors(AtomId from) const;
  bool is_diagonal() const;

  bool operator==(const TransitionMatrix&) const = default;

 private:
  std::size_t atoms_ = 0;
  std::vector<std::uint64_t> counts_;
};

/// T(i,j) counts trajectories whose runs contain the adjacent pair i -> j;
/// a single-run trajectory [i] counts towards T(i,i).
TransitionMatrix build_transition_matrix(
    std::span<const SegmentLabeling> labels, std::size_t atoms);

}  // namespace casnsc::dict
