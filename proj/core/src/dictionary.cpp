#include "casnsc/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <utility>

#include <Eigen/Eigenvalues>

#include "casnsc/errors.hpp"

namespace casnsc::dict {

void SparseCodingProblem::validate() const {
  if (Z.rows() == 0 || Z.cols() == 0) {
    throw InvalidInput("sparse coding needs a non-empty data matrix");
  }
  if (Z.rows() % 3 != 0) {
    throw InvalidInput("data columns must have length 3*M*N");
  }
  if (!Z.allFinite()) throw InvalidInput("data matrix has non-finite entries");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidInput("lambda must be finite and >= 0");
  }
  if (k_max < 1) throw InvalidInput("k_max must be >= 1");
  if (!(tol > 0.0)) throw InvalidInput("tol must be > 0");
}

double objective(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& D,
                 const Eigen::MatrixXd& S, double lambda) {
  return (Z - D * S).squaredNorm() + lambda * S.cwiseAbs().sum();
}

CellTriple project_cell(CellTriple v) {
  const double u = std::abs(v.vx);
  const double w = std::abs(v.vy);
  const double hi = std::max(u, w);
  const double lo = std::min(u, w);

  // g(a) = (a - a0)^2 + sum_{c in {u,w}} max(c - a, 0)^2 is convex with a
  // strictly increasing derivative; find its root region by region.
  double a = 0.0;
  if (v.a >= hi) {
    a = v.a;
  } else if (const double mid = 0.5 * (v.a + hi); mid >= lo) {
    a = mid;
  } else {
    a = (v.a + u + w) / 3.0;
  }
  a = std::clamp(a, 0.0, 1.0);
  return {std::copysign(std::min(u, a), v.vx), std::copysign(std::min(w, a), v.vy),
          a};
}

Eigen::VectorXd project_to_Q(const Eigen::VectorXd& atom) {
  if (atom.size() % 3 != 0) {
    throw InvalidInput("atom length must be a multiple of 3");
  }
  const Eigen::Index cells = atom.size() / 3;
  Eigen::VectorXd out(atom.size());
  for (Eigen::Index c = 0; c < cells; ++c) {
    const auto p = project_cell({atom[c], atom[cells + c], atom[2 * cells + c]});
    out[c] = p.vx;
    out[cells + c] = p.vy;
    out[2 * cells + c] = p.a;
  }
  return out;
}

void solve_codes(const Eigen::MatrixXd& gram, const Eigen::VectorXd& dtz,
                 double lambda, Eigen::Ref<Eigen::VectorXd> s,
                 std::size_t max_sweeps, double tol) {
  const Eigen::Index k = gram.rows();
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_delta = 0.0;
    double max_abs = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double gjj = gram(j, j);
      double next = 0.0;
      if (gjj > 0.0) {
        const double r = dtz[j] - gram.row(j).dot(s) + gjj * s[j];
        next = std::max(0.0, (r - 0.5 * lambda) / gjj);
      }
      max_delta = std::max(max_delta, std::abs(next - s[j]));
      s[j] = next;
      max_abs = std::max(max_abs, next);
    }
    if (max_delta <= tol * (1.0 + max_abs)) break;
  }
}

namespace {

Eigen::MatrixXd project_columns(const Eigen::MatrixXd& D) {
  Eigen::MatrixXd out(D.rows(), D.cols());
  for (Eigen::Index k = 0; k < D.cols(); ++k) out.col(k) = project_to_Q(D.col(k));
  return out;
}

// D^2-weighted random choice of distinct training columns (k-means++ style):
// the first uniformly, each next one with probability proportional to its
// squared distance to the nearest column already chosen. Stops early once
// every remaining column duplicates a chosen one. Draws use the raw engine
// output so results do not depend on the standard library.
std::vector<Eigen::Index> seed_columns(const Eigen::MatrixXd& Z, std::size_t k,
                                       std::uint64_t seed) {
  const Eigen::Index n = Z.cols();
  std::mt19937_64 rng(seed);
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  std::vector<Eigen::Index> chosen;
  chosen.push_back(static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n)));
  Eigen::VectorXd d2 = (Z.colwise() - Z.col(chosen[0])).colwise().squaredNorm().transpose();
  while (chosen.size() < k) {
    const double total = d2.sum();
    if (!(total > 0.0)) break;
    double r = uniform() * total;
    Eigen::Index pick = n - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      pick = i;
      if (r < d2[i]) break;
      r -= d2[i];
    }
    chosen.push_back(pick);
    d2 = d2.cwiseMin((Z.colwise() - Z.col(pick)).colwise().squaredNorm().transpose());
  }
  return chosen;
}

}  // namespace

DictionaryModel learn_dictionary(const SparseCodingProblem& problem,
                                 SolverStats* stats) {
  problem.validate();
  SolverStats local;
  SolverStats& st = stats ? *stats : local;
  st = SolverStats{};

  const auto& Z = problem.Z;
  const Eigen::Index p = Z.rows();
  const Eigen::Index n = Z.cols();
  const auto seeds =
      seed_columns(Z, std::min<std::size_t>(problem.k_max, static_cast<std::size_t>(n)),
                   problem.seed);
  const std::size_t k0 = seeds.size();
  const auto kk = static_cast<Eigen::Index>(k0);

  Eigen::MatrixXd D(p, kk);
  for (Eigen::Index k = 0; k < kk; ++k) {
    D.col(k) = project_to_Q(Z.col(seeds[static_cast<std::size_t>(k)]));
  }
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(kk, n);

  double f = objective(Z, D, S, problem.lambda);
  st.objective_history.push_back(f);

  for (std::size_t it = 0; it < problem.max_iters; ++it) {
    const double f_start = f;

    // Codes: columns are independent given D.
    const Eigen::MatrixXd gram = D.transpose() * D;
    const Eigen::MatrixXd dtz = D.transpose() * Z;
    Eigen::MatrixXd S_next = S;
    for (Eigen::Index i = 0; i < n; ++i) {
      solve_codes(gram, dtz.col(i), problem.lambda, S_next.col(i));
    }
    const double f_s = objective(Z, D, S_next, problem.lambda);
    if (f_s <= f) {
      S = std::move(S_next);
      f = f_s;
      st.objective_history.push_back(f);
    } else {
      ++st.rejected_s_steps;
    }

    // Atoms: projected gradient on ||Z - DS||^2 with backtracking.
    const Eigen::MatrixXd sst = S * S.transpose();
    const double lmax =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sst, Eigen::EigenvaluesOnly)
            .eigenvalues()
            .maxCoeff();
    if (lmax > 0.0) {
      const Eigen::MatrixXd grad = 2.0 * (D * sst - Z * S.transpose());
      double eta = 1.0 / (2.0 * lmax);
      bool accepted = false;
      for (int tries = 0; tries < 40; ++tries, eta *= 0.5) {
        Eigen::MatrixXd D_next = project_columns(D - eta * grad);
        const double f_d = objective(Z, D_next, S, problem.lambda);
        if (f_d <= f) {
          D = std::move(D_next);
          f = f_d;
          accepted = true;
          break;
        }
      }
      if (accepted) {
        st.objective_history.push_back(f);
      } else {
        ++st.rejected_d_steps;
      }
    }

    ++st.iterations;
    const double rel = (f_start - f) / std::max(f_start, std::numeric_limits<double>::min());
    if (rel < problem.tol) {
      st.converged = true;
      break;
    }
  }

  // Prune atoms that vanished or are never used.
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < kk; ++k) {
    const bool used = S.row(k).maxCoeff() >= 1e-8;
    const bool nonzero = D.col(k).norm() >= 1e-8;
    if (used && nonzero) keep.push_back(k);
  }
  st.pruned_atoms = k0 - keep.size();

  DictionaryModel model;
  model.D.resize(p, static_cast<Eigen::Index>(keep.size()));
  model.S.resize(static_cast<Eigen::Index>(keep.size()), n);
  for (std::size_t j = 0; j < keep.size(); ++j) {
    model.D.col(static_cast<Eigen::Index>(j)) = D.col(keep[j]);
    model.S.row(static_cast<Eigen::Index>(j)) = S.row(keep[j]);
  }
  return model;
}

SegmentLabeling assign_segments(const Eigen::VectorXd& codes,
                                std::span<const traj::CellId> cell_order,
                                const DictionaryModel& model) {
  const std::size_t k = model.atoms();
  if (k == 0) throw ModelError("dictionary has no atoms");
  if (static_cast<std::size_t>(codes.size()) != k) {
    throw InvalidInput("code vector length does not match the atom count");
  }

  AtomId dominant = 0;
  for (AtomId j = 1; j < k; ++j) {
    if (codes[static_cast<Eigen::Index>(j)] > codes[static_cast<Eigen::Index>(dominant)]) {
      dominant = j;
    }
  }

  SegmentLabeling out;
  out.cell_labels.reserve(cell_order.size());
  for (traj::CellId cell : cell_order) {
    if (cell >= model.cells()) throw InvalidInput("cell id outside the dictionary grid");
    AtomId best = 0;
    double best_score = 0.0;
    for (AtomId j = 0; j < k; ++j) {
      const double score = codes[static_cast<Eigen::Index>(j)] * model.activeness(j, cell);
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    out.cell_labels.push_back(best_score > 0.0 ? best : dominant);
  }
  for (AtomId label : out.cell_labels) {
    if (out.runs.empty() || out.runs.back() != label) out.runs.push_back(label);
  }
  return out;
}

std::uint64_t TransitionMatrix::total() const {
  std::uint64_t sum = 0;
  for (auto c : counts_) sum += c;
  return sum;
}

std::vector<AtomId> TransitionMatrix::successors(AtomId from) const {
  std::vector<AtomId> out;
  for (AtomId j = 0; j < atoms_; ++j) {
    if ((*this)(from, j) > 0) out.push_back(j);
  }
  return out;
}

bool TransitionMatrix::is_diagonal() const {
  for (AtomId i = 0; i < atoms_; ++i) {
    for (AtomId j = 0; j < atoms_; ++j) {
      if (i != j && (*this)(i, j) != 0) return false;
    }
  }
  return true;
}

TransitionMatrix build_transition_matrix(std::span<const SegmentLabeling> labels,
                                         std::size_t atoms) {
  if (labels.empty()) throw InvalidInput("no segment labelings supplied");
  TransitionMatrix T(atoms);
  for (const auto& lab : labels) {
    if (lab.runs.empty()) continue;
    for (AtomId r : lab.runs) {
      if (r >= atoms) throw InvalidInput("segment label exceeds the atom count");
    }
    if (lab.runs.size() == 1) {
      ++T(lab.runs[0], lab.runs[0]);
      continue;
    }
    std::set<std::pair<AtomId, AtomId>> seen;
    for (std::size_t r = 0; r + 1 < lab.runs.size(); ++r) {
      seen.emplace(lab.runs[r], lab.runs[r + 1]);
    }
    for (const auto& [i, j] : seen) ++T(i, j);
  }
  return T;
}

}  // namespace casnsc::dict
