#ifndef NPMIX_NPMSL_HPP
#define NPMIX_NPMSL_HPP

#include <cstdint>
#include <vector>

#include "npmix/ingest.hpp"
#include "npmix/kde.hpp"
#include "npmix/matrix.hpp"

namespace npmix {

/// Assignment of each data column to a block of identically distributed
/// coordinates. Block indices are 0-based internally.
struct BlockSpec {
  std::vector<int> block_of_col;
  int block_count = 0;

  static BlockSpec singleton(int d);
  static BlockSpec from_layout(const ConditionLayout& layout);
  void validate(std::size_t d) const;
};

/// Responsibilities: w(i, k) = posterior probability that row i belongs to
/// component k. Rows sum to 1.
struct PosteriorMatrix {
  Matrix<double> w;
};

/// Current mixture estimate: mixing proportions plus one density per
/// (component, block) cell, with the log-smoothed form cached.
struct MixtureState {
  int m = 0;
  std::vector<double> pi;
  std::vector<Grid> grids;                               // one per block
  std::vector<std::vector<GridDensity>> densities;       // [k][l]
  std::vector<std::vector<GridFunction>> smoothed;       // [k][l], values of N f
  std::vector<std::vector<std::vector<double>>> log_clamped;  // [k][l] log max(f, floor)
  std::vector<std::vector<double>> floors;               // [k][l]
  Bandwidth h;
  double floor_scale = 0.0;
};

struct FitTrace {
  struct Record {
    int iteration;
    double loglik;
    double max_dpi;
  };
  enum class Status { converged, max_iters, failed };
  std::vector<Record> records;
  Status status = Status::failed;
};

struct ClusteringResult {
  MixtureState state;
  PosteriorMatrix posterior;
  std::vector<int> labels;  // 1-based component labels, argmax with lowest-index ties
  FitTrace trace;
  std::uint64_t seed = 0;
};

enum class InitStrategy { random_posterior, kmeans_like, external_labels };

struct FitConfig {
  int max_iters = 500;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  InitStrategy init = InitStrategy::kmeans_like;
  int grid_points = 512;
  // Density values below floor_scale * max(f) are clamped before logs.
  double floor_scale = 1e-30;
  // <= 0 means: pick the pooled rule-of-thumb bandwidth from the data.
  double bandwidth = 0.0;
  // Route the density update through the per-coordinate (unblocked) kernel;
  // valid only with singleton blocks. Kept as an independently coded path so
  // the block machinery can be checked against it.
  bool unblocked_updater = false;
  // Labels for InitStrategy::external_labels, 1-based, length n.
  std::vector<int> external_labels;
};

/// Build a valid initial state from a strategy-dependent posterior, applying
/// one full M-step. Returns the state and the posterior it was built from.
std::pair<MixtureState, PosteriorMatrix> init_state(const Matrix<double>& data, int m,
                                                    const BlockSpec& blocks,
                                                    const FitConfig& config);

/// Responsibilities under the current state, computed in log space with
/// log-sum-exp row normalization.
PosteriorMatrix e_step(const Matrix<double>& data, const MixtureState& state,
                       const BlockSpec& blocks);

/// Mixing-proportion update: column means of the posterior.
std::vector<double> m_step_pi(const PosteriorMatrix& posterior);

/// Density update: for each (component, block) cell, the weighted KDE over
/// the pooled observations of that block with per-row posterior weights.
std::vector<std::vector<GridDensity>> m_step_density(const Matrix<double>& data,
                                                     const PosteriorMatrix& posterior,
                                                     const BlockSpec& blocks, Bandwidth h,
                                                     const std::vector<Grid>& grids);

/// Per-coordinate density update, independent of the block machinery.
std::vector<std::vector<GridDensity>> m_step_density_unblocked(
    const Matrix<double>& data, const PosteriorMatrix& posterior, Bandwidth h,
    const std::vector<Grid>& grids);

/// Empirical smoothed log-likelihood sum_i log sum_k pi_k exp(sum_j log N f).
double smoothed_loglik(const Matrix<double>& data, const MixtureState& state,
                       const BlockSpec& blocks);

/// Install freshly updated cell densities into a state: each density is
/// projected onto the grid simplex (trapezoid integral exactly 1, which makes
/// the update the exact maximizer of the minorizing functional), and the
/// clamped-log and smoothed caches are rebuilt.
void set_densities(MixtureState& state, std::vector<std::vector<GridDensity>> densities);

/// Full fit loop: E-step, proportion update, density update, cache refresh,
/// until the relative change of the smoothed log-likelihood drops below tol.
ClusteringResult fit(const Matrix<double>& data, int m, const BlockSpec& blocks,
                     const FitConfig& config);

namespace serial {
/// Reference implementations of the two parallel fit-loop stages, kept for
/// equivalence tests and the benchmark.
PosteriorMatrix e_step(const Matrix<double>& data, const MixtureState& state,
                       const BlockSpec& blocks);
double smoothed_loglik(const Matrix<double>& data, const MixtureState& state,
                       const BlockSpec& blocks);
}  // namespace serial

}  // namespace npmix

#endif
