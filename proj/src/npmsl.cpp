#include "npmix/npmsl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "npmix/kernels.hpp"
#include "npmix/rng.hpp"

namespace npmix {

BlockSpec BlockSpec::singleton(int d) {
  BlockSpec spec;
  spec.block_of_col.resize(d);
  for (int j = 0; j < d; ++j) spec.block_of_col[j] = j;
  spec.block_count = d;
  return spec;
}

BlockSpec BlockSpec::from_layout(const ConditionLayout& layout) {
  BlockSpec spec;
  int l = 0;
  for (const auto& [name, reps] : layout.conditions) {
    for (int r = 0; r < reps; ++r) spec.block_of_col.push_back(l);
    ++l;
  }
  spec.block_count = l;
  return spec;
}

void BlockSpec::validate(std::size_t d) const {
  if (block_of_col.size() != d) {
    throw Error(errc::config, "block spec covers " + std::to_string(block_of_col.size()) +
                                  " columns, data has " + std::to_string(d));
  }
  if (block_count < 1 || block_count > static_cast<int>(d)) {
    throw Error(errc::config, "block count must lie in 1..d");
  }
  std::vector<bool> seen(block_count, false);
  for (int b : block_of_col) {
    if (b < 0 || b >= block_count) {
      throw Error(errc::config, "block index out of range");
    }
    seen[b] = true;
  }
  for (int l = 0; l < block_count; ++l) {
    if (!seen[l]) {
      throw Error(errc::config, "block " + std::to_string(l + 1) + " has no columns");
    }
  }
}

namespace {

void require_finite(const Matrix<double>& data) {
  for (double v : data.data()) {
    if (!std::isfinite(v)) throw Error(errc::numeric, "data contains a non-finite value");
  }
}

std::vector<Grid> make_grids(const Matrix<double>& data, const BlockSpec& blocks,
                             Bandwidth h, int points) {
  std::vector<double> lo(blocks.block_count, std::numeric_limits<double>::infinity());
  std::vector<double> hi(blocks.block_count, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t j = 0; j < data.cols(); ++j) {
      const int l = blocks.block_of_col[j];
      lo[l] = std::min(lo[l], data(i, j));
      hi[l] = std::max(hi[l], data(i, j));
    }
  }
  std::vector<Grid> grids;
  grids.reserve(blocks.block_count);
  for (int l = 0; l < blocks.block_count; ++l) {
    grids.push_back(build_grid(lo[l], hi[l], h, points));
  }
  return grids;
}

}  // namespace

void set_densities(MixtureState& state, std::vector<std::vector<GridDensity>> dens) {
  const int m = state.m;
  const int L = static_cast<int>(state.grids.size());
  state.densities = std::move(dens);
  state.smoothed.assign(m, {});
  state.log_clamped.assign(m, {});
  state.floors.assign(m, std::vector<double>(L, 0.0));
  for (int k = 0; k < m; ++k) {
    state.smoothed[k].reserve(L);
    state.log_clamped[k].resize(L);
    for (int l = 0; l < L; ++l) {
      GridDensity& f = state.densities[k][l];
      const double mass = trapezoid(f.grid, f.values);
      if (!(mass > 0.0) || !std::isfinite(mass)) {
        throw Error(errc::numeric, "component " + std::to_string(k + 1) +
                                       " produced a degenerate density");
      }
      double fmax = 0.0;
      for (double& v : f.values) {
        v /= mass;
        fmax = std::max(fmax, v);
      }
      const double floor = state.floor_scale * fmax;
      state.floors[k][l] = floor;
      auto& logf = state.log_clamped[k][l];
      logf.resize(f.values.size());
      for (std::size_t g = 0; g < f.values.size(); ++g) {
        logf[g] = std::log(std::max(f.values[g], floor));
      }
      state.smoothed[k].push_back(nonlinear_smooth(f, state.h, floor));
    }
  }
}

namespace {

std::vector<kernels::GridSpan> make_cells(const MixtureState& state) {
  const int L = static_cast<int>(state.grids.size());
  std::vector<kernels::GridSpan> cells;
  cells.reserve(static_cast<std::size_t>(state.m) * L);
  for (int k = 0; k < state.m; ++k) {
    for (int l = 0; l < L; ++l) {
      const Grid& grid = state.grids[l];
      cells.push_back({grid.lo(), grid.hi(), grid.step(), grid.points(),
                       state.log_clamped[k][l].data(), std::log(state.floors[k][l])});
    }
  }
  return cells;
}

Matrix<double> score_table(const Matrix<double>& data, const MixtureState& state,
                           const BlockSpec& blocks, bool parallel) {
  const int n = static_cast<int>(data.rows());
  const int d = static_cast<int>(data.cols());
  std::vector<double> log_pi(state.m);
  for (int k = 0; k < state.m; ++k) {
    log_pi[k] = state.pi[k] > 0.0 ? std::log(state.pi[k])
                                  : -std::numeric_limits<double>::infinity();
  }
  const auto cells = make_cells(state);
  Matrix<double> scores(n, state.m);
  auto* fn = parallel ? kernels::log_score_table : kernels::log_score_table_serial;
  fn(data.data().data(), n, d, blocks.block_of_col.data(), cells.data(), state.m,
     blocks.block_count, state.h.h, log_pi.data(), scores.data().data());
  return scores;
}

double log_sum_exp(std::span<const double> v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - mx);
  return mx + std::log(sum);
}

PosteriorMatrix posterior_from_scores(const Matrix<double>& scores) {
  PosteriorMatrix post{Matrix<double>(scores.rows(), scores.cols())};
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const auto row = scores.row(i);
    const double lse = log_sum_exp(row);
    if (!std::isfinite(lse)) {
      throw Error(errc::numeric,
                  "posterior underflow at observation " + std::to_string(i + 1));
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < scores.cols(); ++k) {
      const double w = std::exp(row[k] - lse);
      post.w(i, k) = w;
      sum += w;
    }
    for (std::size_t k = 0; k < scores.cols(); ++k) post.w(i, k) /= sum;
  }
  return post;
}

double loglik_from_scores(const Matrix<double>& scores) {
  std::vector<double> per_row(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    per_row[i] = log_sum_exp(scores.row(i));
    if (!std::isfinite(per_row[i])) {
      throw Error(errc::numeric,
                  "likelihood underflow at observation " + std::to_string(i + 1));
    }
  }
  double total = 0.0;
  for (double v : per_row) total += v;
  return total;
}

void check_component_mass(const PosteriorMatrix& posterior) {
  for (std::size_t k = 0; k < posterior.w.cols(); ++k) {
    double mass = 0.0;
    for (std::size_t i = 0; i < posterior.w.rows(); ++i) mass += posterior.w(i, k);
    if (!(mass > 1e-12)) {
      throw Error(errc::empty_component,
                  "component " + std::to_string(k + 1) + " has no posterior mass");
    }
  }
}

}  // namespace

PosteriorMatrix e_step(const Matrix<double>& data, const MixtureState& state,
                       const BlockSpec& blocks) {
  return posterior_from_scores(score_table(data, state, blocks, true));
}

double smoothed_loglik(const Matrix<double>& data, const MixtureState& state,
                       const BlockSpec& blocks) {
  return loglik_from_scores(score_table(data, state, blocks, true));
}

namespace serial {

PosteriorMatrix e_step(const Matrix<double>& data, const MixtureState& state,
                       const BlockSpec& blocks) {
  return posterior_from_scores(score_table(data, state, blocks, false));
}

double smoothed_loglik(const Matrix<double>& data, const MixtureState& state,
                       const BlockSpec& blocks) {
  return loglik_from_scores(score_table(data, state, blocks, false));
}

}  // namespace serial

std::vector<double> m_step_pi(const PosteriorMatrix& posterior) {
  const std::size_t n = posterior.w.rows();
  const std::size_t m = posterior.w.cols();
  std::vector<double> pi(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += posterior.w(i, k);
    pi[k] = sum / static_cast<double>(n);
  }
  return pi;
}

std::vector<std::vector<GridDensity>> m_step_density(const Matrix<double>& data,
                                                     const PosteriorMatrix& posterior,
                                                     const BlockSpec& blocks, Bandwidth h,
                                                     const std::vector<Grid>& grids) {
  check_component_mass(posterior);
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  const int m = static_cast<int>(posterior.w.cols());
  const int L = blocks.block_count;

  // Pool the observations of each block once, column-major within the block
  // so singleton blocks reproduce the per-coordinate update ordering.
  std::vector<std::vector<double>> block_points(L);
  std::vector<std::vector<std::size_t>> block_rows(L);  // row index of each point
  for (std::size_t j = 0; j < d; ++j) {
    const int l = blocks.block_of_col[j];
    for (std::size_t i = 0; i < n; ++i) {
      block_points[l].push_back(data(i, j));
      block_rows[l].push_back(i);
    }
  }

  std::vector<std::vector<GridDensity>> dens(m);
  std::vector<double> weights;
  for (int k = 0; k < m; ++k) {
    dens[k].reserve(L);
    for (int l = 0; l < L; ++l) {
      weights.resize(block_points[l].size());
      for (std::size_t p = 0; p < weights.size(); ++p) {
        weights[p] = posterior.w(block_rows[l][p], k);
      }
      dens[k].push_back(weighted_kde(block_points[l], weights, h, grids[l]));
    }
  }
  return dens;
}

std::vector<std::vector<GridDensity>> m_step_density_unblocked(
    const Matrix<double>& data, const PosteriorMatrix& posterior, Bandwidth h,
    const std::vector<Grid>& grids) {
  check_component_mass(posterior);
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  const int m = static_cast<int>(posterior.w.cols());
  if (grids.size() != d) {
    throw Error(errc::config, "unblocked update needs one grid per coordinate");
  }

  std::vector<double> column(n), weights(n);
  std::vector<std::vector<GridDensity>> dens(m);
  for (int k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < n; ++i) weights[i] = posterior.w(i, k);
    dens[k].reserve(d);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < n; ++i) column[i] = data(i, j);
      dens[k].push_back(weighted_kde(column, weights, h, grids[j]));
    }
  }
  return dens;
}

namespace {

Matrix<double> initial_posterior(const Matrix<double>& data, int m, const FitConfig& config,
                                 Rng& rng) {
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  Matrix<double> w(n, m, 0.0);

  switch (config.init) {
    case InitStrategy::random_posterior: {
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = rng.dirichlet_uniform(m);
        for (int k = 0; k < m; ++k) w(i, k) = row[k];
      }
      return w;
    }
    case InitStrategy::external_labels: {
      if (config.external_labels.size() != n) {
        throw Error(errc::config, "external labels must cover every row");
      }
      for (std::size_t i = 0; i < n; ++i) {
        const int lab = config.external_labels[i];
        if (lab < 1 || lab > m) {
          throw Error(errc::config, "external label out of range at row " +
                                        std::to_string(i + 1));
        }
        w(i, lab - 1) = 1.0;
      }
      return w;
    }
    case InitStrategy::kmeans_like: {
      for (int attempt = 0; attempt < 10; ++attempt) {
        // Seed centers from m distinct rows.
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        for (int t = 0; t < m; ++t) {
          const std::size_t j = t + rng.below(n - t);
          std::swap(idx[t], idx[j]);
        }
        Matrix<double> centers(m, d);
        for (int k = 0; k < m; ++k) {
          for (std::size_t j = 0; j < d; ++j) centers(k, j) = data(idx[k], j);
        }

        std::vector<int> assign(n, 0);
        bool ok = true;
        for (int iter = 0; iter < 10 && ok; ++iter) {
          for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_dist = std::numeric_limits<double>::infinity();
            for (int k = 0; k < m; ++k) {
              double dist = 0.0;
              for (std::size_t j = 0; j < d; ++j) {
                const double dz = data(i, j) - centers(k, j);
                dist += dz * dz;
              }
              if (dist < best_dist) {
                best_dist = dist;
                best = k;
              }
            }
            assign[i] = best;
          }
          std::vector<std::size_t> sizes(m, 0);
          centers = Matrix<double>(m, d, 0.0);
          for (std::size_t i = 0; i < n; ++i) {
            ++sizes[assign[i]];
            for (std::size_t j = 0; j < d; ++j) centers(assign[i], j) += data(i, j);
          }
          for (int k = 0; k < m; ++k) {
            if (sizes[k] == 0) {
              ok = false;
              break;
            }
            for (std::size_t j = 0; j < d; ++j) {
              centers(k, j) /= static_cast<double>(sizes[k]);
            }
          }
        }
        if (!ok) continue;
        for (std::size_t i = 0; i < n; ++i) w(i, assign[i]) = 1.0;
        return w;
      }
      throw Error(errc::empty_component,
                  "initialization kept producing an empty component");
    }
  }
  throw Error(errc::config, "unknown init strategy");
}

}  // namespace

std::pair<MixtureState, PosteriorMatrix> init_state(const Matrix<double>& data, int m,
                                                    const BlockSpec& blocks,
                                                    const FitConfig& config) {
  require_finite(data);
  blocks.validate(data.cols());
  if (m < 1) throw Error(errc::config, "component count must be at least 1");
  if (static_cast<std::size_t>(m) > data.rows()) {
    throw Error(errc::infeasible, "cannot fit " + std::to_string(m) + " components to " +
                                      std::to_string(data.rows()) + " rows");
  }
  if (config.grid_points < 64) throw Error(errc::config, "grid needs at least 64 points");
  if (!(config.floor_scale > 0.0)) throw Error(errc::config, "floor scale must be positive");
  if (config.unblocked_updater && blocks.block_count != static_cast<int>(data.cols())) {
    throw Error(errc::config, "the unblocked updater requires singleton blocks");
  }

  MixtureState state;
  state.m = m;
  state.floor_scale = config.floor_scale;
  state.h = config.bandwidth > 0.0
                ? Bandwidth{config.bandwidth}
                : silverman_bandwidth(data.data(), data.rows() * data.cols());
  state.grids = make_grids(data, blocks, state.h, config.grid_points);

  Rng rng(config.seed);
  PosteriorMatrix posterior{initial_posterior(data, m, config, rng)};
  state.pi = m_step_pi(posterior);
  auto dens = config.unblocked_updater
                  ? m_step_density_unblocked(data, posterior, state.h, state.grids)
                  : m_step_density(data, posterior, blocks, state.h, state.grids);
  set_densities(state, std::move(dens));
  return {std::move(state), std::move(posterior)};
}

ClusteringResult fit(const Matrix<double>& data, int m, const BlockSpec& blocks,
                     const FitConfig& config) {
  ClusteringResult result;
  result.seed = config.seed;
  auto [state, posterior] = init_state(data, m, blocks, config);

  // One score table per parameter vector: it serves both the likelihood at
  // the current state and the next iteration's E-step.
  Matrix<double> scores = score_table(data, state, blocks, true);
  FitTrace& trace = result.trace;
  double prev = loglik_from_scores(scores);
  trace.records.push_back({0, prev, 0.0});
  trace.status = FitTrace::Status::max_iters;

  for (int t = 1; t <= config.max_iters; ++t) {
    try {
      posterior = posterior_from_scores(scores);
      std::vector<double> pi = m_step_pi(posterior);
      auto dens = config.unblocked_updater
                      ? m_step_density_unblocked(data, posterior, state.h, state.grids)
                      : m_step_density(data, posterior, blocks, state.h, state.grids);
      double dpi = 0.0;
      for (int k = 0; k < m; ++k) dpi = std::max(dpi, std::abs(pi[k] - state.pi[k]));
      state.pi = std::move(pi);
      set_densities(state, std::move(dens));

      scores = score_table(data, state, blocks, true);
      const double cur = loglik_from_scores(scores);
      trace.records.push_back({t, cur, dpi});
      if (std::abs(cur - prev) / (1.0 + std::abs(prev)) < config.tol) {
        trace.status = FitTrace::Status::converged;
        prev = cur;
        break;
      }
      prev = cur;
    } catch (const Error& e) {
      trace.status = FitTrace::Status::failed;
      throw Error(e.code(), "iteration " + std::to_string(t) + ": " + e.what());
    }
  }

  result.posterior = posterior_from_scores(scores);
  result.labels.resize(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    int best = 0;
    for (int k = 1; k < m; ++k) {
      if (result.posterior.w(i, k) > result.posterior.w(i, best)) best = k;
    }
    result.labels[i] = best + 1;
  }
  result.state = std::move(state);
  return result;
}

}  // namespace npmix
