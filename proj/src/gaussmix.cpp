#include "npmix/gaussmix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "npmix/error.hpp"
#include "npmix/rng.hpp"

namespace npmix {

namespace {

constexpr double log_2pi = 1.8378770664093454835606594;

struct RowStats {
  std::vector<double> s1;  // per-row sums
  std::vector<double> s2;  // per-row sums of squares
  double pooled_mean = 0.0;
  double pooled_var = 0.0;  // population variance over all cells
};

RowStats row_stats(const Matrix<double>& data) {
  RowStats st;
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  st.s1.resize(n);
  st.s2.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double a = 0.0, b = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double y = data(i, j);
      a += y;
      b += y * y;
    }
    st.s1[i] = a;
    st.s2[i] = b;
    total += a;
  }
  const double cells = static_cast<double>(n * d);
  st.pooled_mean = total / cells;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double dz = data(i, j) - st.pooled_mean;
      ss += dz * dz;
    }
  }
  st.pooled_var = ss / cells;
  return st;
}

void validate_inputs(const Matrix<double>& data, int m) {
  if (m < 1) throw Error(errc::config, "component count must be at least 1");
  if (data.rows() * data.cols() <= 2 * static_cast<std::size_t>(m)) {
    throw Error(errc::infeasible, "need more than 2m cells to fit m components");
  }
}

// EM driver shared by every entry point. Stops early on convergence unless
// exact_iters is set (burn-in mode).
RepNormModel run_em(const Matrix<double>& data, std::vector<double> pi,
                    std::vector<double> mu, std::vector<double> sigma2,
                    const EmConfig& config, bool exact_iters, int iters) {
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  const int m = static_cast<int>(pi.size());
  const RowStats st = row_stats(data);
  const double var_floor = 1e-8 * st.pooled_var;

  RepNormModel model;
  model.m = m;
  model.posterior = Matrix<double>(n, m);
  std::vector<int> floor_streak(m, 0);
  double prev = -std::numeric_limits<double>::infinity();
  const int limit = exact_iters ? iters : config.max_iters;

  for (int t = 1; t <= limit; ++t) {
    // E-step in log space using per-row sufficient statistics.
    std::vector<double> log_norm(m), inv2s(m);
    for (int k = 0; k < m; ++k) {
      log_norm[k] = (pi[k] > 0.0 ? std::log(pi[k]) : -std::numeric_limits<double>::infinity()) -
                    0.5 * static_cast<double>(d) * (log_2pi + std::log(sigma2[k]));
      inv2s[k] = 0.5 / sigma2[k];
    }
    double loglik = 0.0;
    std::vector<double> score(m);
    for (std::size_t i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < m; ++k) {
        const double q = st.s2[i] - 2.0 * mu[k] * st.s1[i] +
                         static_cast<double>(d) * mu[k] * mu[k];
        score[k] = log_norm[k] - q * inv2s[k];
        mx = std::max(mx, score[k]);
      }
      double sum = 0.0;
      for (int k = 0; k < m; ++k) sum += std::exp(score[k] - mx);
      const double lse = mx + std::log(sum);
      loglik += lse;
      for (int k = 0; k < m; ++k) model.posterior(i, k) = std::exp(score[k] - lse);
    }

    // M-step.
    for (int k = 0; k < m; ++k) {
      double wk = 0.0, wy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        wk += model.posterior(i, k);
        wy += model.posterior(i, k) * st.s1[i];
      }
      if (!(wk > 1e-300)) {
        throw Error(errc::singular,
                    "component " + std::to_string(k + 1) + " lost all posterior mass");
      }
      const double mu_new = wy / (static_cast<double>(d) * wk);
      double wss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double q = st.s2[i] - 2.0 * mu_new * st.s1[i] +
                         static_cast<double>(d) * mu_new * mu_new;
        wss += model.posterior(i, k) * q;
      }
      double s2_new = wss / (static_cast<double>(d) * wk);
      if (s2_new < var_floor) {
        s2_new = var_floor;
        if (++floor_streak[k] >= 3) {
          throw Error(errc::singular, "variance of component " + std::to_string(k + 1) +
                                          " collapsed onto the floor");
        }
      } else {
        floor_streak[k] = 0;
      }
      mu[k] = mu_new;
      sigma2[k] = s2_new;
      pi[k] = wk / static_cast<double>(n);
    }

    model.loglik = loglik;
    model.loglik_trace.push_back(loglik);
    model.iterations = t;
    if (!exact_iters && t > 1 &&
        std::abs(loglik - prev) / (1.0 + std::abs(prev)) < config.tol) {
      model.converged = true;
      break;
    }
    prev = loglik;
  }

  model.pi = std::move(pi);
  model.mu = std::move(mu);
  model.sigma2 = std::move(sigma2);

  // Recompute the posterior and likelihood so they match the final parameters.
  {
    std::vector<double> log_norm(m), inv2s(m);
    for (int k = 0; k < m; ++k) {
      log_norm[k] = (model.pi[k] > 0.0 ? std::log(model.pi[k])
                                       : -std::numeric_limits<double>::infinity()) -
                    0.5 * static_cast<double>(d) * (log_2pi + std::log(model.sigma2[k]));
      inv2s[k] = 0.5 / model.sigma2[k];
    }
    double loglik = 0.0;
    std::vector<double> score(m);
    for (std::size_t i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < m; ++k) {
        const double q = st.s2[i] - 2.0 * model.mu[k] * st.s1[i] +
                         static_cast<double>(d) * model.mu[k] * model.mu[k];
        score[k] = log_norm[k] - q * inv2s[k];
        mx = std::max(mx, score[k]);
      }
      double sum = 0.0;
      for (int k = 0; k < m; ++k) sum += std::exp(score[k] - mx);
      const double lse = mx + std::log(sum);
      loglik += lse;
      for (int k = 0; k < m; ++k) model.posterior(i, k) = std::exp(score[k] - lse);
    }
    model.loglik = loglik;
    model.loglik_trace.push_back(loglik);
  }
  return model;
}

struct InitDraw {
  std::vector<double> pi;
  std::vector<double> mu;
  std::vector<double> sigma2;
};

// Binned random start: sort the pooled values into m equal-count bins, draw
// each mean from a normal centered on its bin, and each precision as a
// standard-exponential multiple of the bin precision.
InitDraw random_init(const Matrix<double>& data, int m, Rng& rng, double pooled_var) {
  std::vector<double> pooled(data.data());
  std::sort(pooled.begin(), pooled.end());
  const std::size_t total = pooled.size();

  InitDraw draw;
  draw.mu.resize(m);
  draw.sigma2.resize(m);
  for (int k = 0; k < m; ++k) {
    const std::size_t begin = total * k / m;
    const std::size_t end = total * (k + 1) / m;
    double mean = 0.0;
    for (std::size_t t = begin; t < end; ++t) mean += pooled[t];
    mean /= static_cast<double>(end - begin);
    double var = 0.0;
    for (std::size_t t = begin; t < end; ++t) {
      var += (pooled[t] - mean) * (pooled[t] - mean);
    }
    var /= static_cast<double>(end - begin);
    if (!(var > 0.0)) var = pooled_var;
    draw.mu[k] = rng.normal(mean, std::sqrt(var));
    draw.sigma2[k] = var / rng.exponential();
  }
  draw.pi = rng.dirichlet_uniform(m);
  return draw;
}

}  // namespace

RepNormModel repnorm_em(const Matrix<double>& data, int m, std::uint64_t seed,
                        const EmConfig& config) {
  validate_inputs(data, m);
  Rng rng(seed);
  const RowStats st = row_stats(data);
  InitDraw draw = random_init(data, m, rng, st.pooled_var);
  return run_em(data, std::move(draw.pi), std::move(draw.mu), std::move(draw.sigma2),
                config, false, 0);
}

RepNormModel repnorm_em_from(const Matrix<double>& data, std::vector<double> pi,
                             std::vector<double> mu, std::vector<double> sigma2,
                             const EmConfig& config) {
  validate_inputs(data, static_cast<int>(pi.size()));
  return run_em(data, std::move(pi), std::move(mu), std::move(sigma2), config, false, 0);
}

RepNormModel small_em_init(const Matrix<double>& data, int m, std::uint64_t seed,
                           int restarts, int burn_iters) {
  validate_inputs(data, m);
  if (restarts < 1) throw Error(errc::config, "need at least one restart");
  Rng rng(seed);
  const RowStats st = row_stats(data);

  RepNormModel best;
  bool have_best = false;
  for (int r = 0; r < restarts; ++r) {
    InitDraw draw = random_init(data, m, rng, st.pooled_var);
    try {
      RepNormModel model = run_em(data, std::move(draw.pi), std::move(draw.mu),
                                  std::move(draw.sigma2), EmConfig{}, true, burn_iters);
      if (!have_best || model.loglik > best.loglik) {
        best = std::move(model);
        have_best = true;
      }
    } catch (const Error&) {
      // singular restart; try the next one
    }
  }
  if (!have_best) {
    throw Error(errc::selection, "every initialization restart hit a singularity");
  }
  return best;
}

CriterionValues criteria(const RepNormModel& model, std::size_t n) {
  const double p = 3.0 * model.m - 1.0;
  const double logn = std::log(static_cast<double>(n));
  CriterionValues c{};
  c.aic = -2.0 * model.loglik + 2.0 * p;
  c.bic = -2.0 * model.loglik + p * logn;
  c.caic = -2.0 * model.loglik + p * (logn + 1.0);
  double entropy = 0.0;
  for (std::size_t i = 0; i < model.posterior.rows(); ++i) {
    for (std::size_t k = 0; k < model.posterior.cols(); ++k) {
      const double w = model.posterior(i, k);
      if (w > 0.0) entropy -= w * std::log(w);
    }
  }
  c.icl = c.bic + 2.0 * entropy;
  return c;
}

SelectionReport select_component_count(const Matrix<double>& data, int m_lo, int m_hi,
                                       std::uint64_t seed, int restarts,
                                       const EmConfig& config) {
  if (m_lo < 1 || m_hi < m_lo) throw Error(errc::config, "bad component-count range");
  SelectionReport report;
  std::vector<RepNormModel> models;

  for (int m = m_lo; m <= m_hi; ++m) {
    const std::uint64_t seed_m = derive_seed(seed, "select-m" + std::to_string(m));
    SelectionRow row{};
    row.m = m;
    row.p_free = 3 * m - 1;
    row.seed = seed_m;
    row.converged = false;
    row.loglik = std::numeric_limits<double>::quiet_NaN();
    row.crit = {std::numeric_limits<double>::quiet_NaN(),
                std::numeric_limits<double>::quiet_NaN(),
                std::numeric_limits<double>::quiet_NaN(),
                std::numeric_limits<double>::quiet_NaN()};
    try {
      RepNormModel init = small_em_init(data, m, seed_m, restarts, 5);
      RepNormModel model =
          repnorm_em_from(data, init.pi, init.mu, init.sigma2, config);
      row.loglik = model.loglik;
      row.crit = criteria(model, data.rows());
      row.converged = model.converged;
      if (model.converged) models.push_back(std::move(model));
    } catch (const Error&) {
      // left as a non-converged row, excluded from the vote
    }
    report.rows.push_back(row);
  }

  const char* names[4] = {"AIC", "BIC", "CAIC", "ICL"};
  auto value_of = [](const SelectionRow& r, int c) {
    switch (c) {
      case 0: return r.crit.aic;
      case 1: return r.crit.bic;
      case 2: return r.crit.caic;
      default: return r.crit.icl;
    }
  };

  for (int c = 0; c < 4; ++c) {
    int arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& row : report.rows) {
      if (!row.converged) continue;
      if (value_of(row, c) < best) {
        best = value_of(row, c);
        arg = row.m;
      }
    }
    if (arg == 0) continue;  // no converged fit at all for this criterion
    report.votes.emplace_back(names[c], arg);
  }
  if (report.votes.empty()) {
    throw Error(errc::selection, "no component count could be fit");
  }
  report.chosen_m = majority_choice(report.votes, report.majority);
  return report;
}

int majority_choice(const std::vector<std::pair<std::string, int>>& votes, bool& majority) {
  if (votes.empty()) throw Error(errc::selection, "no votes to resolve");
  int bic_choice = votes.front().second;
  std::map<int, int> tally;
  for (const auto& [name, m] : votes) {
    ++tally[m];
    if (name == "BIC") bic_choice = m;
  }
  int chosen = 0;
  for (const auto& [m, n_votes] : tally) {
    if (n_votes < 2) continue;
    if (chosen == 0 || n_votes > tally[chosen] ||
        (n_votes == tally[chosen] && m == bic_choice)) {
      chosen = m;
    }
  }
  majority = chosen != 0;
  return majority ? chosen : bic_choice;
}

}  // namespace npmix
