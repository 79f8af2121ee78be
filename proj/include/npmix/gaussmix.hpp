#ifndef NPMIX_GAUSSMIX_HPP
#define NPMIX_GAUSSMIX_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "npmix/matrix.hpp"

namespace npmix {

/// Gaussian repeated-measures mixture: one scalar mean and variance per
/// component, shared across all coordinates of a row.
struct RepNormModel {
  int m = 0;
  std::vector<double> pi;
  std::vector<double> mu;
  std::vector<double> sigma2;
  double loglik = 0.0;
  Matrix<double> posterior;
  std::vector<double> loglik_trace;  // one entry per E-step, plus the final value
  bool converged = false;
  int iterations = 0;
};

struct EmConfig {
  int max_iters = 1000;
  double tol = 1e-8;
};

struct CriterionValues {
  double aic;
  double bic;
  double caic;
  double icl;
};

struct SelectionRow {
  int m;
  double loglik;
  int p_free;
  CriterionValues crit;
  bool converged;
  std::uint64_t seed;
};

struct SelectionReport {
  std::vector<SelectionRow> rows;
  int chosen_m = 0;
  bool majority = false;
  // criterion name -> component count it favors (converged fits only)
  std::vector<std::pair<std::string, int>> votes;
};

/// EM from a random binned initialization to a local maximum.
RepNormModel repnorm_em(const Matrix<double>& data, int m, std::uint64_t seed,
                        const EmConfig& config = {});

/// Continue EM from explicit parameters.
RepNormModel repnorm_em_from(const Matrix<double>& data, std::vector<double> pi,
                             std::vector<double> mu, std::vector<double> sigma2,
                             const EmConfig& config = {});

/// Short multi-restart burn-in: run `restarts` random initializations for
/// `burn_iters` EM iterations each and keep the one with the best likelihood.
RepNormModel small_em_init(const Matrix<double>& data, int m, std::uint64_t seed,
                           int restarts = 20, int burn_iters = 5);

/// Penalized-deviance criteria for a fitted model over n rows.
/// p = 3m - 1; AIC = -2l + 2p; BIC = -2l + p log n; CAIC = -2l + p(log n + 1);
/// ICL adds twice the classification entropy to BIC.
CriterionValues criteria(const RepNormModel& model, std::size_t n);

/// Resolve per-criterion picks into one count: any count backed by >= 2
/// criteria wins (ties between two such counts go to the BIC pick); with no
/// majority, fall back to the BIC pick and clear the majority flag.
int majority_choice(const std::vector<std::pair<std::string, int>>& votes, bool& majority);

/// Fit every component count in [m_lo, m_hi], score all four criteria, and
/// choose by majority (>= 2 criteria agreeing), falling back to the BIC
/// minimizer when every criterion disagrees.
SelectionReport select_component_count(const Matrix<double>& data, int m_lo, int m_hi,
                                       std::uint64_t seed, int restarts = 20,
                                       const EmConfig& config = {});

}  // namespace npmix

#endif
