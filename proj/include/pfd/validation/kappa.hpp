#pragma once

#include <map>
#include <optional>
#include <vector>

#include "pfd/common/error.hpp"

namespace pfd::validation {

class StatsError : public Error {
 public:
  using Error::Error;
};

// Standard error used for the confidence interval.
enum class KappaSe {
  // Large-sample SE under the null hypothesis kappa = 0. This is what most
  // published kappa intervals use, and it is the default.
  null_hypothesis,
  // Asymptotic SE at the observed kappa (Fleiss, Cohen and Everitt).
  // Cohen's kappa only.
  nonnull,
};

struct AgreementReport {
  double kappa = 0;
  double p_observed = 0;
  double p_expected = 0;
  double std_error = 0;
  double ci_low = 0;
  double ci_high = 0;
  std::size_t n_items = 0;
  // Chance agreement is 1 (every label identical): kappa is reported as 1
  // with a zero-width interval.
  bool degenerate = false;
};

inline constexpr double kZ95 = 1.959963984540054;

// Two raters, binary labels (0/1). Throws StatsError on unequal or zero
// length or a label outside {0, 1}.
AgreementReport cohen_kappa(const std::vector<int>& a, const std::vector<int>& b,
                            KappaSe se = KappaSe::null_hypothesis);

// n_items x m_raters grid; nullopt is a missing label. Requires a complete
// grid, m >= 2, n >= 2, labels in {0, 1}.
using RatingGrid = std::vector<std::vector<std::optional<int>>>;
AgreementReport fleiss_kappa(const RatingGrid& grid);

// Expected lower confidence limit for kappa when n_subjects are each rated
// by n_raters, the true agreement is kappa0 and the positive rate is
// prevalence. Lower limit of the one-sided goodness-of-fit interval at level
// 1 - alpha under the common-correlation binary model (a rating pattern is
// unanimous with probability kappa, otherwise labels are independent
// Bernoulli(prevalence)). Throws StatsError outside kappa0 in (0, 1),
// prevalence in (0, 1), n_raters in [2, 6], n_subjects >= 10.
double panel_lower_bound(double kappa0, int n_subjects, int n_raters, double prevalence, double alpha = 0.05);

struct PanelSizePlan {
  double kappa0 = 0;
  int n_subjects = 0;
  double prevalence = 0;
  std::map<int, double> per_rater_bounds;
};

PanelSizePlan plan_panel(double kappa0, int n_subjects, double prevalence, int min_raters = 2, int max_raters = 5);

}  // namespace pfd::validation
