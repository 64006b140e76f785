#include "pfd/validation/kappa.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/tools/roots.hpp>
#include <algorithm>
#include <cmath>

namespace pfd::validation {

namespace {

AgreementReport finish(double kappa, double p0, double pe, double se, std::size_t n) {
  AgreementReport r;
  r.kappa = kappa;
  r.p_observed = p0;
  r.p_expected = pe;
  r.std_error = se;
  r.ci_low = std::clamp(kappa - kZ95 * se, -1.0, 1.0);
  r.ci_high = std::clamp(kappa + kZ95 * se, -1.0, 1.0);
  r.n_items = n;
  return r;
}

AgreementReport degenerate(double p0, std::size_t n) {
  AgreementReport r = finish(1.0, p0, 1.0, 0.0, n);
  r.degenerate = true;
  return r;
}

void check_label(int v) {
  if (v != 0 && v != 1) throw StatsError("label " + std::to_string(v) + " is not 0 or 1");
}

}  // namespace

AgreementReport cohen_kappa(const std::vector<int>& a, const std::vector<int>& b, KappaSe se_kind) {
  if (a.size() != b.size()) {
    throw StatsError("rater label lists differ in length (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw StatsError("no items to compare");
  const auto n = static_cast<double>(a.size());
  // Integer counts, divided once, so balanced marginals give p_e = 0.5 exactly.
  std::size_t count[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < a.size(); ++i) {
    check_label(a[i]);
    check_label(b[i]);
    ++count[a[i]][b[i]];
  }
  double cell[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) cell[i][j] = static_cast<double>(count[i][j]) / n;
  const std::size_t row_n[2] = {count[0][0] + count[0][1], count[1][0] + count[1][1]};
  const std::size_t col_n[2] = {count[0][0] + count[1][0], count[0][1] + count[1][1]};
  const double row[2] = {static_cast<double>(row_n[0]) / n, static_cast<double>(row_n[1]) / n};
  const double col[2] = {static_cast<double>(col_n[0]) / n, static_cast<double>(col_n[1]) / n};
  const double p0 = static_cast<double>(count[0][0] + count[1][1]) / n;
  const double pe = static_cast<double>(row_n[0] * col_n[0] + row_n[1] * col_n[1]) / (n * n);
  if (pe >= 1.0 - 1e-12) return degenerate(p0, a.size());
  const double kappa = (p0 - pe) / (1.0 - pe);

  double var = 0;
  if (se_kind == KappaSe::null_hypothesis) {
    double s = 0;
    for (int i = 0; i < 2; ++i) s += row[i] * col[i] * (row[i] + col[i]);
    var = (pe + pe * pe - s) / (n * (1 - pe) * (1 - pe));
  } else {
    double s = 0;
    for (int i = 0; i < 2; ++i) {
      const double t = 1 - (row[i] + col[i]) * (1 - kappa);
      s += cell[i][i] * t * t;
    }
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        if (i != j) s += (1 - kappa) * (1 - kappa) * cell[i][j] * (col[i] + row[j]) * (col[i] + row[j]);
      }
    }
    const double t = kappa - pe * (1 - kappa);
    var = (s - t * t) / (n * (1 - pe) * (1 - pe));
  }
  return finish(kappa, p0, pe, std::sqrt(std::max(0.0, var)), a.size());
}

AgreementReport fleiss_kappa(const RatingGrid& grid) {
  const std::size_t n = grid.size();
  if (n < 2) throw StatsError("Fleiss' kappa needs at least 2 items, got " + std::to_string(n));
  const std::size_t m = grid.front().size();
  if (m < 2) throw StatsError("Fleiss' kappa needs at least 2 raters");
  double positives = 0;
  double p_bar = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (grid[i].size() != m) throw StatsError("item " + std::to_string(i) + " has a different rater count");
    double k1 = 0;
    for (std::size_t r = 0; r < m; ++r) {
      if (!grid[i][r]) {
        throw StatsError("missing label at item " + std::to_string(i) + ", rater " + std::to_string(r) +
                         "; resolve the matrix first");
      }
      check_label(*grid[i][r]);
      k1 += *grid[i][r];
    }
    const double k0 = static_cast<double>(m) - k1;
    p_bar += (k0 * (k0 - 1) + k1 * (k1 - 1)) / (static_cast<double>(m) * (m - 1));
    positives += k1;
  }
  p_bar /= static_cast<double>(n);
  const double p1 = positives / (static_cast<double>(n) * m);
  const double p0 = 1 - p1;
  const double pe = p0 * p0 + p1 * p1;
  if (pe >= 1.0 - 1e-12) return degenerate(p_bar, n);
  const double kappa = (p_bar - pe) / (1 - pe);

  // Null variance (Fleiss, Nee and Landis). With two categories the
  // sum_pq_diff term cancels and the variance is 2 / (n m (m - 1)).
  const double pq = p0 * p1;
  const double sum_pq = 2 * pq;
  const double sum_pq_diff = pq * (p1 - p0) + pq * (p0 - p1);
  const double var = 2.0 / (static_cast<double>(n) * m * (m - 1)) *
                     (sum_pq * sum_pq - sum_pq_diff) / (sum_pq * sum_pq);
  return finish(kappa, p_bar, pe, std::sqrt(var), n);
}

namespace {

// Probability that k of m raters say "positive" on one subject.
std::vector<double> pattern_probs(double kappa, int m, double pi) {
  std::vector<double> p(static_cast<std::size_t>(m) + 1);
  for (int k = 0; k <= m; ++k) {
    const double binom = std::exp(std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0)) *
                         std::pow(pi, k) * std::pow(1 - pi, m - k);
    p[static_cast<std::size_t>(k)] = (1 - kappa) * binom;
  }
  p.front() += kappa * (1 - pi);
  p.back() += kappa * pi;
  return p;
}

}  // namespace

double panel_lower_bound(double kappa0, int n_subjects, int n_raters, double prevalence, double alpha) {
  if (!(kappa0 > 0 && kappa0 < 1)) throw StatsError("kappa0 must lie in (0, 1)");
  if (!(prevalence > 0 && prevalence < 1)) throw StatsError("prevalence must lie in (0, 1)");
  if (n_raters < 2 || n_raters > 6) throw StatsError("n_raters must lie in [2, 6]");
  if (n_subjects < 10) throw StatsError("n_subjects must be at least 10");
  if (!(alpha > 0 && alpha < 0.5)) throw StatsError("alpha must lie in (0, 0.5)");

  const double q = 1 - prevalence;
  const int m = n_raters;
  // Below kappa_min an all-negative or all-positive pattern would have
  // negative probability.
  const double kmin_neg = -std::pow(q, m) / (q - std::pow(q, m));
  const double kmin_pos = -std::pow(prevalence, m) / (prevalence - std::pow(prevalence, m));
  const double kappa_min = std::max(kmin_neg, kmin_pos);

  const double crit = boost::math::quantile(boost::math::chi_squared(1.0), 1 - 2 * alpha);
  const auto target = pattern_probs(kappa0, m, prevalence);
  auto f = [&](double k) {
    const auto p = pattern_probs(k, m, prevalence);
    double chi = 0;
    for (std::size_t l = 0; l < p.size(); ++l) chi += (target[l] - p[l]) * (target[l] - p[l]) / p[l];
    return n_subjects * chi - crit;
  };

  const double lo = kappa_min + 1e-12 * (kappa0 - kappa_min);
  if (f(lo) <= 0) return kappa_min;
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, kappa0, f(lo), f(kappa0),
                                                        boost::math::tools::eps_tolerance<double>(50), iters);
  return (a + b) / 2;
}

PanelSizePlan plan_panel(double kappa0, int n_subjects, double prevalence, int min_raters, int max_raters) {
  PanelSizePlan plan{kappa0, n_subjects, prevalence, {}};
  for (int m = min_raters; m <= max_raters; ++m) {
    plan.per_rater_bounds[m] = panel_lower_bound(kappa0, n_subjects, m, prevalence);
  }
  return plan;
}

}  // namespace pfd::validation
