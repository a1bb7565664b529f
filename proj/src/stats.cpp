#include "sizesym/stats.hpp"

namespace sizesym::stats {

std::string_view to_string(Tail tail) { return tail == Tail::two_sided ? "two_sided" : "one_sided_greater"; }

double student_t_quantile(double probability, double df) {
  if (!(probability > 0.0 && probability < 1.0)) throw NumericalError("t quantile needs 0 < p < 1");
  double lo = -1.0;
  double hi = 1.0;
  while (student_t_cdf(lo, df) > probability) lo *= 2.0;
  while (student_t_cdf(hi, df) < probability) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (student_t_cdf(mid, df) < probability) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

TestResult one_sample_t(const Eigen::Ref<const Eigen::VectorXd>& values, double mu, Tail tail) {
  const auto n = values.size();
  if (n < 2) throw DegenerateSample("one-sample t-test needs at least 2 values");
  if ((values.array() == values(0)).all()) throw DegenerateSample("sample shows no variation; t statistic undefined");
  const double sd = sample_sd(values);
  TestResult r;
  r.statistic = (sample_mean(values) - mu) / (sd / std::sqrt(static_cast<double>(n)));
  r.df = static_cast<double>(n - 1);
  r.tail = tail;
  const double upper = student_t_sf(r.statistic, r.df);
  r.p = tail == Tail::one_sided_greater ? upper : std::min(1.0, 2.0 * student_t_sf(std::abs(r.statistic), r.df));
  return r;
}

TestResult paired_t(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) throw NumericalError("paired t-test needs equal-length samples");
  const Eigen::VectorXd diff = a - b;
  return one_sample_t(diff, 0.0, Tail::two_sided);
}

TestResult pooled_t(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  if (na < 2 || nb < 2) throw DegenerateSample("pooled t-test needs at least 2 values per group");
  const double ssa = (a.array() - a.mean()).square().sum();
  const double ssb = (b.array() - b.mean()).square().sum();
  const double pooled = (ssa + ssb) / (na + nb - 2.0);
  if (!(pooled > 0.0)) throw DegenerateSample("both groups show no variation");
  TestResult r;
  r.statistic = (a.mean() - b.mean()) / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
  r.df = na + nb - 2.0;
  r.tail = Tail::two_sided;
  r.p = std::min(1.0, 2.0 * student_t_sf(std::abs(r.statistic), r.df));
  return r;
}

TestResult anova_oneway(const std::vector<Eigen::VectorXd>& groups) {
  if (groups.size() < 2) throw DegenerateSample("ANOVA needs at least 2 groups");
  double total = 0.0;
  double n = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw DegenerateSample("ANOVA needs at least 2 values per group");
    total += g.sum();
    n += static_cast<double>(g.size());
  }
  const double grand = total / n;
  double between = 0.0;
  double within = 0.0;
  for (const auto& g : groups) {
    const double m = g.mean();
    between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    within += (g.array() - m).square().sum();
  }
  if (!(within > 0.0)) throw DegenerateSample("ANOVA: zero within-group variance");
  const double k = static_cast<double>(groups.size());
  TestResult r;
  r.df = k - 1.0;
  r.df2 = n - k;
  r.statistic = (between / r.df) / (within / r.df2);
  r.tail = Tail::one_sided_greater;
  r.p = f_sf(r.statistic, r.df, r.df2);
  return r;
}

double cohens_d(const Eigen::Ref<const Eigen::VectorXd>& values, double mu) {
  if (values.size() < 2 || (values.array() == values(0)).all()) throw DegenerateSample("Cohen's d undefined for a sample with no variation");
  return (sample_mean(values) - mu) / sample_sd(values);
}

ConfidenceInterval mean_ci(const Eigen::Ref<const Eigen::VectorXd>& values, double level) {
  ConfidenceInterval ci;
  if (values.size() == 0) return ci;
  ci.mean = values.mean();
  ci.lower = ci.upper = ci.mean;
  if (values.size() < 2) return ci;
  const double se = sample_sd(values) / std::sqrt(static_cast<double>(values.size()));
  const double q = student_t_quantile(0.5 + level / 2.0, static_cast<double>(values.size() - 1));
  ci.lower = ci.mean - q * se;
  ci.upper = ci.mean + q * se;
  return ci;
}

}  // namespace sizesym::stats
