#include "qlab/batch.hpp"

#include <algorithm>
#include <cmath>

namespace qlab::batch {

namespace {

constexpr std::uint64_t kTrialTag = 0x745249414c'00ULL;

void check_experiment_ranges(double epsilon, double delta, const char* op) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw RangeError(std::string(op) + ": epsilon must be in (0, 1)");
  }
  if (!(delta > 0.0 && delta < 0.5)) {
    throw RangeError(std::string(op) + ": delta must be in (0, 1/2)");
  }
}

void check_lower_bound_ranges(double epsilon, double delta, const char* op) {
  if (!(epsilon > 0.0 && epsilon <= 0.1)) {
    throw RangeError(std::string(op) + ": epsilon must be in (0, 1/10]");
  }
  if (!(delta > 0.0 && delta < 0.5)) {
    throw RangeError(std::string(op) + ": delta must be in (0, 1/2)");
  }
}

void check_formula_args(int ndim, int k, double c, const char* op) {
  if (ndim < 0) throw ArgumentError(std::string(op) + ": negative dimension");
  if (k < 2) throw ArgumentError(std::string(op) + ": k must be >= 2");
  if (!(c > 0.0)) throw ArgumentError(std::string(op) + ": c must be positive");
}

int ceil_to_int(double v) {
  const double c = std::ceil(v);
  if (c > 2147483000.0) throw RangeError("sample size form overflows int");
  return static_cast<int>(c);
}

}  // namespace

void PacParams::validate() const {
  check_experiment_ranges(epsilon, delta, "params");
  if (m < 0) throw RangeError("params: m must be >= 0");
  if (trials < 1) throw RangeError("params: trials must be >= 1");
}

model::Hypothesis erm(const std::vector<model::LabeledExample>& sample,
                      const model::HypothesisClass& cls) {
  if (cls.empty()) throw ArgumentError("erm: empty class");
  int best_index = 0;
  long long best_mistakes = -1;
  for (int i = 0; i < cls.size(); ++i) {
    long long mistakes = 0;
    for (const model::LabeledExample& ex : sample) {
      if (ex.x < 0 || ex.x >= cls.domain_size) {
        throw ArgumentError("erm: example point out of range");
      }
      if (cls[i](ex.x) != ex.y) ++mistakes;
    }
    if (best_mistakes < 0 || mistakes < best_mistakes) {
      best_mistakes = mistakes;
      best_index = i;
    }
  }
  return cls[best_index];
}

model::Hypothesis measure_then_erm(const std::vector<qsim::StateVector>& states,
                                   const model::HypothesisClass& cls,
                                   const qsim::RegisterLayout& layout, Rng& rng) {
  std::vector<model::LabeledExample> sample;
  sample.reserve(states.size());
  for (const qsim::StateVector& state : states) {
    const qsim::MeasureResult r = qsim::measure_computational(state, rng);
    const std::uint64_t x = layout.field(r.outcome, "x");
    const std::uint64_t y = layout.field(r.outcome, "y");
    if (x >= static_cast<std::uint64_t>(cls.domain_size) ||
        y >= static_cast<std::uint64_t>(cls.num_labels)) {
      throw CircuitFaultError("measure_then_erm: outcome outside (n, k) range");
    }
    sample.push_back({static_cast<int>(x), static_cast<model::Label>(y)});
  }
  return erm(sample, cls);
}

std::vector<double> pac_trial_errors(const model::HypothesisClass& cls,
                                     const model::Distribution& d,
                                     const model::Hypothesis& target,
                                     const PacParams& params) {
  params.validate();
  if (cls.empty()) throw ArgumentError("pac_experiment: empty class");
  if (d.support_size() != cls.domain_size) {
    throw ArgumentError("pac_experiment: distribution support != domain");
  }
  if (std::find(cls.members.begin(), cls.members.end(), target) == cls.members.end()) {
    throw ArgumentError("pac_experiment: target not in class");
  }
  const qsim::RegisterLayout layout =
      qsim::RegisterLayout::example(cls.domain_size, cls.num_labels);
  const qsim::StateVector example = qsim::prepare_realizable_example(d, target, layout);

  std::vector<double> errors;
  errors.reserve(static_cast<std::size_t>(params.trials));
  for (int trial = 0; trial < params.trials; ++trial) {
    Rng rng = Rng::derive(params.seed, kTrialTag, static_cast<std::uint64_t>(trial));
    const std::vector<qsim::StateVector> states(static_cast<std::size_t>(params.m), example);
    const model::Hypothesis h = measure_then_erm(states, cls, layout, rng);
    errors.push_back(model::true_error(h, d, target));
  }
  return errors;
}

double pac_experiment(const model::HypothesisClass& cls, const model::Distribution& d,
                      const model::Hypothesis& target, const PacParams& params) {
  const std::vector<double> errors = pac_trial_errors(cls, d, target, params);
  int successes = 0;
  for (double e : errors)
    if (e <= params.epsilon) ++successes;
  return static_cast<double>(successes) / params.trials;
}

std::vector<double> agnostic_trial_regrets(const model::HypothesisClass& cls,
                                           const model::Distribution& joint,
                                           const PacParams& params) {
  params.validate();
  if (cls.empty()) throw ArgumentError("agnostic_experiment: empty class");
  if (joint.support_size() != cls.domain_size * cls.num_labels) {
    throw ArgumentError("agnostic_experiment: joint support != n*k");
  }
  const qsim::RegisterLayout layout =
      qsim::RegisterLayout::example(cls.domain_size, cls.num_labels);
  const qsim::StateVector example =
      qsim::prepare_agnostic_example(joint, cls.domain_size, cls.num_labels, layout);

  double best = 2.0;
  for (const model::Hypothesis& h : cls.members) {
    best = std::min(best, model::true_joint_error(h, joint, cls.num_labels));
  }

  std::vector<double> regrets;
  regrets.reserve(static_cast<std::size_t>(params.trials));
  for (int trial = 0; trial < params.trials; ++trial) {
    Rng rng = Rng::derive(params.seed, kTrialTag, static_cast<std::uint64_t>(trial));
    const std::vector<qsim::StateVector> states(static_cast<std::size_t>(params.m), example);
    const model::Hypothesis h = measure_then_erm(states, cls, layout, rng);
    regrets.push_back(model::true_joint_error(h, joint, cls.num_labels) - best);
  }
  return regrets;
}

double agnostic_experiment(const model::HypothesisClass& cls,
                           const model::Distribution& joint, const PacParams& params) {
  const std::vector<double> regrets = agnostic_trial_regrets(cls, joint, params);
  int successes = 0;
  for (double r : regrets)
    if (r <= params.epsilon) ++successes;
  return static_cast<double>(successes) / params.trials;
}

int m_pac_lb(int ndim, double epsilon, double delta) {
  check_lower_bound_ranges(epsilon, delta, "m_pac_lb");
  if (ndim < 0) throw ArgumentError("m_pac_lb: negative dimension");
  return ceil_to_int((ndim + std::log2(1.0 / delta)) / epsilon);
}

int m_pac_ub(int ndim, int k, double epsilon, double delta, double c) {
  check_experiment_ranges(epsilon, delta, "m_pac_ub");
  check_formula_args(ndim, k, c, "m_pac_ub");
  const double value =
      c * (ndim * std::log2(static_cast<double>(k)) * std::log2(1.0 / epsilon) +
           std::log2(1.0 / delta)) /
      epsilon;
  return ceil_to_int(value);
}

int m_pac_ub_alt(int ndim, int k, double epsilon, double delta, double c) {
  check_experiment_ranges(epsilon, delta, "m_pac_ub_alt");
  check_formula_args(ndim, k, c, "m_pac_ub_alt");
  const double dim_term =
      ndim * (std::log2(static_cast<double>(k)) + std::log2(1.0 / epsilon) +
              std::log2(static_cast<double>(std::max(ndim, 1))));
  return ceil_to_int(c * (dim_term + std::log2(1.0 / delta)) / epsilon);
}

int m_agn_lb(int ndim, double epsilon, double delta) {
  check_lower_bound_ranges(epsilon, delta, "m_agn_lb");
  if (ndim < 0) throw ArgumentError("m_agn_lb: negative dimension");
  return ceil_to_int((ndim + std::log2(1.0 / delta)) / (epsilon * epsilon));
}

int m_agn_ub(int ndim, int k, double epsilon, double delta, double c) {
  check_experiment_ranges(epsilon, delta, "m_agn_ub");
  check_formula_args(ndim, k, c, "m_agn_ub");
  const double value =
      c * (ndim * std::log2(static_cast<double>(k)) + std::log2(1.0 / delta)) /
      (epsilon * epsilon);
  return ceil_to_int(value);
}

}  // namespace qlab::batch
