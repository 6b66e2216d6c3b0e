#pragma once

#include <cstdint>
#include <vector>

#include "qlab/model.hpp"
#include "qlab/qsim.hpp"
#include "qlab/rng.hpp"

namespace qlab::batch {

// Shared experiment parameters. Experiments accept the full ranges
// epsilon in (0,1) and delta in (0,1/2); the tighter range the
// lower-bound formulas are stated for is enforced by those evaluators.
struct PacParams {
  double epsilon = 0.1;
  double delta = 0.1;
  int m = 0;       // examples per trial, >= 0
  int trials = 1;  // >= 1
  std::uint64_t seed = 0;

  void validate() const;
};

// Member minimizing empirical error, ties broken by member order (exact
// integer mistake counts). Empty sample returns the first member.
model::Hypothesis erm(const std::vector<model::LabeledExample>& sample,
                      const model::HypothesisClass& cls);

// Measures each state in the computational basis, decodes (x, y) through
// the layout, and runs erm on the decoded sample. Amplitude on a pattern
// outside the class's (n, k) range raises CircuitFaultError.
model::Hypothesis measure_then_erm(const std::vector<qsim::StateVector>& states,
                                   const model::HypothesisClass& cls,
                                   const qsim::RegisterLayout& layout, Rng& rng);

// Per-trial exact true error of measure-then-erm run on m copies of the
// realizable example state. Trials use derived seed streams
// (seed, trial), so the whole experiment is deterministic in params.
std::vector<double> pac_trial_errors(const model::HypothesisClass& cls,
                                     const model::Distribution& d,
                                     const model::Hypothesis& target,
                                     const PacParams& params);

// Fraction of trials with true error <= epsilon.
double pac_experiment(const model::HypothesisClass& cls, const model::Distribution& d,
                      const model::Hypothesis& target, const PacParams& params);

// Agnostic variants over a joint distribution on X x Y (flattened
// x-major): per-trial exact regret against the best member, and the
// fraction of trials with regret <= epsilon.
std::vector<double> agnostic_trial_regrets(const model::HypothesisClass& cls,
                                           const model::Distribution& joint,
                                           const PacParams& params);
double agnostic_experiment(const model::HypothesisClass& cls,
                           const model::Distribution& joint, const PacParams& params);

// --- Sample-size forms -----------------------------------------------------
// All logs are base 2 and ceilings are applied last. The upper-bound
// forms carry a calibration constant c (default 1, fixed for this
// repository in config/calibration.json).

// ceil((ndim + log2(1/delta)) / epsilon); stated for epsilon <= 1/10.
int m_pac_lb(int ndim, double epsilon, double delta);

// ceil(c * (ndim * log2(k) * log2(1/epsilon) + log2(1/delta)) / epsilon).
int m_pac_ub(int ndim, int k, double epsilon, double delta, double c = 1.0);

// Alternative realizable form, tighter in epsilon:
// ceil(c * (ndim * (log2(k) + log2(1/epsilon) + log2(max(ndim,1))) + log2(1/delta)) / epsilon).
int m_pac_ub_alt(int ndim, int k, double epsilon, double delta, double c = 1.0);

// ceil((ndim + log2(1/delta)) / epsilon^2); stated for epsilon <= 1/10.
int m_agn_lb(int ndim, double epsilon, double delta);

// ceil(c * (ndim * log2(k) + log2(1/delta)) / epsilon^2).
int m_agn_ub(int ndim, int k, double epsilon, double delta, double c = 1.0);

}  // namespace qlab::batch
