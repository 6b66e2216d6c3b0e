#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "qlab/dims.hpp"
#include "qlab/model.hpp"
#include "qlab/qsim.hpp"
#include "qlab/rng.hpp"

namespace qlab::online {

// Interaction models. classical_input reveals a point, the learner
// predicts, then the label is revealed. In the other two the learner
// commits a hypothesis first, then the round's distribution produces a
// drawn example (classical_distribution) or an example superposition the
// learner may measure (quantum).
enum class Model { classical_input, classical_distribution, quantum };

struct ProtocolConfig {
  Model model = Model::classical_input;
  int rounds = 1;   // T >= 1
  bool realizable = true;
  std::optional<double> mistake_threshold;  // epsilon in (0,1): records 1[P_t > eps]

  void validate() const;
};

// One adversary turn. Realizable rounds: dist over X plus a label for
// every supported point (entries off the support may be -1). Agnostic
// rounds: is_joint with dist over X x Y flattened x-major, labels empty.
struct AdversaryMove {
  model::Distribution dist;
  std::vector<model::Label> support_labels;
  bool is_joint = false;
};

struct RoundRecord {
  int t = 0;
  AdversaryMove move;              // post input-model collapse: a point mass
  model::LabeledExample realized;  // drawn / measured / revealed example
  model::Hypothesis hypothesis;    // h_t (possibly outside the class)
  double prob_loss = 0.0;          // P_t, exact from the move
  int indicator_loss = 0;          // I_t = 1[h_t(x_t) != y_t]
  double increment = 0.0;          // M_t = P_t - I_t
  double quad_variation = 0.0;     // running sum of P_s(1 - P_s)
  std::optional<int> threshold_mistake;  // 1[P_t > eps] when configured
};

struct RegretRecord {
  // Cumulative distributional loss minus the best fixed member's.
  double agnostic = 0.0;
  // Realizable runs: worst case over members with zero distributional
  // loss on every round.
  std::optional<double> realizable;
};

struct Transcript {
  ProtocolConfig config;
  int domain_size = 0;
  int num_labels = 0;
  std::uint64_t seed = 0;
  std::vector<RoundRecord> rounds;
  double total_prob_loss = 0.0;
  long long total_indicator_loss = 0;
  RegretRecord regret;
};

// --- Participants -----------------------------------------------------------

class Learner {
 public:
  virtual ~Learner() = default;
  // Commit the round's hypothesis. Called before any reveal.
  virtual model::Hypothesis propose(Rng& rng) = 0;
  // Classical reveal of the realized example.
  virtual void observe(const model::LabeledExample& ex) = 0;
  // Quantum reveal. The default cannot consume states (ArgumentError);
  // wrap classical learners with make_measure_and_learn. Implementations
  // must also absorb the example internally (observe is not called
  // again) and return the realized example for the record.
  virtual model::LabeledExample receive_state(const qsim::StateVector& state,
                                              const qsim::RegisterLayout& layout,
                                              int n, int k, Rng& rng);
};

class Adversary {
 public:
  virtual ~Adversary() = default;
  // Called once before round 1 with the run configuration.
  virtual void begin(const ProtocolConfig& config, const model::HypothesisClass& cls);
  // Produce the round's move. Sees the learner's committed hypothesis
  // and all previously realized examples (via observe).
  virtual AdversaryMove choose(int t, const model::Hypothesis& h, Rng& rng) = 0;
  virtual void observe(const model::LabeledExample& realized);
};

// Version-space learner: predicts, per point, the label whose consistent
// restriction has the largest tree dimension (ties to the smallest
// label). Realizable sequences force at most dim-many indicator
// mistakes. Deterministic; consumes no randomness.
std::unique_ptr<Learner> make_soa_learner(const model::HypothesisClass& cls);

// Multiplicative-weights learner over the class: samples a member
// proportionally to weights, multiplies mistaken members' weights by
// exp(-eta). Default eta = sqrt(8 ln|H| / T).
std::unique_ptr<Learner> make_mw_learner(const model::HypothesisClass& cls, int rounds,
                                         std::optional<double> eta = std::nullopt);

// Measures incoming example states in the computational basis and feeds
// the decoded example to the wrapped classical learner.
std::unique_ptr<Learner> make_measure_and_learn(std::unique_ptr<Learner> inner);

// Replays a fixed example sequence as degenerate distributions. Rounds
// beyond the sequence repeat its last element.
std::unique_ptr<Adversary> make_point_mass_adversary(std::vector<model::LabeledExample> seq);

// Descends a verified binary shattering tree, always answering opposite
// the learner's prediction; forces one mistake per level. After the tree
// is exhausted it replays a consistent member's labels.
// InvalidCertificateError if the tree is not shattered by the class.
std::unique_ptr<Adversary> make_tree_adversary(const model::HypothesisClass& cls,
                                               const trees::MistakeTree& tree);

// Fixed-distribution i.i.d. source, realizable (labels from target).
std::unique_ptr<Adversary> make_stochastic_adversary(model::Distribution d,
                                                     model::Hypothesis target);

// Fixed joint-distribution i.i.d. source (agnostic).
std::unique_ptr<Adversary> make_stochastic_joint_adversary(model::Distribution joint);

// --- Harness -----------------------------------------------------------------

// Runs the interaction for config.rounds rounds. Per-round randomness is
// carved from (seed, role, t) streams so paired runs across models align.
// In the classical-input model non-degenerate moves are realized by an
// immediate draw and recorded as the resulting point mass, preserving
// P_t = I_t. Realizable runs verify some member stays consistent with
// every revealed round (ProtocolViolationError otherwise).
Transcript run_protocol(const ProtocolConfig& config, const model::HypothesisClass& cls,
                        Learner& learner, Adversary& adversary, std::uint64_t seed);

// Regret functionals over a finished transcript (exact sums over the
// stored moves). Realizable regret is present for realizable configs.
RegretRecord regret_eval(const Transcript& transcript, const model::HypothesisClass& cls);

struct MartingaleReport {
  int dim = 0;            // tree dimension of the class
  double loglog_rounds = 0.0;  // ln ln T
  // Across-run mean and standard deviation of M_t per round.
  std::vector<double> mean_increment;
  std::vector<double> stdev_increment;
  // Per run: (sum_t P_t + dim) - sum_t P_t(1 - P_t), nonnegative when the
  // quadratic-variation bound holds.
  std::vector<double> quad_variation_slack;
  struct Exceedance {
    double delta = 0.0;
    double bound = 0.0;      // 8*dim + 256*lnln(T) + 256*delta
    double frequency = 0.0;  // fraction of runs with sum_t P_t > bound
    double target = 0.0;     // e^{-delta}
  };
  std::vector<Exceedance> exceedance;
};

// Requires >= 1 transcripts, all realizable, same T >= 4, and model
// classical_distribution or quantum (the increments are degenerate in the
// input model). RangeError / ArgumentError otherwise.
MartingaleReport martingale_report(const std::vector<Transcript>& transcripts,
                                   const model::HypothesisClass& cls,
                                   const std::vector<double>& deltas = {0.5, 1.0});

}  // namespace qlab::online
