#include "qlab/online.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "qlab/errors.hpp"
#include "qlab/trees.hpp"

namespace qlab::online {

namespace {

// Per-role stream tags so the three randomness consumers never alias.
constexpr std::uint64_t kLearnerTag = 0x4c4e5201;
constexpr std::uint64_t kEnvTag = 0x454e5602;
constexpr std::uint64_t kRealizeTag = 0x524c5a03;

int point_of(const model::Distribution& d) {
  for (int i = 0; i < d.support_size(); ++i)
    if (d(i) == 1.0) return i;
  throw InternalInvariantError("point_of called on a spread distribution");
}

void check_hypothesis(const model::Hypothesis& h, int n, int k) {
  if (h.domain_size() != n)
    throw ArgumentError("proposed hypothesis has the wrong domain size");
  for (model::Label y : h.labels)
    if (y < 0 || y >= k) throw ArgumentError("proposed hypothesis uses an out-of-range label");
}

void check_move(const AdversaryMove& move, const ProtocolConfig& config, int n, int k) {
  if (config.realizable && move.is_joint)
    throw ProtocolViolationError("joint move in a realizable run");
  const int want = move.is_joint ? n * k : n;
  if (move.dist.support_size() != want)
    throw ProtocolViolationError("move distribution has the wrong support size");
  double total = 0.0;
  for (double p : move.dist.probs) {
    if (!(p >= 0.0)) throw ProtocolViolationError("move distribution has a negative entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ProtocolViolationError("move distribution does not sum to one");
  if (!move.is_joint) {
    if (static_cast<int>(move.support_labels.size()) != n)
      throw ProtocolViolationError("move labels must cover the domain");
    for (int x = 0; x < n; ++x)
      if (move.dist(x) > 0.0 &&
          (move.support_labels[x] < 0 || move.support_labels[x] >= k))
        throw ProtocolViolationError("move lacks a valid label on its support");
  }
}

// Mass the move puts on examples the hypothesis gets wrong.
double move_prob_loss(const AdversaryMove& move, const model::Hypothesis& h, int k) {
  double p = 0.0;
  if (move.is_joint) {
    for (int z = 0; z < move.dist.support_size(); ++z)
      if (move.dist(z) > 0.0 && h(z / k) != z % k) p += move.dist(z);
  } else {
    for (int x = 0; x < move.dist.support_size(); ++x)
      if (move.dist(x) > 0.0 && h(x) != move.support_labels[x]) p += move.dist(x);
  }
  return p;
}

// Mass on points where the two hypotheses disagree (x-marginal for joints).
double disagreement_mass(const AdversaryMove& move, const model::Hypothesis& a,
                         const model::Hypothesis& b, int k) {
  double p = 0.0;
  if (move.is_joint) {
    for (int z = 0; z < move.dist.support_size(); ++z)
      if (move.dist(z) > 0.0 && a(z / k) != b(z / k)) p += move.dist(z);
  } else {
    for (int x = 0; x < move.dist.support_size(); ++x)
      if (move.dist(x) > 0.0 && a(x) != b(x)) p += move.dist(x);
  }
  return p;
}

AdversaryMove collapse_to_point(const AdversaryMove& move, int x, model::Label y, int n, int k) {
  AdversaryMove out;
  out.is_joint = move.is_joint;
  if (move.is_joint) {
    out.dist = model::Distribution::point_mass(n * k, x * k + y);
  } else {
    out.dist = model::Distribution::point_mass(n, x);
    out.support_labels.assign(static_cast<std::size_t>(n), -1);
    out.support_labels[static_cast<std::size_t>(x)] = y;
  }
  return out;
}

model::Hypothesis preparation_target(const AdversaryMove& move) {
  model::Hypothesis h;
  h.labels = move.support_labels;
  for (model::Label& y : h.labels)
    if (y < 0) y = 0;  // off-support, carries zero amplitude
  return h;
}

class SoaLearner final : public Learner {
 public:
  explicit SoaLearner(const model::HypothesisClass& cls) : cls_(cls), cache_(cls_) {
    if (cls_.empty()) throw ArgumentError("version-space learner needs a nonempty class");
    alive_.resize(cls_.size());
    for (std::size_t i = 0; i < alive_.size(); ++i) alive_[i] = static_cast<int>(i);
  }

  model::Hypothesis propose(Rng&) override {
    model::Hypothesis h;
    h.labels.assign(static_cast<std::size_t>(cls_.domain_size), 0);
    std::vector<int> bucket;
    for (int x = 0; x < cls_.domain_size; ++x) {
      int best_y = 0;
      int best_dim = std::numeric_limits<int>::min();
      for (model::Label y = 0; y < cls_.num_labels; ++y) {
        bucket.clear();
        for (int i : alive_)
          if (cls_[i](x) == y) bucket.push_back(i);
        const int d = cache_.dim(bucket);
        if (d > best_dim) {
          best_dim = d;
          best_y = y;
        }
      }
      h.labels[static_cast<std::size_t>(x)] = best_y;
    }
    return h;
  }

  void observe(const model::LabeledExample& ex) override {
    std::vector<int> next;
    for (int i : alive_)
      if (cls_[i](ex.x) == ex.y) next.push_back(i);
    if (next.empty())
      throw ProtocolViolationError("revealed example is inconsistent with every member");
    alive_ = std::move(next);
  }

 private:
  model::HypothesisClass cls_;
  dims::MulticlassDimCache cache_;
  std::vector<int> alive_;
};

class MwLearner final : public Learner {
 public:
  MwLearner(const model::HypothesisClass& cls, int rounds, std::optional<double> eta)
      : cls_(cls) {
    if (cls_.empty()) throw ArgumentError("weights learner needs a nonempty class");
    if (rounds < 1) throw RangeError("rounds must be at least 1");
    eta_ = eta ? *eta
               : std::sqrt(8.0 * std::log(static_cast<double>(cls_.size())) /
                           static_cast<double>(rounds));
    if (!(eta_ >= 0.0) || !std::isfinite(eta_))
      throw RangeError("learning rate must be finite and nonnegative");
    decay_ = std::exp(-eta_);
    weights_.assign(cls_.size(), 1.0);
  }

  model::Hypothesis propose(Rng& rng) override { return cls_[rng.sample(weights_)]; }

  void observe(const model::LabeledExample& ex) override {
    double top = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      if (cls_[static_cast<int>(i)](ex.x) != ex.y) weights_[i] *= decay_;
      top = std::max(top, weights_[i]);
    }
    if (top < 1e-150)  // rescale before the whole vector underflows
      for (double& w : weights_) w /= top;
  }

 private:
  model::HypothesisClass cls_;
  double eta_ = 0.0;
  double decay_ = 1.0;
  std::vector<double> weights_;
};

class MeasureAndLearn final : public Learner {
 public:
  explicit MeasureAndLearn(std::unique_ptr<Learner> inner) : inner_(std::move(inner)) {
    if (!inner_) throw ArgumentError("measuring front end needs an inner learner");
  }

  model::Hypothesis propose(Rng& rng) override { return inner_->propose(rng); }
  void observe(const model::LabeledExample& ex) override { inner_->observe(ex); }

  model::LabeledExample receive_state(const qsim::StateVector& state,
                                      const qsim::RegisterLayout& layout, int n, int k,
                                      Rng& rng) override {
    const auto m = qsim::measure_computational(state, rng);
    const int x = static_cast<int>(layout.field(m.outcome, "x"));
    const int y = static_cast<int>(layout.field(m.outcome, "y"));
    if (x >= n || y >= k)
      throw CircuitFaultError("measured an example outside the domain");
    const model::LabeledExample ex{x, y};
    inner_->observe(ex);
    return ex;
  }

 private:
  std::unique_ptr<Learner> inner_;
};

class PointMassAdversary final : public Adversary {
 public:
  explicit PointMassAdversary(std::vector<model::LabeledExample> seq) : seq_(std::move(seq)) {
    if (seq_.empty()) throw ArgumentError("replay adversary needs a nonempty sequence");
  }

  void begin(const ProtocolConfig& config, const model::HypothesisClass& cls) override {
    n_ = cls.domain_size;
    k_ = cls.num_labels;
    joint_ = !config.realizable;
    for (const auto& ex : seq_)
      if (ex.x < 0 || ex.x >= n_ || ex.y < 0 || ex.y >= k_)
        throw ArgumentError("replay sequence leaves the example domain");
  }

  AdversaryMove choose(int t, const model::Hypothesis&, Rng&) override {
    const auto& ex = seq_[std::min<std::size_t>(static_cast<std::size_t>(t - 1),
                                                seq_.size() - 1)];
    AdversaryMove mv;
    mv.is_joint = joint_;
    if (joint_) {
      mv.dist = model::Distribution::point_mass(n_ * k_, ex.x * k_ + ex.y);
    } else {
      mv.dist = model::Distribution::point_mass(n_, ex.x);
      mv.support_labels.assign(static_cast<std::size_t>(n_), -1);
      mv.support_labels[static_cast<std::size_t>(ex.x)] = ex.y;
    }
    return mv;
  }

 private:
  std::vector<model::LabeledExample> seq_;
  int n_ = 0;
  int k_ = 0;
  bool joint_ = false;
};

class TreeAdversary final : public Adversary {
 public:
  TreeAdversary(const model::HypothesisClass& cls, trees::MistakeTree tree)
      : cls_(cls), tree_(std::move(tree)) {}

  void begin(const ProtocolConfig& config, const model::HypothesisClass& cls) override {
    if (!config.realizable)
      throw ArgumentError("tree adversary plays realizable sequences only");
    if (cls.domain_size != cls_.domain_size || cls.num_labels != cls_.num_labels ||
        cls.members != cls_.members)
      throw ArgumentError("tree adversary was built for a different class");
    if (!trees::verify_L_shattered(cls_, tree_))
      throw InvalidCertificateError("tree is not shattered by the class");
    level_ = 0;
    pos_ = 0;
    constraints_.clear();
    committed_.reset();
  }

  AdversaryMove choose(int, const model::Hypothesis& h, Rng&) override {
    int x;
    model::Label y;
    if (level_ < tree_.depth) {
      const auto& node = tree_.nodes[static_cast<std::size_t>(pos_)];
      x = node.point;
      // Answer with the sibling edge the prediction misses.
      const int edge = node.edge_labels[0] != h(x) ? 0 : 1;
      y = node.edge_labels[static_cast<std::size_t>(edge)];
      constraints_.push_back({x, y});
      pos_ = 2 * pos_ + 1 + edge;
      ++level_;
    } else {
      if (!committed_) commit();
      x = next_replay_ % cls_.domain_size;
      ++next_replay_;
      y = (*committed_)(x);
    }
    AdversaryMove mv;
    mv.dist = model::Distribution::point_mass(cls_.domain_size, x);
    mv.support_labels.assign(static_cast<std::size_t>(cls_.domain_size), -1);
    mv.support_labels[static_cast<std::size_t>(x)] = y;
    return mv;
  }

 private:
  void commit() {
    for (std::size_t i = 0; i < static_cast<std::size_t>(cls_.size()); ++i) {
      bool ok = true;
      for (const auto& c : constraints_)
        if (cls_[static_cast<int>(i)](c.x) != c.y) {
          ok = false;
          break;
        }
      if (ok) {
        committed_ = cls_[static_cast<int>(i)];
        return;
      }
    }
    throw InternalInvariantError("no member realizes the traversed branch");
  }

  model::HypothesisClass cls_;
  trees::MistakeTree tree_;
  int level_ = 0;
  int pos_ = 0;
  int next_replay_ = 0;
  std::vector<model::LabeledExample> constraints_;
  std::optional<model::Hypothesis> committed_;
};

class StochasticAdversary final : public Adversary {
 public:
  StochasticAdversary(model::Distribution d, model::Hypothesis target)
      : d_(std::move(d)), target_(std::move(target)) {}

  void begin(const ProtocolConfig& config, const model::HypothesisClass& cls) override {
    if (!config.realizable)
      throw ArgumentError("labeled stochastic adversary needs a realizable run");
    if (d_.support_size() != cls.domain_size ||
        target_.domain_size() != cls.domain_size)
      throw ArgumentError("stochastic adversary does not match the class domain");
    d_.validate();
    for (model::Label y : target_.labels)
      if (y < 0 || y >= cls.num_labels)
        throw ArgumentError("stochastic target uses an out-of-range label");
  }

  AdversaryMove choose(int, const model::Hypothesis&, Rng&) override {
    AdversaryMove mv;
    mv.dist = d_;
    mv.support_labels = target_.labels;
    return mv;
  }

 private:
  model::Distribution d_;
  model::Hypothesis target_;
};

class StochasticJointAdversary final : public Adversary {
 public:
  explicit StochasticJointAdversary(model::Distribution joint) : joint_(std::move(joint)) {}

  void begin(const ProtocolConfig& config, const model::HypothesisClass& cls) override {
    if (config.realizable)
      throw ArgumentError("joint stochastic adversary needs an agnostic run");
    if (joint_.support_size() != cls.domain_size * cls.num_labels)
      throw ArgumentError("joint distribution does not match the example domain");
    joint_.validate();
  }

  AdversaryMove choose(int, const model::Hypothesis&, Rng&) override {
    AdversaryMove mv;
    mv.dist = joint_;
    mv.is_joint = true;
    return mv;
  }

 private:
  model::Distribution joint_;
};

}  // namespace

void ProtocolConfig::validate() const {
  if (rounds < 1) throw RangeError("rounds must be at least 1");
  if (mistake_threshold) {
    const double e = *mistake_threshold;
    if (!(e > 0.0) || !(e < 1.0)) throw RangeError("mistake threshold must lie in (0,1)");
  }
}

model::LabeledExample Learner::receive_state(const qsim::StateVector&,
                                             const qsim::RegisterLayout&, int, int, Rng&) {
  throw ArgumentError("this learner cannot consume example states; wrap it with a measuring front end");
}

void Adversary::begin(const ProtocolConfig&, const model::HypothesisClass&) {}
void Adversary::observe(const model::LabeledExample&) {}

std::unique_ptr<Learner> make_soa_learner(const model::HypothesisClass& cls) {
  return std::make_unique<SoaLearner>(cls);
}

std::unique_ptr<Learner> make_mw_learner(const model::HypothesisClass& cls, int rounds,
                                         std::optional<double> eta) {
  return std::make_unique<MwLearner>(cls, rounds, eta);
}

std::unique_ptr<Learner> make_measure_and_learn(std::unique_ptr<Learner> inner) {
  return std::make_unique<MeasureAndLearn>(std::move(inner));
}

std::unique_ptr<Adversary> make_point_mass_adversary(std::vector<model::LabeledExample> seq) {
  return std::make_unique<PointMassAdversary>(std::move(seq));
}

std::unique_ptr<Adversary> make_tree_adversary(const model::HypothesisClass& cls,
                                               const trees::MistakeTree& tree) {
  return std::make_unique<TreeAdversary>(cls, tree);
}

std::unique_ptr<Adversary> make_stochastic_adversary(model::Distribution d,
                                                     model::Hypothesis target) {
  return std::make_unique<StochasticAdversary>(std::move(d), std::move(target));
}

std::unique_ptr<Adversary> make_stochastic_joint_adversary(model::Distribution joint) {
  return std::make_unique<StochasticJointAdversary>(std::move(joint));
}

Transcript run_protocol(const ProtocolConfig& config, const model::HypothesisClass& cls,
                        Learner& learner, Adversary& adversary, std::uint64_t seed) {
  config.validate();
  cls.validate();
  if (cls.empty()) throw ArgumentError("protocol needs a nonempty class");
  const int n = cls.domain_size;
  const int k = cls.num_labels;

  Transcript tr;
  tr.config = config;
  tr.domain_size = n;
  tr.num_labels = k;
  tr.seed = seed;
  tr.rounds.reserve(static_cast<std::size_t>(config.rounds));

  adversary.begin(config, cls);

  const qsim::RegisterLayout layout = qsim::RegisterLayout::example(n, k);
  std::vector<char> alive(cls.size(), 1);
  double quad = 0.0;

  for (int t = 1; t <= config.rounds; ++t) {
    Rng learner_rng = Rng::derive(seed, kLearnerTag, static_cast<std::uint64_t>(t));
    Rng env_rng = Rng::derive(seed, kEnvTag, static_cast<std::uint64_t>(t));
    Rng realize_rng = Rng::derive(seed, kRealizeTag, static_cast<std::uint64_t>(t));

    model::Hypothesis h = learner.propose(learner_rng);
    check_hypothesis(h, n, k);

    AdversaryMove move = adversary.choose(t, h, env_rng);
    check_move(move, config, n, k);

    RoundRecord rec;
    rec.t = t;
    rec.hypothesis = h;

    model::LabeledExample ex;
    switch (config.model) {
      case Model::classical_input: {
        // Realize immediately and re-record the move as the drawn point
        // mass, so the distributional loss coincides with the indicator.
        int x, y;
        if (move.is_joint) {
          const int z = move.dist.is_point_mass() ? point_of(move.dist)
                                                  : realize_rng.sample(move.dist.probs);
          x = z / k;
          y = z % k;
        } else {
          x = move.dist.is_point_mass() ? point_of(move.dist)
                                        : realize_rng.sample(move.dist.probs);
          y = move.support_labels[static_cast<std::size_t>(x)];
        }
        move = collapse_to_point(move, x, y, n, k);
        ex = {x, y};
        rec.prob_loss = move_prob_loss(move, h, k);
        learner.observe(ex);
        break;
      }
      case Model::classical_distribution: {
        rec.prob_loss = move_prob_loss(move, h, k);
        if (move.is_joint) {
          const int z = realize_rng.sample(move.dist.probs);
          ex = {z / k, z % k};
        } else {
          const int x = realize_rng.sample(move.dist.probs);
          ex = {x, move.support_labels[static_cast<std::size_t>(x)]};
        }
        learner.observe(ex);
        break;
      }
      case Model::quantum: {
        rec.prob_loss = move_prob_loss(move, h, k);
        const qsim::StateVector state =
            move.is_joint ? qsim::prepare_agnostic_example(move.dist, n, k, layout)
                          : qsim::prepare_realizable_example(move.dist,
                                                             preparation_target(move), layout);
        ex = learner.receive_state(state, layout, n, k, realize_rng);
        if (ex.x < 0 || ex.x >= n || ex.y < 0 || ex.y >= k)
          throw ProtocolViolationError("learner reported an out-of-range example");
        break;
      }
    }

    rec.move = move;
    rec.realized = ex;
    rec.indicator_loss = h(ex.x) != ex.y ? 1 : 0;
    rec.increment = rec.prob_loss - rec.indicator_loss;
    quad += rec.prob_loss * (1.0 - rec.prob_loss);
    rec.quad_variation = quad;
    if (config.mistake_threshold)
      rec.threshold_mistake = rec.prob_loss > *config.mistake_threshold ? 1 : 0;

    adversary.observe(ex);

    if (config.realizable) {
      bool any = false;
      for (std::size_t i = 0; i < static_cast<std::size_t>(cls.size()); ++i) {
        if (!alive[i]) continue;
        for (int x = 0; x < n; ++x)
          if (rec.move.dist(x) > 0.0 &&
              cls[static_cast<int>(i)](x) != rec.move.support_labels[static_cast<std::size_t>(x)]) {
            alive[i] = 0;
            break;
          }
        any = any || alive[i];
      }
      if (!any)
        throw ProtocolViolationError("no member stays consistent with the revealed rounds");
    }

    tr.total_prob_loss += rec.prob_loss;
    tr.total_indicator_loss += rec.indicator_loss;
    tr.rounds.push_back(std::move(rec));
  }

  tr.regret = regret_eval(tr, cls);
  return tr;
}

RegretRecord regret_eval(const Transcript& tr, const model::HypothesisClass& cls) {
  if (cls.empty()) throw ArgumentError("regret needs a nonempty class");
  if (cls.domain_size != tr.domain_size || cls.num_labels != tr.num_labels)
    throw ArgumentError("class does not match the transcript's example domain");
  const int k = tr.num_labels;

  RegretRecord out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < static_cast<std::size_t>(cls.size()); ++i) {
    double s = 0.0;
    for (const auto& rec : tr.rounds) s += move_prob_loss(rec.move, cls[static_cast<int>(i)], k);
    best = std::min(best, s);
  }
  out.agnostic = tr.total_prob_loss - best;

  if (tr.config.realizable) {
    double worst = -1.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(cls.size()); ++i) {
      const auto& member = cls[static_cast<int>(i)];
      bool consistent = true;
      for (const auto& rec : tr.rounds)
        if (move_prob_loss(rec.move, member, k) != 0.0) {
          consistent = false;
          break;
        }
      if (!consistent) continue;
      double s = 0.0;
      for (const auto& rec : tr.rounds)
        s += disagreement_mass(rec.move, rec.hypothesis, member, k);
      worst = std::max(worst, s);
    }
    if (worst >= 0.0) out.realizable = worst;
  }
  return out;
}

MartingaleReport martingale_report(const std::vector<Transcript>& transcripts,
                                   const model::HypothesisClass& cls,
                                   const std::vector<double>& deltas) {
  if (transcripts.empty()) throw ArgumentError("summary needs at least one transcript");
  const int T = transcripts.front().config.rounds;
  if (T < 4) throw RangeError("summary needs at least 4 rounds");
  for (const auto& tr : transcripts) {
    if (tr.config.rounds != T || static_cast<int>(tr.rounds.size()) != T)
      throw ArgumentError("transcripts must share one round count");
    if (!tr.config.realizable)
      throw ArgumentError("summary covers realizable runs only");
    if (tr.config.model == Model::classical_input)
      throw ArgumentError("increments are identically zero in the input model");
    if (tr.domain_size != cls.domain_size || tr.num_labels != cls.num_labels)
      throw ArgumentError("class does not match the transcripts");
  }
  for (double d : deltas)
    if (!(d > 0.0)) throw RangeError("exceedance levels must be positive");

  MartingaleReport rep;
  rep.dim = dims::mc_littlestone_dim(cls).value;
  rep.loglog_rounds = std::log(std::log(static_cast<double>(T)));

  const double runs = static_cast<double>(transcripts.size());
  rep.mean_increment.assign(static_cast<std::size_t>(T), 0.0);
  rep.stdev_increment.assign(static_cast<std::size_t>(T), 0.0);
  for (int t = 0; t < T; ++t) {
    double s = 0.0, sq = 0.0;
    for (const auto& tr : transcripts) {
      const double m = tr.rounds[static_cast<std::size_t>(t)].increment;
      s += m;
      sq += m * m;
    }
    const double mean = s / runs;
    rep.mean_increment[static_cast<std::size_t>(t)] = mean;
    rep.stdev_increment[static_cast<std::size_t>(t)] =
        std::sqrt(std::max(0.0, sq / runs - mean * mean));
  }

  rep.quad_variation_slack.reserve(transcripts.size());
  for (const auto& tr : transcripts)
    rep.quad_variation_slack.push_back(tr.total_prob_loss + rep.dim -
                                       tr.rounds.back().quad_variation);

  for (double d : deltas) {
    MartingaleReport::Exceedance e;
    e.delta = d;
    e.bound = 8.0 * rep.dim + 256.0 * rep.loglog_rounds + 256.0 * d;
    int over = 0;
    for (const auto& tr : transcripts)
      if (tr.total_prob_loss > e.bound) ++over;
    e.frequency = over / runs;
    e.target = std::exp(-d);
    rep.exceedance.push_back(e);
  }
  return rep;
}

}  // namespace qlab::online
