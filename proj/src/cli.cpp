#include "qlab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qlab/batch.hpp"
#include "qlab/dims.hpp"
#include "qlab/errors.hpp"
#include "qlab/model.hpp"
#include "qlab/online.hpp"
#include "qlab/qsim.hpp"
#include "qlab/rng.hpp"
#include "qlab/trees.hpp"

namespace qlab::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";
constexpr const char* kCsvMagic = "# qlab-csv v1 ";
constexpr std::uint64_t kTrialTag = 0x434c4954ULL;
constexpr std::uint64_t kSampleTag = 0x534d504cULL;

// When a config file drives the run, its contents are echoed into the
// manifest instead of the synthesized flag set.
const json* g_config_echo = nullptr;

struct EchoGuard {
  explicit EchoGuard(const json* j) : prev(g_config_echo) { g_config_echo = j; }
  ~EchoGuard() { g_config_echo = prev; }
  const json* prev;
};

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_brief(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt_hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Versioned CSV accumulator; first line names the schema.
class Csv {
 public:
  Csv(const std::string& schema, const std::vector<std::string>& cols) {
    body_ = kCsvMagic + schema + "\n";
    append_row(cols);
  }
  void row(const std::vector<std::string>& cells) { append_row(cells); }
  const std::string& str() const { return body_; }

 private:
  void append_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) body_ += ',';
      body_ += cells[i];
    }
    body_ += '\n';
  }
  std::string body_;
};

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw ConfigError("write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

// Outputs accumulate in memory and hit the disk only on commit, so a
// failure anywhere leaves no partial files behind.
class OutputStage {
 public:
  explicit OutputStage(std::string dir) : dir_(std::move(dir)) {}

  void add(const std::string& name, std::string content) {
    outputs_.push_back({name, std::move(content)});
  }

  void commit(const json& echo, std::uint64_t seed) {
    fs::create_directories(dir_);
    json manifest;
    manifest["artifact"] = "qlab";
    manifest["version"] = kVersion;
    manifest["config"] = g_config_echo ? *g_config_echo : echo;
    manifest["seed"] = seed;
    manifest["outputs"] = json::array();
    for (const auto& [name, content] : outputs_) {
      write_file_atomic(fs::path(dir_) / name, content);
      manifest["outputs"].push_back(
          {{"file", name}, {"bytes", content.size()}, {"fnv1a64", fmt_hex64(fnv1a64(content))}});
    }
    write_file_atomic(fs::path(dir_) / "manifest.json", manifest.dump(2) + "\n");
  }

 private:
  struct Output {
    std::string name;
    std::string content;
  };
  std::string dir_;
  std::vector<Output> outputs_;
};

// --- Input loading (malformed inputs are configuration errors) ------------

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename F>
auto load_or_config(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const qlab::Error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

model::HypothesisClass load_class(const std::string& path) {
  return load_or_config("class file " + path,
                        [&] { return model::parse_class_file(path); });
}

model::Distribution load_distribution(const std::string& path) {
  return load_or_config("distribution file " + path,
                        [&] { return model::parse_distribution_file(path); });
}

trees::MistakeTree load_tree(const std::string& path) {
  return load_or_config("tree file " + path, [&] { return trees::parse_tree_file(path); });
}

std::vector<model::LabeledExample> load_sequence(const std::string& path) {
  const std::string text = slurp(path);
  std::istringstream in(text);
  std::vector<model::LabeledExample> seq;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    int x = 0, y = 0;
    if (!(row >> x)) continue;  // blank line
    if (!(row >> y)) throw ConfigError("sequence file " + path + ": line needs 'x y'");
    seq.push_back({x, y});
  }
  if (seq.empty()) throw ConfigError("sequence file " + path + ": no examples");
  return seq;
}

json load_json(const std::string& path) {
  const std::string text = slurp(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
}

// --- dims ------------------------------------------------------------------

struct DimsComputeArgs {
  std::string class_file;
  std::string dim;
  std::string out = ".";
};

dims::DimensionResult compute_dimension(const model::HypothesisClass& cls,
                                        const std::string& name) {
  if (name == "vc") return dims::vc_dim(cls);
  if (name == "natarajan") return dims::natarajan_dim(cls);
  if (name == "ldim") return dims::littlestone_dim(cls);
  if (name == "mcldim") return dims::mc_littlestone_dim(cls);
  return dims::bandit_littlestone_dim(cls);
}

int cmd_dims_compute(const DimsComputeArgs& a) {
  const model::HypothesisClass cls = load_class(a.class_file);
  const dims::DimensionResult res = compute_dimension(cls, a.dim);

  std::ostringstream cert;
  if (res.set_certificate)
    dims::serialize_set_certificate(*res.set_certificate, cert);
  else if (res.tree_certificate)
    trees::serialize_tree(*res.tree_certificate, cert);
  else
    cert << "none\n";

  OutputStage stage(a.out);
  stage.add("certificate.txt", cert.str());
  stage.commit({{"command", "dims compute"},
                {"class_file", a.class_file},
                {"dim", a.dim},
                {"out_dir", a.out}},
               0);
  std::cout << res.value << "\n";
  return 0;
}

struct DimsVerifyArgs {
  std::string class_file;
  std::string dim;
  std::string cert_file;
};

int cmd_dims_verify(const DimsVerifyArgs& a) {
  const model::HypothesisClass cls = load_class(a.class_file);
  const std::string text = slurp(a.cert_file);
  bool ok = false;
  if (a.dim == "vc" || a.dim == "natarajan") {
    const dims::SetCertificate cert =
        load_or_config("certificate file " + a.cert_file, [&] {
          std::istringstream in(text);
          return dims::parse_set_certificate(in);
        });
    ok = a.dim == "vc" ? trees::verify_shattered_set(cls, cert.points)
                       : trees::verify_n_shattered(cls, cert.points, cert.f0, cert.f1);
  } else {
    const trees::MistakeTree tree =
        load_or_config("certificate file " + a.cert_file, [&] {
          std::istringstream in(text);
          return trees::parse_tree(in);
        });
    if (a.dim == "ldim")
      ok = trees::verify_L_shattered(cls, tree);
    else if (a.dim == "mcldim")
      ok = trees::verify_mcL_shattered(cls, tree);
    else
      ok = trees::verify_BL_shattered(cls, tree);
  }
  std::cout << (ok ? "valid" : "invalid") << "\n";
  return ok ? 0 : 3;
}

// --- lossclass chain ---------------------------------------------------------

struct ChainArgs {
  std::string class_file;
  std::string out;  // empty: console only
};

int cmd_chain(const ChainArgs& a) {
  const model::HypothesisClass cls = load_class(a.class_file);
  const trees::ChainReport rep = trees::dim_chain_report(cls);
  std::cout << "ldim_loss=" << rep.ldim_loss << " bldim=" << rep.bldim
            << " mcldim=" << rep.mcldim << " bound_4klogk=" << fmt_brief(rep.bound_4klogk)
            << "\n";
  if (!a.out.empty()) {
    Csv csv("chain", {"ldim_loss", "bldim", "mcldim", "bound_4klogk"});
    csv.row({std::to_string(rep.ldim_loss), std::to_string(rep.bldim),
             std::to_string(rep.mcldim), fmt_double(rep.bound_4klogk)});
    OutputStage stage(a.out);
    stage.add("chain.csv", csv.str());
    stage.commit({{"command", "lossclass chain"},
                  {"class_file", a.class_file},
                  {"out_dir", a.out}},
                 0);
  }
  return 0;
}

// --- quantum ----------------------------------------------------------------

struct CircuitTestArgs {
  int n = 1;
  int k = 3;
  bool exhaustive = false;
};

int cmd_circuit_test(const CircuitTestArgs& a) {
  if (a.n < 1 || a.n > 8) throw RangeError("circuit-test: n must be in [1, 8]");
  if (a.k < 2 || a.k > 4) throw RangeError("circuit-test: k must be in [2, 4]");

  const int n = a.n, k = a.k;
  double pair_count = 1.0;
  for (int i = 0; i < n; ++i) pair_count *= static_cast<double>(k) * (k - 1);
  const double total_cases = pair_count * std::ldexp(1.0, n) * 2.0;
  if (a.exhaustive && total_cases > 2.0e6)
    throw SizeLimitError("circuit-test: exhaustive case count too large");
  const long long case_cap = a.exhaustive ? -1 : 60;

  const qlab::qsim::RegisterLayout layout = qsim::RegisterLayout::reduction(n, k);
  const qlab::qsim::RegisterLayout ex_layout = qsim::RegisterLayout::example(n, k);

  std::vector<model::Distribution> dists;
  dists.push_back(model::Distribution::uniform(n));
  {
    model::Distribution ramp;
    ramp.probs.resize(static_cast<std::size_t>(n));
    const double denom = n * (n + 1) / 2.0;
    for (int i = 0; i < n; ++i) ramp.probs[static_cast<std::size_t>(i)] = (i + 1) / denom;
    dists.push_back(ramp);
  }

  double max_dev = 0.0, max_residual = 0.0;
  long long cases = 0;
  bool done = false;

  std::vector<model::Label> f0(static_cast<std::size_t>(n), 0);
  std::vector<model::Label> f1(static_cast<std::size_t>(n), 0);
  std::vector<int> alt(static_cast<std::size_t>(n), 0);  // base (k-1) offset digits

  // Base-k counter over f0; for each f0, base-(k-1) counter over the
  // offsets giving every f1 with pointwise disagreement.
  auto advance = [](std::vector<int>& digits, int base) {
    for (std::size_t i = digits.size(); i-- > 0;) {
      if (++digits[i] < base) return true;
      digits[i] = 0;
    }
    return false;
  };

  std::vector<int> f0d(static_cast<std::size_t>(n), 0);
  do {
    for (int i = 0; i < n; ++i) f0[static_cast<std::size_t>(i)] = f0d[static_cast<std::size_t>(i)];
    std::fill(alt.begin(), alt.end(), 0);
    do {
      for (int i = 0; i < n; ++i)
        f1[static_cast<std::size_t>(i)] =
            (f0[static_cast<std::size_t>(i)] + 1 + alt[static_cast<std::size_t>(i)]) % k;
      for (int cbits = 0; cbits < (1 << n) && !done; ++cbits) {
        for (const model::Distribution& d : dists) {
          qsim::StateVector in(layout.total_qubits());
          for (int x = 0; x < n; ++x) {
            const int cx = (cbits >> x) & 1;
            std::uint64_t basis = layout.with_field(0, "x", static_cast<std::uint64_t>(x));
            basis = layout.with_field(basis, "y", static_cast<std::uint64_t>(cx));
            in.amps[basis] += std::sqrt(d(x));
          }
          const qsim::StateVector out = qsim::binary_to_multiclass_transform(in, f0, f1, layout);
          for (std::size_t b = 0; b < out.amps.size(); ++b) {
            const double mag = std::abs(out.amps[b]);
            if (mag == 0.0) continue;
            if (layout.field(b, "y") || layout.field(b, "notY") || layout.field(b, "f0") ||
                layout.field(b, "f1"))
              max_residual = std::max(max_residual, mag);
          }
          const qsim::StateVector got = qsim::extract_example_state(out, layout, n, k);
          qsim::StateVector expect(ex_layout.total_qubits());
          for (int x = 0; x < n; ++x) {
            const int cx = (cbits >> x) & 1;
            const model::Label fy =
                cx ? f1[static_cast<std::size_t>(x)] : f0[static_cast<std::size_t>(x)];
            std::uint64_t basis = ex_layout.with_field(0, "x", static_cast<std::uint64_t>(x));
            basis = ex_layout.with_field(basis, "y", static_cast<std::uint64_t>(fy));
            expect.amps[basis] += std::sqrt(d(x));
          }
          for (std::size_t b = 0; b < got.amps.size(); ++b)
            max_dev = std::max(max_dev, std::abs(got.amps[b] - expect.amps[b]));
          ++cases;
          if (case_cap > 0 && cases >= case_cap) {
            done = true;
            break;
          }
        }
      }
    } while (!done && advance(alt, k - 1));
  } while (!done && advance(f0d, k));

  char line[128];
  std::snprintf(line, sizeof line, "cases=%lld\nmax_amplitude_deviation=%.3e\nancilla_residual=%.3e\n",
                cases, max_dev, max_residual);
  std::cout << line;
  return 0;
}

struct SampleArgs {
  std::string dist_file;
  std::string target_file;
  int target_row = 0;
  int shots = 1;
  std::uint64_t seed = 0;
  std::string out = ".";
};

int cmd_quantum_sample(const SampleArgs& a) {
  const model::Distribution d = load_distribution(a.dist_file);
  const model::HypothesisClass target_cls = load_class(a.target_file);
  if (a.target_row < 0 || a.target_row >= target_cls.size())
    throw ConfigError("sample: target row out of range");
  const model::Hypothesis target = target_cls[a.target_row];
  const int n = target_cls.domain_size;
  const int k = target_cls.num_labels;
  if (d.support_size() != n)
    throw ArgumentError("sample: distribution support != target domain");
  if (a.shots < 1) throw RangeError("sample: shots must be >= 1");

  const qsim::RegisterLayout layout = qsim::RegisterLayout::example(n, k);
  const qsim::StateVector state = qsim::prepare_realizable_example(d, target, layout);
  Rng rng = Rng::derive(a.seed, kSampleTag);

  std::map<std::pair<int, int>, long long> counts;
  for (int s = 0; s < a.shots; ++s) {
    const qsim::MeasureResult r = qsim::measure_computational(state, rng);
    const int x = static_cast<int>(layout.field(r.outcome, "x"));
    const int y = static_cast<int>(layout.field(r.outcome, "y"));
    ++counts[{x, y}];
  }

  Csv csv("sample-counts", {"x", "y", "count"});
  for (const auto& [key, count] : counts)
    csv.row({std::to_string(key.first), std::to_string(key.second), std::to_string(count)});

  OutputStage stage(a.out);
  stage.add("sample_counts.csv", csv.str());
  stage.commit({{"command", "quantum sample"},
                {"dist_file", a.dist_file},
                {"target_file", a.target_file},
                {"target_row", a.target_row},
                {"shots", a.shots},
                {"seed", a.seed},
                {"out_dir", a.out}},
               a.seed);
  std::cout << "shots=" << a.shots << " distinct_outcomes=" << counts.size() << "\n";
  return 0;
}

// --- batch -------------------------------------------------------------------

struct BatchArgs {
  bool agnostic = false;
  std::string class_file;
  std::string dist_file;
  int target_row = 0;
  double epsilon = 0.1;
  double delta = 0.1;
  int m = 0;
  int trials = 1;
  std::uint64_t seed = 0;
  std::string out = ".";
};

int cmd_batch(const BatchArgs& a) {
  const model::HypothesisClass cls = load_class(a.class_file);
  const model::Distribution d = load_distribution(a.dist_file);
  batch::PacParams params;
  params.epsilon = a.epsilon;
  params.delta = a.delta;
  params.m = a.m;
  params.trials = a.trials;
  params.seed = a.seed;

  std::vector<double> values;
  if (a.agnostic) {
    values = batch::agnostic_trial_regrets(cls, d, params);
  } else {
    if (a.target_row < 0 || a.target_row >= cls.size())
      throw ConfigError("batch: target row out of range");
    values = batch::pac_trial_errors(cls, d, cls[a.target_row], params);
  }

  int successes = 0;
  Csv trials_csv("batch-trials", {"trial", "value", "success"});
  for (std::size_t i = 0; i < values.size(); ++i) {
    const bool ok = values[i] <= a.epsilon;
    successes += ok ? 1 : 0;
    trials_csv.row({std::to_string(i), fmt_double(values[i]), ok ? "1" : "0"});
  }
  const double rate = static_cast<double>(successes) / a.trials;

  Csv summary("batch-summary",
              {"mode", "n", "k", "m", "epsilon", "delta", "trials", "seed", "success_rate"});
  summary.row({a.agnostic ? "agnostic" : "pac", std::to_string(cls.domain_size),
               std::to_string(cls.num_labels), std::to_string(a.m), fmt_double(a.epsilon),
               fmt_double(a.delta), std::to_string(a.trials), std::to_string(a.seed),
               fmt_double(rate)});

  OutputStage stage(a.out);
  stage.add("batch_trials.csv", trials_csv.str());
  stage.add("batch_summary.csv", summary.str());
  stage.commit({{"command", a.agnostic ? "batch agnostic" : "batch pac"},
                {"class_file", a.class_file},
                {"dist_file", a.dist_file},
                {"target_row", a.target_row},
                {"epsilon", a.epsilon},
                {"delta", a.delta},
                {"m", a.m},
                {"trials", a.trials},
                {"seed", a.seed},
                {"out_dir", a.out}},
               a.seed);
  std::cout << "success_rate=" << fmt_brief(rate) << "\n";
  return 0;
}

// --- online ------------------------------------------------------------------

struct OnlineArgs {
  std::string model = "input";
  std::string class_file;
  std::string learner = "soa";
  std::string adversary = "point";
  int T = 1;
  std::vector<int> T_grid;
  int trials = 1;
  std::uint64_t seed = 0;
  bool agnostic = false;
  std::string seq_file;
  std::string tree_file;
  std::string dist_file;
  int target_row = 0;
  double eta = -1.0;  // < 0: use the learner default
  double threshold = 0.0;  // 0: disabled
  std::string out = ".";
};

online::Model parse_model(const std::string& name) {
  if (name == "input") return online::Model::classical_input;
  if (name == "dist") return online::Model::classical_distribution;
  return online::Model::quantum;
}

std::vector<online::Transcript> run_online_trials(const OnlineArgs& a,
                                                  const model::HypothesisClass& cls, int T) {
  online::ProtocolConfig config;
  config.model = parse_model(a.model);
  config.rounds = T;
  config.realizable = !a.agnostic;
  if (a.threshold != 0.0) config.mistake_threshold = a.threshold;

  // Adversary inputs load once; each trial gets fresh participants.
  std::optional<std::vector<model::LabeledExample>> seq;
  std::optional<trees::MistakeTree> tree;
  std::optional<model::Distribution> dist;
  if (a.adversary == "point") {
    if (a.seq_file.empty()) throw ConfigError("online: point adversary needs --seq FILE");
    seq = load_sequence(a.seq_file);
  } else if (a.adversary == "tree") {
    if (a.agnostic) throw ConfigError("online: tree adversary is realizable only");
    if (!a.tree_file.empty()) {
      tree = load_tree(a.tree_file);
    } else {
      const dims::DimensionResult res = dims::littlestone_dim(cls);
      if (!res.tree_certificate)
        throw ArgumentError("online: class has no mistake tree to descend");
      tree = *res.tree_certificate;
    }
  } else {
    if (!a.dist_file.empty()) {
      dist = load_distribution(a.dist_file);
    } else {
      dist = model::Distribution::uniform(
          a.agnostic ? cls.domain_size * cls.num_labels : cls.domain_size);
    }
    if (!a.agnostic && (a.target_row < 0 || a.target_row >= cls.size()))
      throw ConfigError("online: target row out of range");
  }

  std::optional<double> eta;
  if (a.eta >= 0.0) eta = a.eta;

  std::vector<online::Transcript> out;
  out.reserve(static_cast<std::size_t>(a.trials));
  for (int trial = 0; trial < a.trials; ++trial) {
    std::unique_ptr<online::Learner> learner =
        a.learner == "soa" ? online::make_soa_learner(cls)
                           : online::make_mw_learner(cls, T, eta);
    if (config.model == online::Model::quantum)
      learner = online::make_measure_and_learn(std::move(learner));

    std::unique_ptr<online::Adversary> adversary;
    if (seq)
      adversary = online::make_point_mass_adversary(*seq);
    else if (tree)
      adversary = online::make_tree_adversary(cls, *tree);
    else if (a.agnostic)
      adversary = online::make_stochastic_joint_adversary(*dist);
    else
      adversary = online::make_stochastic_adversary(*dist, cls[a.target_row]);

    const std::uint64_t trial_seed =
        Rng::derive(a.seed, kTrialTag, static_cast<std::uint64_t>(T),
                    static_cast<std::uint64_t>(trial))
            .next_u64();
    out.push_back(online::run_protocol(config, cls, *learner, *adversary, trial_seed));
  }
  return out;
}

const std::vector<std::string> kSummaryCols = {
    "trial", "model", "learner", "adversary", "realizable", "T",
    "total_prob_loss", "total_indicator_loss", "agnostic_regret", "realizable_regret",
    "threshold_mistakes", "dim", "bound_delta1", "exceeded_delta1"};

void append_summary_rows(Csv& csv, const OnlineArgs& a, int T,
                         const std::vector<online::Transcript>& transcripts, int dim) {
  const bool bounded = T >= 4;
  const double bound = bounded ? 8.0 * dim + 256.0 * std::log(std::log(static_cast<double>(T))) +
                                     256.0 * 1.0
                               : 0.0;
  for (std::size_t i = 0; i < transcripts.size(); ++i) {
    const online::Transcript& tr = transcripts[i];
    long long threshold_mistakes = 0;
    bool have_threshold = false;
    for (const online::RoundRecord& r : tr.rounds)
      if (r.threshold_mistake) {
        have_threshold = true;
        threshold_mistakes += *r.threshold_mistake;
      }
    csv.row({std::to_string(i), a.model, a.learner, a.adversary,
             tr.config.realizable ? "1" : "0", std::to_string(T),
             fmt_double(tr.total_prob_loss), std::to_string(tr.total_indicator_loss),
             fmt_double(tr.regret.agnostic),
             tr.regret.realizable ? fmt_double(*tr.regret.realizable) : "",
             have_threshold ? std::to_string(threshold_mistakes) : "", std::to_string(dim),
             bounded ? fmt_double(bound) : "",
             bounded ? (tr.total_prob_loss > bound ? "1" : "0") : ""});
  }
}

int cmd_online_run(const OnlineArgs& a) {
  const model::HypothesisClass cls = load_class(a.class_file);
  const int dim = dims::mc_littlestone_dim(cls).value;
  const std::vector<online::Transcript> transcripts = run_online_trials(a, cls, a.T);

  Csv rounds("online-rounds", {"trial", "t", "x", "y", "p_loss", "i_loss", "increment"});
  for (std::size_t i = 0; i < transcripts.size(); ++i)
    for (const online::RoundRecord& r : transcripts[i].rounds)
      rounds.row({std::to_string(i), std::to_string(r.t), std::to_string(r.realized.x),
                  std::to_string(r.realized.y), fmt_double(r.prob_loss),
                  std::to_string(r.indicator_loss), fmt_double(r.increment)});

  Csv summary("online-summary", kSummaryCols);
  append_summary_rows(summary, a, a.T, transcripts, dim);

  double mean_loss = 0.0, mean_regret = 0.0;
  for (const online::Transcript& tr : transcripts) {
    mean_loss += tr.total_prob_loss;
    mean_regret += tr.regret.agnostic;
  }
  mean_loss /= static_cast<double>(transcripts.size());
  mean_regret /= static_cast<double>(transcripts.size());

  OutputStage stage(a.out);
  stage.add("online_rounds.csv", rounds.str());
  stage.add("online_summary.csv", summary.str());
  stage.commit({{"command", "online run"},
                {"model", a.model},
                {"class_file", a.class_file},
                {"learner", a.learner},
                {"adversary", a.adversary},
                {"T", a.T},
                {"trials", a.trials},
                {"seed", a.seed},
                {"agnostic", a.agnostic},
                {"out_dir", a.out}},
               a.seed);
  std::cout << "trials=" << a.trials << " mean_total_prob_loss=" << fmt_brief(mean_loss)
            << " mean_agnostic_regret=" << fmt_brief(mean_regret) << "\n";
  return 0;
}

int cmd_online_sweep(const OnlineArgs& a) {
  if (a.T_grid.empty()) throw ConfigError("online sweep: --T-grid must be nonempty");
  const model::HypothesisClass cls = load_class(a.class_file);
  const int dim = dims::mc_littlestone_dim(cls).value;

  Csv summary("online-summary", kSummaryCols);
  Csv sweep("online-sweep",
            {"T", "trials", "mean_agnostic_regret", "mean_total_prob_loss", "regret_ratio"});
  double prev_regret = -1.0;
  for (int T : a.T_grid) {
    const std::vector<online::Transcript> transcripts = run_online_trials(a, cls, T);
    append_summary_rows(summary, a, T, transcripts, dim);
    double mean_loss = 0.0, mean_regret = 0.0;
    for (const online::Transcript& tr : transcripts) {
      mean_loss += tr.total_prob_loss;
      mean_regret += tr.regret.agnostic;
    }
    mean_loss /= static_cast<double>(transcripts.size());
    mean_regret /= static_cast<double>(transcripts.size());
    const bool have_ratio = prev_regret > 0.0;
    sweep.row({std::to_string(T), std::to_string(a.trials), fmt_double(mean_regret),
               fmt_double(mean_loss), have_ratio ? fmt_double(mean_regret / prev_regret) : ""});
    std::cout << "T=" << T << " mean_agnostic_regret=" << fmt_brief(mean_regret)
              << " mean_total_prob_loss=" << fmt_brief(mean_loss) << "\n";
    prev_regret = mean_regret;
  }

  OutputStage stage(a.out);
  stage.add("online_summary.csv", summary.str());
  stage.add("online_sweep.csv", sweep.str());
  std::string grid;
  for (std::size_t i = 0; i < a.T_grid.size(); ++i)
    grid += (i ? "," : "") + std::to_string(a.T_grid[i]);
  stage.commit({{"command", "online sweep"},
                {"model", a.model},
                {"class_file", a.class_file},
                {"learner", a.learner},
                {"adversary", a.adversary},
                {"T_grid", grid},
                {"trials", a.trials},
                {"seed", a.seed},
                {"agnostic", a.agnostic},
                {"out_dir", a.out}},
               a.seed);
  return 0;
}

// --- report ------------------------------------------------------------------

struct SummaryRow {
  std::string model, learner, adversary, realizable;
  int T = 0;
  double total_prob_loss = 0.0;
  double total_indicator_loss = 0.0;
  double agnostic_regret = 0.0;
  std::optional<double> realizable_regret;
  std::optional<double> exceeded;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

std::vector<SummaryRow> parse_summary_csv(const std::string& path) {
  const std::string text = slurp(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != std::string(kCsvMagic) + "online-summary")
    throw ConfigError("report: " + path + " is not an online-summary CSV");
  if (!std::getline(in, line))
    throw ConfigError("report: " + path + " is missing its header row");
  std::string expected;
  for (std::size_t i = 0; i < kSummaryCols.size(); ++i)
    expected += (i ? "," : "") + kSummaryCols[i];
  if (line != expected) throw ConfigError("report: " + path + " has a mismatched schema");

  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != kSummaryCols.size())
      throw ConfigError("report: " + path + " has a short row");
    SummaryRow r;
    r.model = cells[1];
    r.learner = cells[2];
    r.adversary = cells[3];
    r.realizable = cells[4];
    r.T = std::atoi(cells[5].c_str());
    r.total_prob_loss = std::atof(cells[6].c_str());
    r.total_indicator_loss = std::atof(cells[7].c_str());
    r.agnostic_regret = std::atof(cells[8].c_str());
    if (!cells[9].empty()) r.realizable_regret = std::atof(cells[9].c_str());
    if (!cells[13].empty()) r.exceeded = std::atof(cells[13].c_str());
    rows.push_back(r);
  }
  return rows;
}

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out = ".";
};

int cmd_report(const ReportArgs& a) {
  std::vector<SummaryRow> rows;
  for (const std::string& path : a.inputs) {
    const std::vector<SummaryRow> part = parse_summary_csv(path);
    rows.insert(rows.end(), part.begin(), part.end());
  }

  Csv csv("report", {"model", "learner", "adversary", "realizable", "T", "runs",
                     "mean_prob_loss", "max_prob_loss", "mean_indicator_loss",
                     "mean_agnostic_regret", "stderr_agnostic_regret",
                     "mean_realizable_regret", "exceed_rate_delta1",
                     "regret_ratio_vs_prev_T"});

  if (rows.empty()) {
    Csv empty_csv = csv;
    // Deliberate marker row so downstream tooling can tell "no data"
    // from a truncated file.
    empty_csv.row({"-", "-", "-", "-", "0", "0", "", "", "", "", "", "", "", ""});
    OutputStage stage(a.out);
    stage.add("report.csv", empty_csv.str());
    stage.commit({{"command", "report"}, {"inputs", a.inputs}, {"out_dir", a.out}}, 0);
    std::cout << "empty report\n";
    return 0;
  }

  using GroupKey = std::tuple<std::string, std::string, std::string, std::string, int>;
  std::map<GroupKey, std::vector<const SummaryRow*>> groups;
  for (const SummaryRow& r : rows)
    groups[{r.model, r.learner, r.adversary, r.realizable, r.T}].push_back(&r);

  std::map<std::tuple<std::string, std::string, std::string, std::string>, double> prev_regret;
  std::ostringstream console;
  for (const auto& [key, members] : groups) {
    const auto& [mdl, lrn, adv, rlz, T] = key;
    const double runs = static_cast<double>(members.size());
    double sum_loss = 0.0, max_loss = 0.0, sum_ind = 0.0, sum_reg = 0.0, sum_reg_sq = 0.0;
    double sum_rregret = 0.0, sum_exceeded = 0.0;
    long long n_rregret = 0, n_exceeded = 0;
    for (const SummaryRow* r : members) {
      sum_loss += r->total_prob_loss;
      max_loss = std::max(max_loss, r->total_prob_loss);
      sum_ind += r->total_indicator_loss;
      sum_reg += r->agnostic_regret;
      sum_reg_sq += r->agnostic_regret * r->agnostic_regret;
      if (r->realizable_regret) {
        sum_rregret += *r->realizable_regret;
        ++n_rregret;
      }
      if (r->exceeded) {
        sum_exceeded += *r->exceeded;
        ++n_exceeded;
      }
    }
    const double mean_reg = sum_reg / runs;
    std::string stderr_cell;
    if (members.size() > 1) {
      const double var =
          std::max(0.0, (sum_reg_sq - runs * mean_reg * mean_reg) / (runs - 1.0));
      stderr_cell = fmt_double(std::sqrt(var / runs));
    }
    const auto series_key = std::make_tuple(mdl, lrn, adv, rlz);
    std::string ratio_cell;
    const auto prev = prev_regret.find(series_key);
    if (prev != prev_regret.end() && prev->second > 0.0)
      ratio_cell = fmt_double(mean_reg / prev->second);
    prev_regret[series_key] = mean_reg;

    csv.row({mdl, lrn, adv, rlz, std::to_string(T), std::to_string(members.size()),
             fmt_double(sum_loss / runs), fmt_double(max_loss), fmt_double(sum_ind / runs),
             fmt_double(mean_reg), stderr_cell,
             n_rregret ? fmt_double(sum_rregret / static_cast<double>(n_rregret)) : "",
             n_exceeded ? fmt_double(sum_exceeded / static_cast<double>(n_exceeded)) : "",
             ratio_cell});
    console << mdl << "/" << lrn << "/" << adv << " T=" << T << " runs=" << members.size()
            << " mean_agnostic_regret=" << fmt_brief(mean_reg) << "\n";
  }

  OutputStage stage(a.out);
  stage.add("report.csv", csv.str());
  stage.commit({{"command", "report"}, {"inputs", a.inputs}, {"out_dir", a.out}}, 0);
  std::cout << console.str();
  return 0;
}

// --- run-config ---------------------------------------------------------------

int run_parsed(const std::vector<std::string>& args);

std::string json_field_str(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("config: missing field '") + key + "'");
  const json& v = j.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

std::vector<std::string> config_to_args(const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  const std::string scenario = json_field_str(j, "scenario");
  std::vector<std::string> args;
  auto push_opt = [&](const char* flag, const char* key, bool required) {
    if (!j.contains(key)) {
      if (required) throw ConfigError(std::string("config: missing field '") + key + "'");
      return;
    }
    args.push_back(flag);
    args.push_back(json_field_str(j, key));
  };

  if (scenario == "dims") {
    args = {"dims", "compute"};
    push_opt("--class", "class_file", true);
    push_opt("--dim", "dim", true);
    push_opt("--out", "out_dir", true);
  } else if (scenario == "chain") {
    args = {"lossclass", "chain"};
    push_opt("--class", "class_file", true);
    push_opt("--out", "out_dir", true);
  } else if (scenario == "circuit") {
    args = {"quantum", "circuit-test"};
    push_opt("--n", "n", true);
    push_opt("--k", "k", true);
    if (j.value("exhaustive", false)) args.push_back("--exhaustive");
  } else if (scenario == "batch") {
    args = {"batch", json_field_str(j, "mode")};
    push_opt("--class", "class_file", true);
    push_opt("--dist", "dist_file", true);
    push_opt("--target", "target_row", false);
    push_opt("--eps", "epsilon", true);
    push_opt("--delta", "delta", true);
    push_opt("--m", "m", true);
    push_opt("--trials", "trials", true);
    push_opt("--seed", "seed", true);
    push_opt("--out", "out_dir", true);
  } else if (scenario == "online") {
    const std::string mode = json_field_str(j, "mode");
    if (mode != "run" && mode != "sweep")
      throw ConfigError("config: online mode must be 'run' or 'sweep'");
    args = {"online", mode};
    push_opt("--model", "model", true);
    push_opt("--class", "class_file", true);
    push_opt("--learner", "learner", true);
    push_opt("--adversary", "adversary", true);
    if (mode == "run")
      push_opt("--T", "T", true);
    else
      push_opt("--T-grid", "T_grid", true);
    push_opt("--trials", "trials", false);
    push_opt("--seed", "seed", true);
    push_opt("--seq", "seq_file", false);
    push_opt("--tree", "tree_file", false);
    push_opt("--dist", "dist_file", false);
    push_opt("--target", "target_row", false);
    push_opt("--eta", "eta", false);
    push_opt("--threshold", "threshold", false);
    push_opt("--out", "out_dir", true);
    if (j.value("agnostic", false)) args.push_back("--agnostic");
  } else {
    throw ConfigError("config: unknown scenario '" + scenario + "'");
  }
  return args;
}

int cmd_run_config(const std::string& path) {
  const json config = load_json(path);
  const std::vector<std::string> args = config_to_args(config);
  EchoGuard guard(&config);
  return run_parsed(args);
}

// --- dispatch -----------------------------------------------------------------

int run_parsed(const std::vector<std::string>& args) {
  CLI::App app{"learning-theory laboratory: dimensions, circuits, protocols"};
  app.set_version_flag("--version", std::string("qlab ") + kVersion);
  app.require_subcommand(1);
  int code = 0;

  const std::vector<std::string> dim_names = {"vc", "natarajan", "ldim", "mcldim", "bldim"};

  auto* dims_cmd = app.add_subcommand("dims", "combinatorial dimensions with certificates");
  dims_cmd->require_subcommand(1);
  DimsComputeArgs dc;
  auto* dc_cmd = dims_cmd->add_subcommand("compute", "compute a dimension and its certificate");
  dc_cmd->add_option("--class", dc.class_file, "hypothesis class file")->required();
  dc_cmd->add_option("--dim", dc.dim, "dimension")->required()->check(CLI::IsMember(dim_names));
  dc_cmd->add_option("--out", dc.out, "output directory");
  dc_cmd->callback([&] { code = cmd_dims_compute(dc); });

  DimsVerifyArgs dv;
  auto* dv_cmd = dims_cmd->add_subcommand("verify", "verify a certificate file");
  dv_cmd->add_option("--class", dv.class_file, "hypothesis class file")->required();
  dv_cmd->add_option("--dim", dv.dim, "dimension")->required()->check(CLI::IsMember(dim_names));
  dv_cmd->add_option("--cert", dv.cert_file, "certificate file")->required();
  dv_cmd->callback([&] { code = cmd_dims_verify(dv); });

  auto* loss_cmd = app.add_subcommand("lossclass", "loss-class constructions");
  loss_cmd->require_subcommand(1);
  ChainArgs ch;
  auto* ch_cmd = loss_cmd->add_subcommand("chain", "dimension chain through the loss class");
  ch_cmd->add_option("--class", ch.class_file, "hypothesis class file")->required();
  ch_cmd->add_option("--out", ch.out, "output directory (optional)");
  ch_cmd->callback([&] { code = cmd_chain(ch); });

  auto* quantum_cmd = app.add_subcommand("quantum", "statevector checks and sampling");
  quantum_cmd->require_subcommand(1);
  CircuitTestArgs ct;
  auto* ct_cmd =
      quantum_cmd->add_subcommand("circuit-test", "label-translation circuit exactness");
  ct_cmd->add_option("--n", ct.n, "domain size")->required();
  ct_cmd->add_option("--k", ct.k, "label count")->required();
  ct_cmd->add_flag("--exhaustive", ct.exhaustive, "run every witness pair and labeling");
  ct_cmd->callback([&] { code = cmd_circuit_test(ct); });

  SampleArgs sa;
  auto* sa_cmd = quantum_cmd->add_subcommand("sample", "measure example states repeatedly");
  sa_cmd->add_option("--dist", sa.dist_file, "distribution file")->required();
  sa_cmd->add_option("--target", sa.target_file, "class file holding the target")->required();
  sa_cmd->add_option("--target-row", sa.target_row, "row of the target hypothesis");
  sa_cmd->add_option("--shots", sa.shots, "number of measurements")->required();
  sa_cmd->add_option("--seed", sa.seed, "rng seed")->required();
  sa_cmd->add_option("--out", sa.out, "output directory");
  sa_cmd->callback([&] { code = cmd_quantum_sample(sa); });

  auto* batch_cmd = app.add_subcommand("batch", "batch learning experiments");
  batch_cmd->require_subcommand(1);
  BatchArgs ba;
  auto add_batch_leaf = [&](const char* name, const char* desc, bool agnostic) {
    auto* leaf = batch_cmd->add_subcommand(name, desc);
    leaf->add_option("--class", ba.class_file, "hypothesis class file")->required();
    leaf->add_option("--dist", ba.dist_file, "distribution file")->required();
    if (!agnostic) leaf->add_option("--target", ba.target_row, "target row in the class");
    leaf->add_option("--eps", ba.epsilon, "accuracy epsilon")->required();
    leaf->add_option("--delta", ba.delta, "confidence delta")->required();
    leaf->add_option("--m", ba.m, "examples per trial")->required();
    leaf->add_option("--trials", ba.trials, "trial count")->required();
    leaf->add_option("--seed", ba.seed, "rng seed")->required();
    leaf->add_option("--out", ba.out, "output directory");
    leaf->callback([&, agnostic] {
      ba.agnostic = agnostic;
      code = cmd_batch(ba);
    });
  };
  add_batch_leaf("pac", "realizable Monte Carlo experiment", false);
  add_batch_leaf("agnostic", "agnostic Monte Carlo experiment", true);

  auto* online_cmd = app.add_subcommand("online", "online protocol runs");
  online_cmd->require_subcommand(1);
  OnlineArgs oa;
  auto add_online_common = [&](CLI::App* leaf) {
    leaf->add_option("--model", oa.model, "interaction model")
        ->required()
        ->check(CLI::IsMember({"input", "dist", "quantum"}));
    leaf->add_option("--class", oa.class_file, "hypothesis class file")->required();
    leaf->add_option("--learner", oa.learner, "learner")
        ->required()
        ->check(CLI::IsMember({"soa", "mw"}));
    leaf->add_option("--adversary", oa.adversary, "adversary")
        ->required()
        ->check(CLI::IsMember({"point", "tree", "stochastic"}));
    leaf->add_option("--trials", oa.trials, "independent runs");
    leaf->add_option("--seed", oa.seed, "rng seed")->required();
    leaf->add_flag("--agnostic", oa.agnostic, "agnostic (joint-distribution) rounds");
    leaf->add_option("--seq", oa.seq_file, "example sequence file (point adversary)");
    leaf->add_option("--tree", oa.tree_file, "mistake tree file (tree adversary)");
    leaf->add_option("--dist", oa.dist_file, "distribution file (stochastic adversary)");
    leaf->add_option("--target", oa.target_row, "target row (stochastic adversary)");
    leaf->add_option("--eta", oa.eta, "weights learning rate (mw)");
    leaf->add_option("--threshold", oa.threshold, "per-round threshold-mistake epsilon");
    leaf->add_option("--out", oa.out, "output directory");
  };
  auto* or_cmd = online_cmd->add_subcommand("run", "run one horizon");
  add_online_common(or_cmd);
  or_cmd->add_option("--T", oa.T, "rounds")->required();
  or_cmd->callback([&] { code = cmd_online_run(oa); });

  auto* os_cmd = online_cmd->add_subcommand("sweep", "repeat over a horizon grid");
  add_online_common(os_cmd);
  os_cmd->add_option("--T-grid", oa.T_grid, "comma-separated rounds grid")
      ->required()
      ->delimiter(',');
  os_cmd->callback([&] { code = cmd_online_sweep(oa); });

  ReportArgs ra;
  auto* rp_cmd = app.add_subcommand("report", "aggregate summary CSVs");
  rp_cmd->add_option("inputs", ra.inputs, "online-summary CSV files");
  rp_cmd->add_option("--out", ra.out, "output directory");
  rp_cmd->callback([&] { code = cmd_report(ra); });

  std::string config_path;
  auto* rc_cmd = app.add_subcommand("run-config", "run a JSON experiment config");
  rc_cmd->add_option("config", config_path, "config file")->required();
  rc_cmd->callback([&] { code = cmd_run_config(config_path); });

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("qlab");
  for (const std::string& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  return code;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  try {
    return run_parsed(args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InternalInvariantError& e) {
    std::cerr << "internal invariant failure: " << e.what() << "\n";
    return 4;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition violation: " << e.what() << "\n";
    return 3;
  } catch (const qlab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace qlab::cli
