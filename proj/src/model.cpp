#include "qlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace qlab::model {

namespace {

constexpr double kProbTolerance = 1e-12;

void check_label_range(const HypothesisClass& cls, Label y, const char* op) {
  if (y < 0 || y >= cls.num_labels) {
    throw ArgumentError(std::string(op) + ": label out of range");
  }
}

void check_point_range(const HypothesisClass& cls, int x, const char* op) {
  if (x < 0 || x >= cls.domain_size) {
    throw ArgumentError(std::string(op) + ": point out of range");
  }
}

}  // namespace

void HypothesisClass::validate() const {
  if (domain_size < 1) throw ArgumentError("class: domain_size must be >= 1");
  if (num_labels < 2) throw ArgumentError("class: num_labels must be >= 2");
  for (const Hypothesis& h : members) {
    if (h.domain_size() != domain_size) {
      throw ArgumentError("class: hypothesis length != domain_size");
    }
    for (Label y : h.labels) {
      if (y < 0 || y >= num_labels) throw ArgumentError("class: label out of range");
    }
  }
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      if (members[i] == members[j]) throw ArgumentError("class: duplicate members");
    }
  }
}

Distribution Distribution::uniform(int n) {
  if (n < 1) throw ArgumentError("uniform: support must be >= 1");
  Distribution d;
  d.probs.assign(static_cast<std::size_t>(n), 1.0 / n);
  return d;
}

Distribution Distribution::point_mass(int n, int at) {
  if (n < 1) throw ArgumentError("point_mass: support must be >= 1");
  if (at < 0 || at >= n) throw ArgumentError("point_mass: index out of range");
  Distribution d;
  d.probs.assign(static_cast<std::size_t>(n), 0.0);
  d.probs[static_cast<std::size_t>(at)] = 1.0;
  return d;
}

void Distribution::validate() const {
  if (probs.empty()) throw ArgumentError("distribution: empty support");
  double total = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw ArgumentError("distribution: negative entry");
    total += p;
  }
  if (std::abs(total - 1.0) > kProbTolerance) {
    throw ArgumentError("distribution: entries do not sum to 1");
  }
}

bool Distribution::is_point_mass() const {
  int ones = 0;
  for (double p : probs) {
    if (p == 1.0) {
      ++ones;
    } else if (p != 0.0) {
      return false;
    }
  }
  return ones == 1;
}

Fraction::Fraction(long long n, long long d) : num(n), den(d) {
  if (den <= 0) throw ArgumentError("fraction: denominator must be positive");
  if (num < 0) throw ArgumentError("fraction: negative numerator");
  const long long g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

HypothesisClass full_class(int n, int k) {
  if (n < 1 || n > 8) throw SizeLimitError("full_class: n must be in [1, 8]");
  if (k < 2 || k > 4) throw SizeLimitError("full_class: k must be in [2, 4]");
  long long count = 1;
  for (int i = 0; i < n; ++i) count *= k;
  if (count > 65536) throw SizeLimitError("full_class: k^n exceeds 65536");

  HypothesisClass cls;
  cls.domain_size = n;
  cls.num_labels = k;
  cls.members.reserve(static_cast<std::size_t>(count));
  std::vector<Label> labels(static_cast<std::size_t>(n), 0);
  for (long long i = 0; i < count; ++i) {
    cls.members.push_back(Hypothesis{labels});
    // Increment as a base-k counter, least-significant digit last, which
    // enumerates label vectors in lexicographic order.
    for (int j = n - 1; j >= 0; --j) {
      if (++labels[static_cast<std::size_t>(j)] < k) break;
      labels[static_cast<std::size_t>(j)] = 0;
    }
  }
  return cls;
}

HypothesisClass restrict_consistent(const HypothesisClass& cls, int x, Label y) {
  check_point_range(cls, x, "restrict_consistent");
  check_label_range(cls, y, "restrict_consistent");
  HypothesisClass out;
  out.domain_size = cls.domain_size;
  out.num_labels = cls.num_labels;
  for (const Hypothesis& h : cls.members) {
    if (h(x) == y) out.members.push_back(h);
  }
  return out;
}

HypothesisClass restrict_inconsistent(const HypothesisClass& cls, int x, Label y) {
  check_point_range(cls, x, "restrict_inconsistent");
  check_label_range(cls, y, "restrict_inconsistent");
  HypothesisClass out;
  out.domain_size = cls.domain_size;
  out.num_labels = cls.num_labels;
  for (const Hypothesis& h : cls.members) {
    if (h(x) != y) out.members.push_back(h);
  }
  return out;
}

Fraction empirical_error(const Hypothesis& h, const std::vector<LabeledExample>& sample) {
  if (sample.empty()) throw ArgumentError("empirical_error: empty sample");
  long long mistakes = 0;
  for (const LabeledExample& ex : sample) {
    if (ex.x < 0 || ex.x >= h.domain_size()) {
      throw ArgumentError("empirical_error: example point out of range");
    }
    if (h(ex.x) != ex.y) ++mistakes;
  }
  return Fraction(mistakes, static_cast<long long>(sample.size()));
}

double true_error(const Hypothesis& h, const Distribution& d, const Hypothesis& target) {
  if (h.domain_size() != target.domain_size() ||
      d.support_size() != h.domain_size()) {
    throw ArgumentError("true_error: shape mismatch");
  }
  double err = 0.0;
  for (int x = 0; x < h.domain_size(); ++x) {
    if (h(x) != target(x)) err += d(x);
  }
  return err;
}

double true_joint_error(const Hypothesis& h, const Distribution& joint, int k) {
  if (k < 2) throw ArgumentError("true_joint_error: k must be >= 2");
  if (joint.support_size() != h.domain_size() * k) {
    throw ArgumentError("true_joint_error: joint support != n*k");
  }
  double err = 0.0;
  for (int x = 0; x < h.domain_size(); ++x) {
    for (Label y = 0; y < k; ++y) {
      if (h(x) != y) err += joint(x * k + y);
    }
  }
  return err;
}

namespace {

std::vector<std::string> nonempty_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) lines.push_back(line);
  }
  return lines;
}

}  // namespace

HypothesisClass parse_class(std::istream& in) {
  const std::vector<std::string> lines = nonempty_lines(in);
  if (lines.empty()) throw ArgumentError("class file: missing header line");
  std::istringstream head(lines[0]);
  HypothesisClass cls;
  if (!(head >> cls.domain_size >> cls.num_labels)) {
    throw ArgumentError("class file: header must be 'n k'");
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::istringstream row(lines[i]);
    Hypothesis h;
    Label y;
    while (row >> y) h.labels.push_back(y);
    if (h.domain_size() != cls.domain_size) {
      throw ArgumentError("class file: row length != n");
    }
    cls.members.push_back(std::move(h));
  }
  cls.validate();
  return cls;
}

HypothesisClass parse_class_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("class file: cannot open " + path);
  return parse_class(in);
}

void serialize_class(const HypothesisClass& cls, std::ostream& out) {
  out << cls.domain_size << ' ' << cls.num_labels << '\n';
  for (const Hypothesis& h : cls.members) {
    for (int x = 0; x < h.domain_size(); ++x) {
      if (x) out << ' ';
      out << h(x);
    }
    out << '\n';
  }
}

Distribution parse_distribution(std::istream& in) {
  Distribution d;
  for (const std::string& line : nonempty_lines(in)) {
    std::istringstream row(line);
    double p;
    if (!(row >> p)) throw ArgumentError("distribution file: bad entry");
    d.probs.push_back(p);
  }
  d.validate();
  return d;
}

Distribution parse_distribution_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("distribution file: cannot open " + path);
  return parse_distribution(in);
}

void serialize_distribution(const Distribution& d, std::ostream& out) {
  out.precision(17);
  for (double p : d.probs) out << p << '\n';
}

}  // namespace qlab::model
