#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <numeric>
#include <string>
#include <vector>

#include "qlab/errors.hpp"

namespace qlab::model {

// Domain points are indices 0..n-1 into a finite input set X.
// Labels are values 0..k-1.
using Label = int;

// A hypothesis is a total label map on X, stored as labels[x].
struct Hypothesis {
  std::vector<Label> labels;

  Label operator()(int x) const { return labels[static_cast<std::size_t>(x)]; }
  int domain_size() const { return static_cast<int>(labels.size()); }
  auto operator<=>(const Hypothesis&) const = default;
};

// A finite class of pairwise-distinct hypotheses over a shared (n, k).
// Members built by full_class (and everything derived from it by
// restriction) are kept in lexicographic order so tie-breaks that walk
// members in order are deterministic.
struct HypothesisClass {
  int domain_size = 0;  // n = |X|
  int num_labels = 0;   // k = |Y|
  std::vector<Hypothesis> members;

  int size() const { return static_cast<int>(members.size()); }
  bool empty() const { return members.empty(); }
  const Hypothesis& operator[](int i) const {
    return members[static_cast<std::size_t>(i)];
  }

  // Checks the structural invariants; throws ArgumentError on violation.
  void validate() const;
};

// Probability vector over {0, ..., support_size-1}. Entries are
// non-negative and sum to 1 within 1e-12.
struct Distribution {
  std::vector<double> probs;

  int support_size() const { return static_cast<int>(probs.size()); }
  double operator()(int i) const { return probs[static_cast<std::size_t>(i)]; }

  static Distribution uniform(int n);
  static Distribution point_mass(int n, int at);

  void validate() const;
  bool is_point_mass() const;  // exactly one entry equal to 1.0
};

struct LabeledExample {
  int x = 0;
  Label y = 0;
  auto operator<=>(const LabeledExample&) const = default;
};

// Exact rational in [0, 1], kept in lowest terms.
struct Fraction {
  long long num = 0;
  long long den = 1;

  Fraction() = default;
  Fraction(long long n, long long d);

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Fraction& a, const Fraction& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend std::strong_ordering operator<=>(const Fraction& a, const Fraction& b) {
    return a.num * b.den <=> b.num * a.den;
  }
};

// All k^n hypotheses on n points, in lexicographic order.
// Caps: 1 <= n <= 8, 2 <= k <= 4, k^n <= 65536.
HypothesisClass full_class(int n, int k);

// Members h with h(x) = y, order preserved.
HypothesisClass restrict_consistent(const HypothesisClass& cls, int x, Label y);

// Members h with h(x) != y, order preserved.
// Together with restrict_consistent this partitions the class.
HypothesisClass restrict_inconsistent(const HypothesisClass& cls, int x, Label y);

// Fraction of sample points h gets wrong; exact. Empty sample -> ArgumentError.
Fraction empirical_error(const Hypothesis& h, const std::vector<LabeledExample>& sample);

// P_{x~D}[h(x) != target(x)], summed exactly over the support.
double true_error(const Hypothesis& h, const Distribution& d, const Hypothesis& target);

// P_{(x,y)~joint}[h(x) != y]; joint is over X x Y flattened x-major
// (index x*k + y).
double true_joint_error(const Hypothesis& h, const Distribution& joint, int k);

// --- Text formats ------------------------------------------------------
// Hypothesis class: first line "n k", then one hypothesis per line as
// space-separated labels. Distribution: one probability per line.

HypothesisClass parse_class(std::istream& in);
HypothesisClass parse_class_file(const std::string& path);
void serialize_class(const HypothesisClass& cls, std::ostream& out);

Distribution parse_distribution(std::istream& in);
Distribution parse_distribution_file(const std::string& path);
void serialize_distribution(const Distribution& d, std::ostream& out);

}  // namespace qlab::model
