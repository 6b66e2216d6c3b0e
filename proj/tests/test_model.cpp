#include <sstream>
#include <vector>

#include "doctest.h"
#include "qlab/model.hpp"
#include "qlab/rng.hpp"
#include "support.hpp"

using namespace qlab;
using namespace qlab::model;

TEST_SUITE("model") {

TEST_CASE("full_class enumerates lexicographically") {
  const HypothesisClass c12 = full_class(1, 2);
  REQUIRE(c12.size() == 2);
  CHECK(c12[0].labels == std::vector<Label>{0});
  CHECK(c12[1].labels == std::vector<Label>{1});

  const HypothesisClass c22 = full_class(2, 2);
  REQUIRE(c22.size() == 4);
  CHECK(c22[0].labels == std::vector<Label>{0, 0});
  CHECK(c22[1].labels == std::vector<Label>{0, 1});
  CHECK(c22[2].labels == std::vector<Label>{1, 0});
  CHECK(c22[3].labels == std::vector<Label>{1, 1});

  CHECK(full_class(2, 3).size() == 9);
  CHECK(full_class(8, 2).size() == 256);
}

TEST_CASE("full_class size caps") {
  CHECK_THROWS_AS(full_class(0, 2), SizeLimitError);
  CHECK_THROWS_AS(full_class(9, 2), SizeLimitError);
  CHECK_THROWS_AS(full_class(2, 1), SizeLimitError);
  CHECK_THROWS_AS(full_class(2, 5), SizeLimitError);
}

TEST_CASE("restrictions partition the class") {
  const HypothesisClass c22 = full_class(2, 2);
  const HypothesisClass left = restrict_consistent(c22, 0, 0);
  REQUIRE(left.size() == 2);
  CHECK(left[0].labels == std::vector<Label>{0, 0});
  CHECK(left[1].labels == std::vector<Label>{0, 1});

  CHECK(restrict_consistent(full_class(2, 3), 1, 2).size() == 3);

  const HypothesisClass inc = restrict_inconsistent(full_class(1, 3), 0, 0);
  REQUIRE(inc.size() == 2);
  CHECK(inc[0].labels == std::vector<Label>{1});
  CHECK(inc[1].labels == std::vector<Label>{2});

  const HypothesisClass single = support::subclass_by_mask(c22, 1);
  CHECK(restrict_inconsistent(single, 0, single[0](0)).empty());

  // Exhaustive partition sweep.
  for (int n = 1; n <= 4; ++n) {
    for (int k = 2; k <= 3; ++k) {
      const HypothesisClass cls = full_class(n, k);
      for (int x = 0; x < n; ++x) {
        for (int y = 0; y < k; ++y) {
          const HypothesisClass a = restrict_consistent(cls, x, y);
          const HypothesisClass b = restrict_inconsistent(cls, x, y);
          CHECK(a.size() + b.size() == cls.size());
          for (int i = 0; i < a.size(); ++i) CHECK(a[i](x) == y);
          for (int i = 0; i < b.size(); ++i) CHECK(b[i](x) != y);
        }
      }
    }
  }
}

TEST_CASE("empty class restriction is empty") {
  HypothesisClass empty;
  empty.domain_size = 2;
  empty.num_labels = 2;
  CHECK(restrict_consistent(empty, 0, 1).empty());
  CHECK(restrict_inconsistent(empty, 1, 0).empty());
}

TEST_CASE("empirical error is an exact fraction") {
  const Hypothesis h{{0, 1}};
  const std::vector<LabeledExample> sample = {{0, 0}, {1, 0}};
  const Fraction f = empirical_error(h, sample);
  CHECK(f == Fraction(1, 2));

  const std::vector<LabeledExample> right = {{0, 0}, {1, 1}, {1, 1}};
  CHECK(empirical_error(h, right) == Fraction(0, 1));
  const std::vector<LabeledExample> wrong = {{0, 1}, {1, 0}};
  CHECK(empirical_error(h, wrong) == Fraction(1, 1));
  CHECK_THROWS_AS(empirical_error(h, {}), ArgumentError);
}

TEST_CASE("fractions reduce and compare") {
  CHECK(Fraction(2, 4) == Fraction(1, 2));
  CHECK(Fraction(0, 7) == Fraction(0, 3));
  CHECK(Fraction(1, 3) < Fraction(1, 2));
  CHECK(Fraction(3, 4).value() == doctest::Approx(0.75));
}

TEST_CASE("true error sums exactly over the support") {
  const Hypothesis h{{0, 1}};
  const Hypothesis target{{0, 0}};
  Distribution d;
  d.probs = {0.3, 0.7};
  CHECK(true_error(h, d, h) == 0.0);
  CHECK(true_error(Hypothesis{{0, 0}}, Distribution::uniform(2), Hypothesis{{1, 1}}) == 1.0);
  CHECK(true_error(h, d, target) == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("true joint error") {
  // n=1, k=2; joint puts 0.25 on (0,0) and 0.75 on (0,1).
  Distribution joint;
  joint.probs = {0.25, 0.75};
  CHECK(true_joint_error(Hypothesis{{0}}, joint, 2) == doctest::Approx(0.75));
  CHECK(true_joint_error(Hypothesis{{1}}, joint, 2) == doctest::Approx(0.25));
}

TEST_CASE("distribution validation") {
  CHECK(Distribution::uniform(4).support_size() == 4);
  const Distribution pm = Distribution::point_mass(3, 1);
  CHECK(pm.is_point_mass());
  CHECK(pm(1) == 1.0);
  CHECK_FALSE(Distribution::uniform(2).is_point_mass());

  Distribution bad;
  bad.probs = {0.5, 0.6};
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  bad.probs = {-0.1, 1.1};
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("class validation rejects malformed classes") {
  HypothesisClass cls;
  cls.domain_size = 2;
  cls.num_labels = 2;
  cls.members = {{{0, 1}}, {{0, 1}}};
  CHECK_THROWS_AS(cls.validate(), ArgumentError);  // duplicate members
  cls.members = {{{0, 1}}, {{0}}};
  CHECK_THROWS_AS(cls.validate(), ArgumentError);  // ragged member
  cls.members = {{{0, 2}}};
  CHECK_THROWS_AS(cls.validate(), ArgumentError);  // label out of range
}

TEST_CASE("sampling frequencies approach true error") {
  // 100 seeded trials of 1e5 draws; |empirical - true| <= 0.02 should
  // essentially always hold at this sample size.
  const Hypothesis h{{0, 1, 0}};
  const Hypothesis target{{0, 0, 1}};
  Distribution d;
  d.probs = {0.2, 0.5, 0.3};
  const double truth = true_error(h, d, target);
  int ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng = Rng::derive(99, static_cast<std::uint64_t>(trial));
    int wrong = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
      const int x = rng.sample(d.probs);
      if (h(x) != target(x)) ++wrong;
    }
    const double emp = static_cast<double>(wrong) / draws;
    if (std::abs(emp - truth) <= 0.02) ++ok;
  }
  CHECK(ok >= 99);
}

TEST_CASE("class text format round trips") {
  const HypothesisClass cls = full_class(2, 3);
  std::ostringstream out;
  serialize_class(cls, out);
  std::istringstream in(out.str());
  const HypothesisClass back = parse_class(in);
  CHECK(back.domain_size == cls.domain_size);
  CHECK(back.num_labels == cls.num_labels);
  CHECK(back.members == cls.members);

  std::istringstream bad1("2\n0 0\n");
  CHECK_THROWS_AS(parse_class(bad1), ArgumentError);
  std::istringstream bad2("2 2\n0 0 1\n");
  CHECK_THROWS_AS(parse_class(bad2), ArgumentError);
  std::istringstream bad3("2 2\n0 5\n");
  CHECK_THROWS_AS(parse_class(bad3), ArgumentError);
}

TEST_CASE("distribution text format round trips") {
  Distribution d;
  d.probs = {0.125, 0.5, 0.375};
  std::ostringstream out;
  serialize_distribution(d, out);
  std::istringstream in(out.str());
  const Distribution back = parse_distribution(in);
  REQUIRE(back.support_size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(back(i) == d(i));

  std::istringstream bad("0.5\n0.6\n");
  CHECK_THROWS_AS(parse_distribution(bad), ArgumentError);
}

TEST_CASE("rng streams are deterministic and well distributed") {
  Rng a = Rng::derive(7, 1, 2);
  Rng b = Rng::derive(7, 1, 2);
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c = Rng::derive(7, 1, 3);
  bool differs = false;
  Rng a2 = Rng::derive(7, 1, 2);
  for (int i = 0; i < 16; ++i) differs |= (a2.next_u64() != c.next_u64());
  CHECK(differs);

  Rng r(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const int idx = r.next_index(7);
    CHECK(idx >= 0);
    CHECK(idx < 7);
  }
  const std::vector<double> simplex = r.simplex(5);
  double total = 0.0;
  for (double p : simplex) {
    CHECK(p >= 0.0);
    total += p;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

}  // TEST_SUITE
