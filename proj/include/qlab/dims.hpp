#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "qlab/model.hpp"
#include "qlab/trees.hpp"

namespace qlab::dims {

// Witness for a shattered point set. For binary shattering f0/f1 are
// empty; for witnessed multiclass shattering they give the two label
// maps that disagree on every point of the set.
struct SetCertificate {
  std::vector<int> points;  // ascending
  std::vector<model::Label> f0;
  std::vector<model::Label> f1;
};

// value >= -1; -1 exactly for the empty class (no certificate). When a
// certificate is present it verifies at depth/size == value via the
// corresponding verifier in trees.
struct DimensionResult {
  int value = -1;
  std::optional<SetCertificate> set_certificate;
  std::optional<trees::MistakeTree> tree_certificate;
};

// All five computations reject |H| > 4096 or n > 10 with SizeLimitError.
// Certificate tie-breaks are deterministic: smallest points first, then
// smallest labels.

// Largest binary-shattered set; k = 2 only (DomainError otherwise).
// Certificate: lexicographically smallest subset of maximum size.
DimensionResult vc_dim(const model::HypothesisClass& cls);

// Largest witnessed-shattered set, any k >= 2. Certificate carries the
// lexicographically smallest subset and witness pair.
DimensionResult natarajan_dim(const model::HypothesisClass& cls);

// Deepest complete binary mistake tree with edges {0,1}; k = 2 only.
// Certificate edges are emitted in (0, 1) order.
DimensionResult littlestone_dim(const model::HypothesisClass& cls);

// Deepest complete binary tree whose sibling edges carry two distinct
// labels; reduces to littlestone_dim at k = 2.
DimensionResult mc_littlestone_dim(const model::HypothesisClass& cls);

// Deepest complete k-ary tree realized in the avoidance sense: some
// member disagrees with every edge label along each path. Certificate
// node edges are 0..k-1 in order.
DimensionResult bandit_littlestone_dim(const model::HypothesisClass& cls);

// Shared memo for algorithms that repeatedly query the multiclass tree
// dimension of sub-classes of one fixed root class (e.g. version-space
// learners). Queries take sorted member-index subsets of the root.
class MulticlassDimCache {
 public:
  explicit MulticlassDimCache(const model::HypothesisClass& root);
  ~MulticlassDimCache();
  MulticlassDimCache(MulticlassDimCache&&) noexcept;
  MulticlassDimCache& operator=(MulticlassDimCache&&) noexcept;

  // Dimension of the subclass; -1 for the empty subset.
  int dim(const std::vector<int>& member_indices);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Text format for set certificates: header "set <count>", a "points"
// line, and for witnessed certificates "f0" / "f1" lines, all
// space-separated. A result with no certificate serializes as "none".
void serialize_set_certificate(const SetCertificate& cert, std::ostream& out);
SetCertificate parse_set_certificate(std::istream& in);

}  // namespace qlab::dims
