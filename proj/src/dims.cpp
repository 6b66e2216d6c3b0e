#include "qlab/dims.hpp"

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>

namespace qlab::dims {

namespace {

constexpr int kMaxMembers = 4096;
constexpr int kMaxDomain = 10;

void check_caps(const model::HypothesisClass& cls, const char* op) {
  if (cls.size() > kMaxMembers) {
    throw SizeLimitError(std::string(op) + ": class exceeds 4096 members");
  }
  if (cls.domain_size > kMaxDomain) {
    throw SizeLimitError(std::string(op) + ": domain exceeds 10 points");
  }
}

using IndexSet = std::vector<std::uint32_t>;  // sorted member indices

struct IndexSetHash {
  std::size_t operator()(const IndexSet& s) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::uint32_t v : s) {
      h ^= v;
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

IndexSet full_index_set(const model::HypothesisClass& cls) {
  IndexSet s(static_cast<std::size_t>(cls.size()));
  for (int i = 0; i < cls.size(); ++i) s[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i);
  return s;
}

// Memoized recursion engine over member-index subsets of one root class.
// Tree dimensions only; set dimensions are computed by direct search.
class TreeDimEngine {
 public:
  enum class Mode { agreement, avoidance };

  TreeDimEngine(const model::HypothesisClass& root, Mode mode)
      : root_(root), mode_(mode) {}

  int dim(const IndexSet& members) {
    if (members.empty()) return -1;
    auto it = memo_.find(members);
    if (it != memo_.end()) return it->second;
    const int value = mode_ == Mode::agreement ? agreement_dim(members)
                                               : avoidance_dim(members);
    memo_.emplace(members, value);
    return value;
  }

  // Certificate construction; pre: depth <= dim(members).
  trees::MistakeTree agreement_tree(const IndexSet& members, int depth) {
    trees::MistakeTree tree;
    tree.arity = 2;
    tree.depth = depth;
    tree.nodes.resize(static_cast<std::size_t>(
        trees::MistakeTree::internal_node_count(2, depth)));
    fill_agreement(members, depth, 0, tree);
    return tree;
  }

  trees::MistakeTree avoidance_tree(const IndexSet& members, int depth) {
    const int k = root_.num_labels;
    trees::MistakeTree tree;
    tree.arity = k;
    tree.depth = depth;
    tree.nodes.resize(static_cast<std::size_t>(
        trees::MistakeTree::internal_node_count(k, depth)));
    fill_avoidance(members, depth, 0, tree);
    return tree;
  }

 private:
  std::vector<IndexSet> buckets_by_label(const IndexSet& members, int x) const {
    std::vector<IndexSet> buckets(static_cast<std::size_t>(root_.num_labels));
    for (std::uint32_t i : members) {
      buckets[static_cast<std::size_t>(root_[static_cast<int>(i)](x))].push_back(i);
    }
    return buckets;
  }

  IndexSet drop_label(const IndexSet& members, int x, model::Label y) const {
    IndexSet out;
    out.reserve(members.size());
    for (std::uint32_t i : members) {
      if (root_[static_cast<int>(i)](x) != y) out.push_back(i);
    }
    return out;
  }

  // Largest d such that some point splits the members into two label-
  // consistent parts each of dimension >= d-1. A label whose restriction
  // is empty blocks that branch, so points where all members agree
  // contribute 0 and the recursion always terminates.
  int agreement_dim(const IndexSet& members) {
    int best = 0;
    for (int x = 0; x < root_.domain_size; ++x) {
      const std::vector<IndexSet> buckets = buckets_by_label(members, x);
      for (model::Label y0 = 0; y0 < root_.num_labels; ++y0) {
        if (buckets[static_cast<std::size_t>(y0)].empty()) continue;
        for (model::Label y1 = y0 + 1; y1 < root_.num_labels; ++y1) {
          if (buckets[static_cast<std::size_t>(y1)].empty()) continue;
          const int d = 1 + std::min(dim(buckets[static_cast<std::size_t>(y0)]),
                                     dim(buckets[static_cast<std::size_t>(y1)]));
          best = std::max(best, d);
        }
      }
    }
    return best;
  }

  // Avoidance variant: a point contributes when removing each used label
  // still leaves dimension >= d-1. Labels no member uses at x leave the
  // class unchanged and impose no constraint.
  int avoidance_dim(const IndexSet& members) {
    int best = 0;
    for (int x = 0; x < root_.domain_size; ++x) {
      const std::vector<IndexSet> buckets = buckets_by_label(members, x);
      int used = 0;
      for (const IndexSet& b : buckets) {
        if (!b.empty()) ++used;
      }
      if (used < 2) continue;  // removing the single used label empties the class
      int worst = INT32_MAX;
      for (model::Label y = 0; y < root_.num_labels; ++y) {
        if (buckets[static_cast<std::size_t>(y)].empty()) continue;
        worst = std::min(worst, dim(drop_label(members, x, y)));
      }
      best = std::max(best, 1 + worst);
    }
    return best;
  }

  void fill_agreement(const IndexSet& members, int depth, std::size_t pos,
                      trees::MistakeTree& tree) {
    if (depth == 0) return;
    for (int x = 0; x < root_.domain_size; ++x) {
      const std::vector<IndexSet> buckets = buckets_by_label(members, x);
      for (model::Label y0 = 0; y0 < root_.num_labels; ++y0) {
        if (buckets[static_cast<std::size_t>(y0)].empty()) continue;
        for (model::Label y1 = y0 + 1; y1 < root_.num_labels; ++y1) {
          if (buckets[static_cast<std::size_t>(y1)].empty()) continue;
          if (dim(buckets[static_cast<std::size_t>(y0)]) < depth - 1) continue;
          if (dim(buckets[static_cast<std::size_t>(y1)]) < depth - 1) continue;
          tree.nodes[pos] = {x, {y0, y1}};
          fill_agreement(buckets[static_cast<std::size_t>(y0)], depth - 1, 2 * pos + 1, tree);
          fill_agreement(buckets[static_cast<std::size_t>(y1)], depth - 1, 2 * pos + 2, tree);
          return;
        }
      }
    }
    throw InternalInvariantError("certificate construction: no witness point");
  }

  void fill_avoidance(const IndexSet& members, int depth, std::size_t pos,
                      trees::MistakeTree& tree) {
    if (depth == 0) return;
    const int k = root_.num_labels;
    for (int x = 0; x < root_.domain_size; ++x) {
      const std::vector<IndexSet> buckets = buckets_by_label(members, x);
      bool ok = true;
      for (model::Label y = 0; y < k && ok; ++y) {
        if (buckets[static_cast<std::size_t>(y)].empty()) continue;
        ok = dim(drop_label(members, x, y)) >= depth - 1;
      }
      // A point where all members share one label fails above (dropping
      // that label gives the empty class, dimension -1 < depth - 1).
      if (!ok) continue;
      trees::MistakeTree::Node node;
      node.point = x;
      node.edge_labels.resize(static_cast<std::size_t>(k));
      for (model::Label y = 0; y < k; ++y) node.edge_labels[static_cast<std::size_t>(y)] = y;
      tree.nodes[pos] = std::move(node);
      // drop_label leaves the set unchanged for labels no member uses,
      // which is exactly the subtree those edges must shatter.
      for (model::Label y = 0; y < k; ++y) {
        fill_avoidance(drop_label(members, x, y), depth - 1,
                       pos * static_cast<std::size_t>(k) + 1 + static_cast<std::size_t>(y),
                       tree);
      }
      return;
    }
    throw InternalInvariantError("certificate construction: no witness point");
  }

  const model::HypothesisClass& root_;
  Mode mode_;
  std::unordered_map<IndexSet, int, IndexSetHash> memo_;
};

// Lexicographic t-subset enumeration over {0, ..., n-1}.
bool first_combination(int n, int t, std::vector<int>& subset) {
  if (t > n) return false;
  subset.resize(static_cast<std::size_t>(t));
  for (int i = 0; i < t; ++i) subset[static_cast<std::size_t>(i)] = i;
  return true;
}

bool next_combination(int n, std::vector<int>& subset) {
  const int t = static_cast<int>(subset.size());
  for (int i = t - 1; i >= 0; --i) {
    if (subset[static_cast<std::size_t>(i)] < n - t + i) {
      ++subset[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < t; ++j) {
        subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
      }
      return true;
    }
  }
  return false;
}

int floor_log2(long long v) {
  int r = -1;
  while (v > 0) {
    v >>= 1;
    ++r;
  }
  return r;
}

}  // namespace

DimensionResult vc_dim(const model::HypothesisClass& cls) {
  check_caps(cls, "vc_dim");
  if (cls.num_labels != 2) throw DomainError("vc_dim: requires k = 2");
  DimensionResult result;
  if (cls.empty()) return result;

  const int t_max = std::min(cls.domain_size, floor_log2(cls.size()));
  for (int t = t_max; t >= 0; --t) {
    std::vector<int> subset;
    if (!first_combination(cls.domain_size, t, subset)) continue;
    do {
      if (trees::verify_shattered_set(cls, subset)) {
        result.value = t;
        result.set_certificate = SetCertificate{subset, {}, {}};
        return result;
      }
    } while (next_combination(cls.domain_size, subset));
  }
  throw InternalInvariantError("vc_dim: empty set not shattered by non-empty class");
}

namespace {

// Distinct member behaviors on the subset, sorted lexicographically.
std::vector<std::vector<model::Label>> behaviors_on(const model::HypothesisClass& cls,
                                                    const std::vector<int>& subset) {
  std::vector<std::vector<model::Label>> rows;
  rows.reserve(cls.members.size());
  for (const model::Hypothesis& h : cls.members) {
    std::vector<model::Label> row(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) row[i] = h(subset[i]);
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  return rows;
}

bool witnessed_subset(const model::HypothesisClass& cls, const std::vector<int>& subset,
                      std::vector<model::Label>& f0_out, std::vector<model::Label>& f1_out) {
  const std::size_t t = subset.size();
  if (t == 0) return !cls.empty();
  const std::vector<std::vector<model::Label>> rows = behaviors_on(cls, subset);
  if (static_cast<long long>(rows.size()) < (1LL << t)) return false;

  // Pack rows for O(1) mixture lookups.
  auto pack = [&](const std::vector<model::Label>& row) {
    std::uint64_t v = 0;
    for (model::Label lbl : row) v = v * 4 + static_cast<std::uint64_t>(lbl);
    return v;
  };
  std::unordered_map<std::uint64_t, bool> present;
  present.reserve(rows.size() * 2);
  for (const auto& row : rows) present.emplace(pack(row), true);

  for (const auto& u : rows) {
    for (const auto& v : rows) {
      bool disagree = true;
      for (std::size_t i = 0; i < t && disagree; ++i) disagree = u[i] != v[i];
      if (!disagree) continue;
      bool all = true;
      std::vector<model::Label> mix(t);
      for (std::uint64_t r = 0; r < (1ULL << t) && all; ++r) {
        for (std::size_t i = 0; i < t; ++i) mix[i] = (r >> i) & 1 ? u[i] : v[i];
        all = present.count(pack(mix)) > 0;
      }
      if (all) {
        f0_out = u;
        f1_out = v;
        return true;
      }
    }
  }
  return false;
}

}  // namespace

DimensionResult natarajan_dim(const model::HypothesisClass& cls) {
  check_caps(cls, "natarajan_dim");
  if (cls.num_labels < 2) throw ArgumentError("natarajan_dim: requires k >= 2");
  DimensionResult result;
  if (cls.empty()) return result;

  const int t_max = std::min(cls.domain_size, floor_log2(cls.size()));
  for (int t = t_max; t >= 0; --t) {
    std::vector<int> subset;
    if (!first_combination(cls.domain_size, t, subset)) continue;
    do {
      std::vector<model::Label> f0, f1;
      if (witnessed_subset(cls, subset, f0, f1)) {
        result.value = t;
        result.set_certificate = SetCertificate{subset, std::move(f0), std::move(f1)};
        return result;
      }
    } while (next_combination(cls.domain_size, subset));
  }
  throw InternalInvariantError("natarajan_dim: empty set not witnessed by non-empty class");
}

DimensionResult littlestone_dim(const model::HypothesisClass& cls) {
  check_caps(cls, "littlestone_dim");
  if (cls.num_labels != 2) throw DomainError("littlestone_dim: requires k = 2");
  DimensionResult result;
  if (cls.empty()) return result;
  TreeDimEngine engine(cls, TreeDimEngine::Mode::agreement);
  const IndexSet all = full_index_set(cls);
  result.value = engine.dim(all);
  result.tree_certificate = engine.agreement_tree(all, result.value);
  return result;
}

DimensionResult mc_littlestone_dim(const model::HypothesisClass& cls) {
  check_caps(cls, "mc_littlestone_dim");
  if (cls.num_labels < 2) throw ArgumentError("mc_littlestone_dim: requires k >= 2");
  DimensionResult result;
  if (cls.empty()) return result;
  TreeDimEngine engine(cls, TreeDimEngine::Mode::agreement);
  const IndexSet all = full_index_set(cls);
  result.value = engine.dim(all);
  result.tree_certificate = engine.agreement_tree(all, result.value);
  return result;
}

DimensionResult bandit_littlestone_dim(const model::HypothesisClass& cls) {
  check_caps(cls, "bandit_littlestone_dim");
  if (cls.num_labels < 2) throw ArgumentError("bandit_littlestone_dim: requires k >= 2");
  DimensionResult result;
  if (cls.empty()) return result;
  TreeDimEngine engine(cls, TreeDimEngine::Mode::avoidance);
  const IndexSet all = full_index_set(cls);
  result.value = engine.dim(all);
  result.tree_certificate = engine.avoidance_tree(all, result.value);
  return result;
}

struct MulticlassDimCache::Impl {
  model::HypothesisClass root;
  TreeDimEngine engine;

  explicit Impl(const model::HypothesisClass& r)
      : root(r), engine(root, TreeDimEngine::Mode::agreement) {}
};

MulticlassDimCache::MulticlassDimCache(const model::HypothesisClass& root)
    : impl_(std::make_unique<Impl>(root)) {
  check_caps(root, "MulticlassDimCache");
}

MulticlassDimCache::~MulticlassDimCache() = default;
MulticlassDimCache::MulticlassDimCache(MulticlassDimCache&&) noexcept = default;
MulticlassDimCache& MulticlassDimCache::operator=(MulticlassDimCache&&) noexcept = default;

int MulticlassDimCache::dim(const std::vector<int>& member_indices) {
  IndexSet key;
  key.reserve(member_indices.size());
  for (int i : member_indices) {
    if (i < 0 || i >= impl_->root.size()) {
      throw ArgumentError("MulticlassDimCache: member index out of range");
    }
    key.push_back(static_cast<std::uint32_t>(i));
  }
  if (!std::is_sorted(key.begin(), key.end())) std::sort(key.begin(), key.end());
  return impl_->engine.dim(key);
}

void serialize_set_certificate(const SetCertificate& cert, std::ostream& out) {
  out << "set " << cert.points.size() << "\n";
  out << "points";
  for (int p : cert.points) out << ' ' << p;
  out << "\n";
  if (!cert.f0.empty() || !cert.f1.empty()) {
    out << "f0";
    for (model::Label y : cert.f0) out << ' ' << y;
    out << "\nf1";
    for (model::Label y : cert.f1) out << ' ' << y;
    out << "\n";
  }
}

SetCertificate parse_set_certificate(std::istream& in) {
  std::string word;
  if (!(in >> word) || word != "set")
    throw ArgumentError("set certificate: expected 'set <count>' header");
  std::size_t count = 0;
  if (!(in >> count)) throw ArgumentError("set certificate: bad count");

  SetCertificate cert;
  auto read_row = [&](const char* name, auto& dst) {
    dst.resize(count);
    for (std::size_t i = 0; i < count; ++i)
      if (!(in >> dst[i]))
        throw ArgumentError(std::string("set certificate: short ") + name + " row");
  };
  while (in >> word) {
    if (word == "points")
      read_row("points", cert.points);
    else if (word == "f0")
      read_row("f0", cert.f0);
    else if (word == "f1")
      read_row("f1", cert.f1);
    else
      throw ArgumentError("set certificate: unknown row '" + word + "'");
  }
  if (cert.points.size() != count)
    throw ArgumentError("set certificate: missing points row");
  if (cert.f0.size() != cert.f1.size())
    throw ArgumentError("set certificate: f0/f1 rows must pair up");
  return cert;
}

}  // namespace qlab::dims
