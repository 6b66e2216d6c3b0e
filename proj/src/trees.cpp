#include "qlab/trees.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace qlab::trees {

namespace {

// Candidate-filtering DFS shared by the path verifiers. `avoid` selects
// the condition a path edge imposes: h(x) != label instead of h(x) = label.
bool paths_realized(const model::HypothesisClass& cls, const MistakeTree& tree,
                    std::size_t pos, int depth_left,
                    const std::vector<int>& candidates, bool avoid) {
  if (depth_left == 0) return !candidates.empty();
  const MistakeTree::Node& node = tree.nodes[pos];
  for (int e = 0; e < tree.arity; ++e) {
    const model::Label lbl = node.edge_labels[static_cast<std::size_t>(e)];
    std::vector<int> next;
    for (int i : candidates) {
      const bool match = cls[i](node.point) == lbl;
      if (avoid ? !match : match) next.push_back(i);
    }
    const std::size_t child = pos * static_cast<std::size_t>(tree.arity) +
                              1 + static_cast<std::size_t>(e);
    if (!paths_realized(cls, tree, child, depth_left - 1, next, avoid)) return false;
  }
  return true;
}

std::vector<int> all_indices(const model::HypothesisClass& cls) {
  std::vector<int> idx(static_cast<std::size_t>(cls.size()));
  for (int i = 0; i < cls.size(); ++i) idx[static_cast<std::size_t>(i)] = i;
  return idx;
}

void check_tree_against_class(const model::HypothesisClass& cls,
                              const MistakeTree& tree) {
  tree.validate();
  for (const MistakeTree::Node& node : tree.nodes) {
    if (node.point < 0 || node.point >= cls.domain_size) {
      throw ArgumentError("tree: node point out of range");
    }
    for (model::Label lbl : node.edge_labels) {
      if (lbl < 0 || lbl >= cls.num_labels) {
        throw ArgumentError("tree: edge label out of range");
      }
    }
  }
}

bool node_edges_distinct(const MistakeTree::Node& node) {
  for (std::size_t i = 0; i < node.edge_labels.size(); ++i) {
    for (std::size_t j = i + 1; j < node.edge_labels.size(); ++j) {
      if (node.edge_labels[i] == node.edge_labels[j]) return false;
    }
  }
  return true;
}

}  // namespace

long long MistakeTree::internal_node_count(int arity, int depth) {
  long long count = 0;
  long long layer = 1;
  for (int d = 0; d < depth; ++d) {
    count += layer;
    layer *= arity;
  }
  return count;
}

void MistakeTree::validate() const {
  if (arity < 2) throw ArgumentError("tree: arity must be >= 2");
  if (depth < 0) throw ArgumentError("tree: negative depth");
  if (static_cast<long long>(nodes.size()) != internal_node_count(arity, depth)) {
    throw ArgumentError("tree: node count does not match complete tree shape");
  }
  for (const Node& node : nodes) {
    if (static_cast<int>(node.edge_labels.size()) != arity) {
      throw ArgumentError("tree: node edge count != arity");
    }
  }
}

void ExampleTree::validate() const {
  if (depth < 0) throw ArgumentError("example tree: negative depth");
  if (static_cast<long long>(nodes.size()) != MistakeTree::internal_node_count(2, depth)) {
    throw ArgumentError("example tree: node count does not match complete tree shape");
  }
}

bool verify_L_shattered(const model::HypothesisClass& cls, const MistakeTree& tree) {
  if (cls.num_labels != 2) throw DomainError("verify_L_shattered: requires k = 2");
  if (tree.arity != 2) throw ArgumentError("verify_L_shattered: arity mismatch");
  check_tree_against_class(cls, tree);
  for (const MistakeTree::Node& node : tree.nodes) {
    if (!node_edges_distinct(node)) return false;
  }
  return paths_realized(cls, tree, 0, tree.depth, all_indices(cls), /*avoid=*/false);
}

bool verify_mcL_shattered(const model::HypothesisClass& cls, const MistakeTree& tree) {
  if (tree.arity != 2) throw ArgumentError("verify_mcL_shattered: arity mismatch");
  check_tree_against_class(cls, tree);
  for (const MistakeTree::Node& node : tree.nodes) {
    if (!node_edges_distinct(node)) return false;
  }
  return paths_realized(cls, tree, 0, tree.depth, all_indices(cls), /*avoid=*/false);
}

bool verify_BL_shattered(const model::HypothesisClass& cls, const MistakeTree& tree) {
  if (tree.arity != cls.num_labels) {
    throw ArgumentError("verify_BL_shattered: arity must equal k");
  }
  check_tree_against_class(cls, tree);
  // k distinct labels on k edges means every label appears exactly once.
  for (const MistakeTree::Node& node : tree.nodes) {
    if (!node_edges_distinct(node)) return false;
  }
  return paths_realized(cls, tree, 0, tree.depth, all_indices(cls), /*avoid=*/true);
}

bool verify_shattered_set(const model::HypothesisClass& cls, const std::vector<int>& points) {
  if (cls.num_labels != 2) throw DomainError("verify_shattered_set: requires k = 2");
  for (int x : points) {
    if (x < 0 || x >= cls.domain_size) throw ArgumentError("set: point out of range");
  }
  const std::size_t t = points.size();
  if (t >= 63) throw SizeLimitError("set: too large");
  const long long want = 1LL << t;
  std::vector<bool> seen(static_cast<std::size_t>(want), false);
  long long found = 0;
  for (const model::Hypothesis& h : cls.members) {
    long long pattern = 0;
    for (std::size_t i = 0; i < t; ++i) {
      pattern = (pattern << 1) | h(points[i]);
    }
    if (!seen[static_cast<std::size_t>(pattern)]) {
      seen[static_cast<std::size_t>(pattern)] = true;
      if (++found == want) return true;
    }
  }
  return found == want;
}

bool verify_n_shattered(const model::HypothesisClass& cls, const std::vector<int>& points,
                        const std::vector<model::Label>& f0,
                        const std::vector<model::Label>& f1) {
  const std::size_t t = points.size();
  if (f0.size() != t || f1.size() != t) {
    throw ArgumentError("witnessed set: witness length mismatch");
  }
  for (int x : points) {
    if (x < 0 || x >= cls.domain_size) throw ArgumentError("set: point out of range");
  }
  for (std::size_t i = 0; i < t; ++i) {
    if (f0[i] < 0 || f0[i] >= cls.num_labels || f1[i] < 0 || f1[i] >= cls.num_labels) {
      throw ArgumentError("witnessed set: witness label out of range");
    }
    if (f0[i] == f1[i]) return false;
  }
  if (t >= 63) throw SizeLimitError("set: too large");
  const long long want = 1LL << t;
  // R is encoded bitwise: bit i set means the mixture takes f0 on points[i].
  for (long long r = 0; r < want; ++r) {
    bool realized = false;
    for (const model::Hypothesis& h : cls.members) {
      bool ok = true;
      for (std::size_t i = 0; i < t && ok; ++i) {
        const model::Label need = (r >> i) & 1 ? f0[i] : f1[i];
        ok = h(points[i]) == need;
      }
      if (ok) {
        realized = true;
        break;
      }
    }
    if (!realized) return false;
  }
  return true;
}

LossClass loss_class(const model::HypothesisClass& cls) {
  if (cls.domain_size * cls.num_labels > 40) {
    throw SizeLimitError("loss_class: |X| * k exceeds 40");
  }
  LossClass out;
  out.source_domain = cls.domain_size;
  out.source_labels = cls.num_labels;
  out.cls.domain_size = cls.domain_size * cls.num_labels;
  out.cls.num_labels = 2;
  for (const model::Hypothesis& h : cls.members) {
    model::Hypothesis pattern;
    pattern.labels.reserve(static_cast<std::size_t>(out.cls.domain_size));
    for (int x = 0; x < cls.domain_size; ++x) {
      for (model::Label y = 0; y < cls.num_labels; ++y) {
        pattern.labels.push_back(h(x) != y ? 1 : 0);
      }
    }
    out.cls.members.push_back(std::move(pattern));
  }
  std::sort(out.cls.members.begin(), out.cls.members.end());
  out.cls.members.erase(std::unique(out.cls.members.begin(), out.cls.members.end()),
                        out.cls.members.end());
  return out;
}

namespace {

// Maps an ExampleTree to the equivalent binary mistake tree over the
// flattened (x, y) domain and checks it is shattered by the loss class.
void require_loss_shattered(const LossClass& loss, const ExampleTree& ztree) {
  ztree.validate();
  MistakeTree zt;
  zt.arity = 2;
  zt.depth = ztree.depth;
  zt.nodes.reserve(ztree.nodes.size());
  for (const ExampleTree::Node& node : ztree.nodes) {
    if (node.x < 0 || node.x >= loss.source_domain || node.y < 0 ||
        node.y >= loss.source_labels) {
      throw ArgumentError("example tree: node out of range");
    }
    zt.nodes.push_back({loss.z_index(node.x, node.y), {0, 1}});
  }
  if (!verify_L_shattered(loss.cls, zt)) {
    throw InvalidCertificateError(
        "loss tree transform: input tree is not shattered by the loss class");
  }
}

}  // namespace

MistakeTree binary_loss_tree_transform(const model::HypothesisClass& cls,
                                       const ExampleTree& ztree) {
  if (cls.num_labels != 2) {
    throw DomainError("binary_loss_tree_transform: requires k = 2");
  }
  const LossClass loss = loss_class(cls);
  require_loss_shattered(loss, ztree);

  MistakeTree out;
  out.arity = 2;
  out.depth = ztree.depth;
  out.nodes.reserve(ztree.nodes.size());
  for (const ExampleTree::Node& node : ztree.nodes) {
    out.nodes.push_back({node.x, {node.y, 1 - node.y}});
  }
  if (!verify_L_shattered(cls, out)) {
    throw InternalInvariantError("binary_loss_tree_transform: output not shattered");
  }
  return out;
}

namespace {

// Recursive expansion for the bandit transform. Writes the node for
// output position `pos`, sourcing from example-tree position `zpos`.
// The edge carrying the node's own label follows the right subtree; all
// other edges replay the left subtree (duplicated, no sharing).
void expand_bandit(const ExampleTree& ztree, int k, std::size_t zpos,
                   std::size_t pos, int depth_left, MistakeTree& out) {
  if (depth_left == 0) return;
  const ExampleTree::Node& znode = ztree.nodes[zpos];
  MistakeTree::Node node;
  node.point = znode.x;
  node.edge_labels.resize(static_cast<std::size_t>(k));
  for (model::Label e = 0; e < k; ++e) node.edge_labels[static_cast<std::size_t>(e)] = e;
  out.nodes[pos] = std::move(node);
  for (model::Label e = 0; e < k; ++e) {
    const std::size_t zchild = 2 * zpos + (e == znode.y ? 2 : 1);
    const std::size_t child =
        pos * static_cast<std::size_t>(k) + 1 + static_cast<std::size_t>(e);
    expand_bandit(ztree, k, zchild, child, depth_left - 1, out);
  }
}

}  // namespace

MistakeTree bandit_loss_tree_transform(const model::HypothesisClass& cls,
                                       const ExampleTree& ztree) {
  if (cls.num_labels < 2) {
    throw ArgumentError("bandit_loss_tree_transform: requires k >= 2");
  }
  const LossClass loss = loss_class(cls);
  require_loss_shattered(loss, ztree);

  MistakeTree out;
  out.arity = cls.num_labels;
  out.depth = ztree.depth;
  out.nodes.resize(static_cast<std::size_t>(
      MistakeTree::internal_node_count(out.arity, out.depth)));
  if (out.depth > 0) expand_bandit(ztree, cls.num_labels, 0, 0, out.depth, out);
  if (!verify_BL_shattered(cls, out)) {
    throw InternalInvariantError("bandit_loss_tree_transform: output not shattered");
  }
  return out;
}

void serialize_tree(const MistakeTree& tree, std::ostream& out) {
  out << tree.arity << ' ' << tree.depth << '\n';
  for (const MistakeTree::Node& node : tree.nodes) {
    out << node.point;
    for (model::Label lbl : node.edge_labels) out << ' ' << lbl;
    out << '\n';
  }
}

MistakeTree parse_tree(std::istream& in) {
  std::string line;
  MistakeTree tree;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    if (!have_header) {
      if (!(row >> tree.arity >> tree.depth)) {
        throw ArgumentError("tree file: header must be 'arity depth'");
      }
      have_header = true;
      continue;
    }
    MistakeTree::Node node;
    if (!(row >> node.point)) throw ArgumentError("tree file: bad node line");
    model::Label lbl;
    while (row >> lbl) node.edge_labels.push_back(lbl);
    tree.nodes.push_back(std::move(node));
  }
  if (!have_header) throw ArgumentError("tree file: missing header");
  tree.validate();
  return tree;
}

MistakeTree parse_tree_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("tree file: cannot open " + path);
  return parse_tree(in);
}

void serialize_example_tree(const ExampleTree& tree, std::ostream& out) {
  out << 2 << ' ' << tree.depth << '\n';
  for (const ExampleTree::Node& node : tree.nodes) {
    out << node.x << ' ' << node.y << '\n';
  }
}

ExampleTree parse_example_tree(std::istream& in) {
  std::string line;
  ExampleTree tree;
  bool have_header = false;
  int arity = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    if (!have_header) {
      if (!(row >> arity >> tree.depth) || arity != 2) {
        throw ArgumentError("example tree file: header must be '2 depth'");
      }
      have_header = true;
      continue;
    }
    ExampleTree::Node node;
    if (!(row >> node.x >> node.y)) throw ArgumentError("example tree file: bad node line");
    tree.nodes.push_back(node);
  }
  if (!have_header) throw ArgumentError("example tree file: missing header");
  tree.validate();
  return tree;
}

}  // namespace qlab::trees
