#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qlab/model.hpp"

namespace qlab::trees {

// Complete arity-way tree of the given depth, internal nodes stored as a
// flat array in BFS order ((arity^depth - 1) / (arity - 1) entries; the
// children of node i start at arity*i + 1). Each internal node names a
// domain point and labels its outgoing edges.
struct MistakeTree {
  int arity = 2;
  int depth = 0;
  struct Node {
    int point = 0;
    std::vector<model::Label> edge_labels;  // one per outgoing edge
  };
  std::vector<Node> nodes;

  static long long internal_node_count(int arity, int depth);
  // Structural checks (shape, edge arity); throws ArgumentError.
  void validate() const;
};

// Complete binary tree over labeled examples, BFS order as above. Edges
// are implicit: left edge 0, right edge 1.
struct ExampleTree {
  int depth = 0;
  struct Node {
    int x = 0;
    model::Label y = 0;
  };
  std::vector<Node> nodes;

  void validate() const;
};

// The induced binary class on Z = X x Y whose members are the mistake
// indicators z = (x, y) -> 1[h(x) != y] of the source class. Duplicate
// patterns are deduplicated and members sorted lexicographically.
struct LossClass {
  model::HypothesisClass cls;  // binary class on n*k points
  int source_domain = 0;       // n
  int source_labels = 0;       // k

  int z_index(int x, model::Label y) const { return x * source_labels + y; }
  std::pair<int, model::Label> z_split(int z) const {
    return {z / source_labels, z % source_labels};
  }
};

// --- Verifiers ----------------------------------------------------------
// Each checks that every root-to-leaf edge-label path is realized /
// avoided by some member. A depth-0 tree verifies exactly when the class
// is non-empty. Structural violations (wrong arity for the mode, bad
// labels, bad points) raise ArgumentError.

// Binary mistake tree: sibling edges carry {0, 1} (certificates emit them
// in (0, 1) order; either order is accepted). Path condition: some h has
// h(x_i) = edge label for every node on the path. Requires k = 2.
bool verify_L_shattered(const model::HypothesisClass& cls, const MistakeTree& tree);

// Binary tree, sibling edges carry two distinct labels from [k]. Path
// condition as above.
bool verify_mcL_shattered(const model::HypothesisClass& cls, const MistakeTree& tree);

// Complete k-ary tree; each internal node's k edges carry the k distinct
// labels. Path condition: some h has h(x_i) != edge label at every node.
bool verify_BL_shattered(const model::HypothesisClass& cls, const MistakeTree& tree);

// Binary shattering of a point set: all 2^t labelings realized. k = 2 only.
bool verify_shattered_set(const model::HypothesisClass& cls, const std::vector<int>& points);

// Witnessed multiclass shattering: f0/f1 disagree pointwise on the set and
// every f0/f1 mixture over the set is realized.
bool verify_n_shattered(const model::HypothesisClass& cls, const std::vector<int>& points,
                        const std::vector<model::Label>& f0,
                        const std::vector<model::Label>& f1);

// --- Loss class and tree transforms -------------------------------------

// Cap: |X| * k <= 40, else SizeLimitError.
LossClass loss_class(const model::HypothesisClass& cls);

// Binary classes only (k = 2). Input: ExampleTree shattered by the loss
// class (checked; InvalidCertificateError otherwise). Output: MistakeTree
// of the same depth over X with node (x, y) mapped to point x, left edge
// y, right edge 1 - y; shattered by the source class (checked internally).
MistakeTree binary_loss_tree_transform(const model::HypothesisClass& cls,
                                       const ExampleTree& ztree);

// Any k >= 2. Input as above. Output: complete k-ary tree of the same
// depth: node (x, y) becomes point x with all k edge labels; the edge
// labeled y leads to the transformed right subtree, every other edge to a
// copy of the transformed left subtree. Avoidance-shattered by the source
// class (checked internally).
MistakeTree bandit_loss_tree_transform(const model::HypothesisClass& cls,
                                       const ExampleTree& ztree);

struct ChainReport {
  int ldim_loss = -1;    // binary dimension of the loss class
  int bldim = -1;        // bandit dimension of the source class
  int mcldim = -1;       // multiclass dimension of the source class
  double bound_4klogk = 0.0;  // 4 * k * log2(k) * mcldim, reported only
};

// Computes the chain ldim_loss <= bldim (asserted exactly;
// InternalInvariantError on violation) and the 4k log k reference value.
ChainReport dim_chain_report(const model::HypothesisClass& cls);

// --- Text formats --------------------------------------------------------
// MistakeTree: header "arity depth", then one BFS line per internal node:
// "x e0 e1 [...]". ExampleTree: header "2 depth", node lines "x y".

void serialize_tree(const MistakeTree& tree, std::ostream& out);
MistakeTree parse_tree(std::istream& in);
MistakeTree parse_tree_file(const std::string& path);

void serialize_example_tree(const ExampleTree& tree, std::ostream& out);
ExampleTree parse_example_tree(std::istream& in);

}  // namespace qlab::trees
