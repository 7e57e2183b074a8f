#include "shade/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "text_io.hpp"

namespace shade {

namespace {

struct UnionFind {
  std::vector<int> parent;
  std::vector<int> size;
  explicit UnionFind(int n) : parent(n), size(n, 1) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size[a] < size[b]) std::swap(a, b);
    parent[b] = a;
    size[a] += size[b];
  }
};

ClusterAssignment finalize_assignment(std::vector<int> labels, int k) {
  ClusterAssignment out;
  out.labels = std::move(labels);
  out.k = k;
  const auto noise = std::count(out.labels.begin(), out.labels.end(),
                                kNoiseLabel);
  out.noise_ratio =
      out.labels.empty()
          ? 0.0
          : static_cast<double>(noise) / static_cast<double>(out.labels.size());
  return out;
}

}  // namespace

StructureTree build_structure_tree(const DcTree& tree, int mu) {
  if (mu < 2) {
    throw std::invalid_argument("build_structure_tree: mu must be >= 2");
  }
  const int n = tree.n_points;
  StructureTree st;
  st.mu = mu;
  st.n_points = n;
  st.home.assign(n, -1);

  // A dc-tree node qualifies when each child subtree holds >= mu leaves.
  std::vector<char> qualifies(tree.node_count(), 0);
  bool any = false;
  for (int id = n; id < tree.node_count(); ++id) {
    if (tree.leaf_count[tree.left[id]] >= mu &&
        tree.leaf_count[tree.right[id]] >= mu) {
      qualifies[id] = 1;
      any = true;
    }
  }

  if (!any) {
    StructureNode root;
    root.id = 0;
    root.parent = -1;
    root.height = tree.height[tree.root];
    root.leaf_count = n;
    root.dc_node = tree.root;
    root.direct_members.resize(n);
    for (int p = 0; p < n; ++p) {
      root.direct_members[p] = p;
      st.home[p] = 0;
    }
    st.nodes.push_back(std::move(root));
    st.root = 0;
    return st;
  }

  // Preorder walk carrying the nearest qualifying ancestor. Qualifying nodes
  // become structure nodes; skip chains between them collapse, and each point
  // lands in the lowest qualifying node above it.
  struct Frame {
    int dc_node;
    int ancestor;  // structure node id, -1 above the topmost qualifying node
  };
  std::vector<Frame> stack;
  stack.push_back({tree.root, -1});
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    if (tree.is_leaf(f.dc_node)) {
      st.home[f.dc_node] = f.ancestor;
      continue;
    }
    int carry = f.ancestor;
    if (qualifies[f.dc_node]) {
      StructureNode node;
      node.id = static_cast<int>(st.nodes.size());
      node.parent = f.ancestor;
      node.height = tree.height[f.dc_node];
      node.dc_node = f.dc_node;
      if (f.ancestor >= 0) st.nodes[f.ancestor].children.push_back(node.id);
      carry = node.id;
      st.nodes.push_back(std::move(node));
    }
    // Right pushed first so the left child is visited first (preorder).
    stack.push_back({tree.right[f.dc_node], carry});
    stack.push_back({tree.left[f.dc_node], carry});
  }
  st.root = 0;

  // Points that never passed a qualifying node attach to the topmost one.
  for (int p = 0; p < n; ++p) {
    if (st.home[p] < 0) st.home[p] = st.root;
  }
  for (int p = 0; p < n; ++p) {
    st.nodes[st.home[p]].direct_members.push_back(p);
  }
  // Preorder ids: children have larger ids, so one reverse sweep accumulates
  // subtree leaf counts.
  for (int id = static_cast<int>(st.nodes.size()) - 1; id >= 0; --id) {
    st.nodes[id].leaf_count +=
        static_cast<int>(st.nodes[id].direct_members.size());
    if (st.nodes[id].parent >= 0) {
      st.nodes[st.nodes[id].parent].leaf_count += st.nodes[id].leaf_count;
    }
  }
  return st;
}

double stability(const StructureTree& tree, int node_id) {
  if (node_id < 0 || node_id >= static_cast<int>(tree.nodes.size())) {
    throw std::invalid_argument("stability: node id out of range");
  }
  const StructureNode& node = tree.nodes[node_id];
  if (node.height == 0.0) {
    // All-coincident subcluster: persists for every density.
    return std::numeric_limits<double>::infinity();
  }
  const double parent_term =
      node.parent < 0 ? 0.0 : 1.0 / tree.nodes[node.parent].height;
  return (1.0 / node.height - parent_term) * node.leaf_count;
}

namespace {

struct ExtractionPasses {
  std::vector<char> flagged;
  std::vector<char> emitted;
  std::vector<int> emitted_label;  // per node: cluster label or -1
  int k = 0;
};

ExtractionPasses run_extraction(const StructureTree& tree) {
  const int m = static_cast<int>(tree.nodes.size());
  ExtractionPasses out;
  out.flagged.assign(m, 0);
  out.emitted.assign(m, 0);
  out.emitted_label.assign(m, -1);

  // Bottom-up: reverse preorder visits children before parents.
  std::vector<double> carried(m, 0.0);
  for (int id = m - 1; id >= 0; --id) {
    const StructureNode& node = tree.nodes[id];
    if (node.children.empty()) {
      out.flagged[id] = 1;
      carried[id] = stability(tree, id);
      continue;
    }
    double child_sum = 0.0;
    for (const int c : node.children) child_sum += carried[c];
    const double own = stability(tree, id);
    if (own > child_sum) {
      out.flagged[id] = 1;
      carried[id] = own;
    } else {
      carried[id] = child_sum;
    }
  }

  // Top-down: the first flagged node on each path defines a cluster.
  struct Frame {
    int id;
    int label;  // emitted ancestor's label, or -1
  };
  std::vector<Frame> stack;
  stack.push_back({tree.root, -1});
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    int label = f.label;
    if (label < 0 && out.flagged[f.id]) {
      label = out.k++;
      out.emitted[f.id] = 1;
    }
    out.emitted_label[f.id] = label;
    const auto& children = tree.nodes[f.id].children;
    for (auto it = children.rbegin(); it != children.rend(); ++it) {
      stack.push_back({*it, label});
    }
  }
  return out;
}

}  // namespace

ClusterAssignment extract_clusters(const StructureTree& tree) {
  const ExtractionPasses passes = run_extraction(tree);
  std::vector<int> labels(tree.n_points, kNoiseLabel);
  for (int p = 0; p < tree.n_points; ++p) {
    labels[p] = passes.emitted_label[tree.home[p]];
  }
  return finalize_assignment(std::move(labels), passes.k);
}

double extracted_total_stability(const StructureTree& tree) {
  const ExtractionPasses passes = run_extraction(tree);
  double total = 0.0;
  for (int id = 0; id < static_cast<int>(tree.nodes.size()); ++id) {
    if (passes.emitted[id]) total += stability(tree, id);
  }
  return total;
}

ClusterAssignment cut_at_epsilon(const DcTree& tree, double epsilon, int mu) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("cut_at_epsilon: epsilon must be > 0");
  }
  if (mu < 1) throw std::invalid_argument("cut_at_epsilon: mu must be >= 1");
  const int n = tree.n_points;

  UnionFind uf(n);
  // rep[node]: an arbitrary fixed leaf of the subtree.
  std::vector<int> rep(tree.node_count());
  for (int id = 0; id < n; ++id) rep[id] = id;
  for (int id = n; id < tree.node_count(); ++id) {
    rep[id] = rep[tree.left[id]];
    if (tree.height[id] <= epsilon) {
      uf.unite(rep[tree.left[id]], rep[tree.right[id]]);
    }
  }

  std::vector<int> labels(n, kNoiseLabel);
  std::vector<int> comp_label(n, -1);
  int k = 0;
  for (int p = 0; p < n; ++p) {
    const int c = uf.find(p);
    if (uf.size[c] < mu) continue;
    if (comp_label[c] < 0) comp_label[c] = k++;
    labels[p] = comp_label[c];
  }
  return finalize_assignment(std::move(labels), k);
}

ClusterAssignment assign_noise_1nn(const Matrix& embedding,
                                   const ClusterAssignment& assignment) {
  const int n = static_cast<int>(embedding.rows());
  if (n != static_cast<int>(assignment.labels.size())) {
    throw std::invalid_argument(
        "assign_noise_1nn: embedding rows and label count differ");
  }
  std::vector<int> anchors;
  for (int i = 0; i < n; ++i) {
    if (assignment.labels[i] != kNoiseLabel) anchors.push_back(i);
  }
  if (anchors.empty()) {
    throw std::invalid_argument("assign_noise_1nn: no clusters to assign to");
  }

  ClusterAssignment out = assignment;
  for (int i = 0; i < n; ++i) {
    if (assignment.labels[i] != kNoiseLabel) continue;
    int best = anchors.front();
    double best_d = (embedding.row(i) - embedding.row(best)).squaredNorm();
    for (const int j : anchors) {
      const double d = (embedding.row(i) - embedding.row(j)).squaredNorm();
      if (d < best_d) {  // strict: ties keep the lower point index
        best_d = d;
        best = j;
      }
    }
    out.labels[i] = assignment.labels[best];
  }
  out.noise_ratio = 0.0;
  return out;
}

void dump_structure_tree(const StructureTree& tree, std::ostream& os) {
  os << "# node_id parent_id height leaf_count stability\n";
  for (const auto& node : tree.nodes) {
    os << node.id << ' ' << node.parent << ' '
       << detail::format_double(node.height) << ' ' << node.leaf_count << ' '
       << detail::format_double(stability(tree, node.id)) << '\n';
  }
}

}  // namespace shade
