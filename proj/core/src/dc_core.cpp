#include "shade/dc_core.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "text_io.hpp"

namespace shade {

namespace {

// Lexicographic edge order used for every tie-break: (weight, min id, max id).
bool edge_less(double w1, int a1, int b1, double w2, int a2, int b2) {
  if (w1 != w2) return w1 < w2;
  const int lo1 = std::min(a1, b1), hi1 = std::max(a1, b1);
  const int lo2 = std::min(a2, b2), hi2 = std::max(a2, b2);
  if (lo1 != lo2) return lo1 < lo2;
  return hi1 < hi2;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
};

}  // namespace

Matrix pairwise_euclidean(const Matrix& data) {
  const Eigen::Index n = data.rows();
  if (n < 2) throw std::invalid_argument("pairwise_euclidean: need n >= 2");
  if (!data.allFinite()) {
    throw std::invalid_argument(
        "pairwise_euclidean: input contains non-finite values");
  }
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (data.row(i) - data.row(j)).norm();
      out(i, j) = d;
      out(j, i) = d;
    }
  }
  return out;
}

Vector core_distances(const Matrix& distances, int mu) {
  const int n = static_cast<int>(distances.rows());
  if (distances.cols() != n) {
    throw std::invalid_argument("core_distances: matrix must be square");
  }
  if (mu < 1) throw std::invalid_argument("core_distances: mu must be >= 1");
  if (n < mu + 1) {
    throw std::invalid_argument("core_distances: insufficient points for mu (" +
                                std::to_string(n) + " points, mu=" +
                                std::to_string(mu) + ")");
  }
  Vector out(n);
  std::vector<double> row(n - 1);
  for (int i = 0; i < n; ++i) {
    int m = 0;
    for (int j = 0; j < n; ++j) {
      if (j != i) row[m++] = distances(i, j);
    }
    std::nth_element(row.begin(), row.begin() + (mu - 1), row.end());
    out[i] = row[mu - 1];
  }
  return out;
}

DistanceContext make_distance_context(const Matrix& distances, int mu) {
  DistanceContext ctx;
  ctx.n = static_cast<int>(distances.rows());
  ctx.mu = mu;
  ctx.core_dist = core_distances(distances, mu);
  return ctx;
}

double mutual_reachability(double d_eucl, double core_i, double core_j) {
  if (!(d_eucl >= 0.0) || !(core_i >= 0.0) || !(core_j >= 0.0) ||
      !std::isfinite(d_eucl) || !std::isfinite(core_i) ||
      !std::isfinite(core_j)) {
    throw std::invalid_argument(
        "mutual_reachability: inputs must be nonnegative and finite");
  }
  return std::max(d_eucl, std::max(core_i, core_j));
}

std::vector<MstEdge> build_mst(int n, const WeightFn& weight) {
  if (n < 2) throw std::invalid_argument("build_mst: need n >= 2");

  // Dense Prim from vertex 0. best[v] is the lightest known edge connecting
  // v to the tree; ties resolved through edge_less everywhere.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<char> in_tree(n, 0);
  std::vector<double> best_w(n, kInf);
  std::vector<int> best_u(n, -1);
  std::vector<MstEdge> edges;
  edges.reserve(n - 1);

  auto eval = [&weight](int a, int b) {
    const double w = a < b ? weight(a, b) : weight(b, a);
    if (!std::isfinite(w)) {
      throw std::invalid_argument("build_mst: non-finite edge weight");
    }
    return w;
  };

  int current = 0;
  in_tree[0] = 1;
  for (int added = 1; added < n; ++added) {
    for (int v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const double w = eval(current, v);
      if (best_u[v] < 0 ||
          edge_less(w, current, v, best_w[v], best_u[v], v)) {
        best_w[v] = w;
        best_u[v] = current;
      }
    }
    int pick = -1;
    for (int v = 0; v < n; ++v) {
      if (in_tree[v] || best_u[v] < 0) continue;
      if (pick < 0 || edge_less(best_w[v], best_u[v], v, best_w[pick],
                                best_u[pick], pick)) {
        pick = v;
      }
    }
    edges.push_back({std::min(best_u[pick], pick),
                     std::max(best_u[pick], pick), best_w[pick]});
    in_tree[pick] = 1;
    current = pick;
  }

  std::sort(edges.begin(), edges.end(), [](const MstEdge& a, const MstEdge& b) {
    return edge_less(a.weight, a.u, a.v, b.weight, b.u, b.v);
  });
  return edges;
}

std::vector<MstEdge> build_mutual_reachability_mst(
    const Matrix& distances, const DistanceContext& ctx) {
  const auto& core = ctx.core_dist;
  return build_mst(ctx.n, [&](int i, int j) {
    return std::max(distances(i, j), std::max(core[i], core[j]));
  });
}

DcTree build_dc_tree(int n, std::vector<MstEdge> edges) {
  if (n < 1) throw std::invalid_argument("build_dc_tree: need n >= 1");
  if (static_cast<int>(edges.size()) != n - 1) {
    throw std::invalid_argument(
        "build_dc_tree: expected n-1 edges, got " +
        std::to_string(edges.size()) + " for n=" + std::to_string(n));
  }
  for (auto& e : edges) {
    if (e.u == e.v || e.u < 0 || e.v < 0 || e.u >= n || e.v >= n) {
      throw std::invalid_argument("build_dc_tree: invalid edge endpoints");
    }
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
      throw std::invalid_argument(
          "build_dc_tree: edge weights must be nonnegative and finite");
    }
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges.begin(), edges.end(), [](const MstEdge& a, const MstEdge& b) {
    return edge_less(a.weight, a.u, a.v, b.weight, b.u, b.v);
  });

  DcTree tree;
  tree.n_points = n;
  const int total = 2 * n - 1;
  tree.parent.assign(total, -1);
  tree.left.assign(total, -1);
  tree.right.assign(total, -1);
  tree.height.assign(total, 0.0);
  tree.leaf_count.assign(total, 1);

  UnionFind uf(n);
  std::vector<int> comp_node(n);  // current tree node of each component root
  for (int i = 0; i < n; ++i) comp_node[i] = i;

  int next_id = n;
  for (const auto& e : edges) {
    const int ru = uf.find(e.u);
    const int rv = uf.find(e.v);
    if (ru == rv) {
      throw std::invalid_argument(
          "build_dc_tree: edges contain a cycle, not a spanning tree");
    }
    const int node = next_id++;
    tree.left[node] = comp_node[ru];
    tree.right[node] = comp_node[rv];
    tree.parent[comp_node[ru]] = node;
    tree.parent[comp_node[rv]] = node;
    tree.height[node] = e.weight;
    tree.leaf_count[node] =
        tree.leaf_count[comp_node[ru]] + tree.leaf_count[comp_node[rv]];
    uf.parent[ru] = rv;
    comp_node[uf.find(rv)] = node;
  }
  tree.root = total - 1;
  return tree;
}

double dc_distance(const DcTree& tree, int i, int j) {
  const int n = tree.n_points;
  if (i < 0 || j < 0 || i >= n || j >= n) {
    throw std::invalid_argument("dc_distance: point index out of range");
  }
  if (i == j) return 0.0;
  // Internal ids exceed their children's ids, so the smaller node is never an
  // ancestor of the larger one.
  int a = i, b = j;
  while (a != b) {
    if (a < b) {
      a = tree.parent[a];
    } else {
      b = tree.parent[b];
    }
  }
  return tree.height[a];
}

Matrix dc_distance_submatrix(const DcTree& tree, std::span<const int> indices) {
  DcDistanceOracle oracle(tree);
  Matrix out;
  oracle.submatrix(indices, out);
  return out;
}

DcDistanceOracle::DcDistanceOracle(const DcTree& tree, bool dense_cache)
    : tree_(&tree) {
  const int total = tree.node_count();
  first_visit_.assign(total, -1);
  euler_nodes_.reserve(2 * total);
  euler_depth_.reserve(2 * total);

  // Iterative Euler tour; recursion would overflow on degenerate chains.
  struct Frame {
    int node;
    int depth;
    int stage;  // 0 = enter, 1 = after left, 2 = after right
  };
  std::vector<Frame> stack;
  stack.push_back({tree.root, 0, 0});
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (first_visit_[f.node] < 0) {
      first_visit_[f.node] = static_cast<int>(euler_nodes_.size());
    }
    euler_nodes_.push_back(f.node);
    euler_depth_.push_back(f.depth);
    if (tree.is_leaf(f.node) || f.stage == 2) {
      stack.pop_back();
      continue;
    }
    const int child = f.stage == 0 ? tree.left[f.node] : tree.right[f.node];
    const int depth = f.depth;
    ++f.stage;
    stack.push_back({child, depth + 1, 0});
  }

  const int m = static_cast<int>(euler_nodes_.size());
  int levels = 1;
  while ((1 << levels) <= m) ++levels;
  sparse_.assign(levels, std::vector<int>(m));
  for (int i = 0; i < m; ++i) sparse_[0][i] = i;
  for (int k = 1; k < levels; ++k) {
    const int span = 1 << k;
    for (int i = 0; i + span <= m; ++i) {
      const int a = sparse_[k - 1][i];
      const int b = sparse_[k - 1][i + span / 2];
      sparse_[k][i] = euler_depth_[a] <= euler_depth_[b] ? a : b;
    }
  }

  if (dense_cache) {
    const int n = tree.n_points;
    dense_ = std::make_unique<Matrix>(Matrix::Zero(n, n));
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double d = tree.height[lca(i, j)];
        (*dense_)(i, j) = d;
        (*dense_)(j, i) = d;
      }
    }
  }
}

int DcDistanceOracle::lca(int i, int j) const {
  int l = first_visit_[i];
  int r = first_visit_[j];
  if (l > r) std::swap(l, r);
  const int len = r - l + 1;
  int k = 0;
  while ((2 << k) <= len) ++k;
  const int a = sparse_[k][l];
  const int b = sparse_[k][r - (1 << k) + 1];
  return euler_nodes_[euler_depth_[a] <= euler_depth_[b] ? a : b];
}

double DcDistanceOracle::operator()(int i, int j) const {
  const int n = tree_->n_points;
  if (i < 0 || j < 0 || i >= n || j >= n) {
    throw std::invalid_argument("DcDistanceOracle: point index out of range");
  }
  if (i == j) return 0.0;
  if (dense_) return (*dense_)(i, j);
  return tree_->height[lca(i, j)];
}

void DcDistanceOracle::submatrix(std::span<const int> indices,
                                 Matrix& out) const {
  const int b = static_cast<int>(indices.size());
  out.resize(b, b);
  for (int r = 0; r < b; ++r) {
    out(r, r) = 0.0;
    for (int c = r + 1; c < b; ++c) {
      const double d = (*this)(indices[r], indices[c]);
      out(r, c) = d;
      out(c, r) = d;
    }
  }
}

void dump_dc_tree(const DcTree& tree, std::ostream& os) {
  os << "# node_id parent_id height leaf_count\n";
  for (int id = 0; id < tree.node_count(); ++id) {
    os << id << ' ' << tree.parent[id] << ' '
       << detail::format_double(tree.height[id]) << ' ' << tree.leaf_count[id]
       << '\n';
  }
}

DcTree load_dc_tree_dump(std::istream& is) {
  struct Row {
    int id, parent, leaves;
    double height;
  };
  std::vector<Row> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Row r{};
    if (!(ls >> r.id >> r.parent >> r.height >> r.leaves)) {
      throw std::runtime_error("tree dump line " + std::to_string(lineno) +
                               ": expected 'node_id parent_id height leaf_count'");
    }
    rows.push_back(r);
  }
  if (rows.empty() || rows.size() % 2 == 0) {
    throw std::runtime_error("tree dump: node count must be odd (2n-1)");
  }
  const int total = static_cast<int>(rows.size());
  const int n = (total + 1) / 2;

  DcTree tree;
  tree.n_points = n;
  tree.parent.assign(total, -1);
  tree.left.assign(total, -1);
  tree.right.assign(total, -1);
  tree.height.assign(total, 0.0);
  tree.leaf_count.assign(total, 1);
  std::vector<char> seen(total, 0);
  for (const auto& r : rows) {
    if (r.id < 0 || r.id >= total || seen[r.id]) {
      throw std::runtime_error("tree dump: bad or duplicate node id " +
                               std::to_string(r.id));
    }
    seen[r.id] = 1;
    tree.parent[r.id] = r.parent;
    tree.height[r.id] = r.height;
    tree.leaf_count[r.id] = r.leaves;
    if (r.parent == -1) tree.root = r.id;
  }
  if (tree.root < 0) throw std::runtime_error("tree dump: no root node");
  for (int id = 0; id < total; ++id) {
    const int p = tree.parent[id];
    if (p == -1) continue;
    if (p < 0 || p >= total || p < n) {
      throw std::runtime_error("tree dump: node " + std::to_string(id) +
                               " has invalid parent " + std::to_string(p));
    }
    if (tree.left[p] < 0) {
      tree.left[p] = id;
    } else if (tree.right[p] < 0) {
      tree.right[p] = id;
    } else {
      throw std::runtime_error("tree dump: node " + std::to_string(p) +
                               " has more than two children");
    }
  }
  for (int id = n; id < total; ++id) {
    if (tree.left[id] < 0 || tree.right[id] < 0) {
      throw std::runtime_error("tree dump: internal node " +
                               std::to_string(id) + " lacks two children");
    }
  }
  return tree;
}

}  // namespace shade
