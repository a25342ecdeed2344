#pragma once

#include <Eigen/Dense>

#include <array>
#include <deque>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsm {

// Undirected binary network: symmetric 0/1 adjacency with zero diagonal.
struct Network {
  std::vector<std::string> labels;
  Eigen::MatrixXi adjacency;

  int node_count() const { return static_cast<int>(adjacency.rows()); }

  int edge_count() const {
    long long s = 0;
    const int n = node_count();
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) s += adjacency(i, j);
    return static_cast<int>(s);
  }

  int degree(int i) const { return adjacency.row(i).sum(); }

  std::vector<int> degrees() const {
    std::vector<int> d(node_count());
    for (int i = 0; i < node_count(); ++i) d[i] = degree(i);
    return d;
  }

  int dyad_count() const { return node_count() * (node_count() - 1) / 2; }

  void validate() const {
    const int n = node_count();
    if (adjacency.cols() != n) throw std::invalid_argument("network: adjacency not square");
    if (static_cast<int>(labels.size()) != n)
      throw std::invalid_argument("network: label count mismatch");
    for (int i = 0; i < n; ++i) {
      if (adjacency(i, i) != 0) throw std::invalid_argument("network: nonzero diagonal");
      for (int j = 0; j < n; ++j) {
        const int y = adjacency(i, j);
        if (y != 0 && y != 1) throw std::invalid_argument("network: non-binary entry");
        if (y != adjacency(j, i)) throw std::invalid_argument("network: asymmetric adjacency");
      }
    }
  }
};

struct TriadCensus {
  std::array<long long, 4> counts{0, 0, 0, 0};  // triads with 0,1,2,3 edges
  long long total() const { return counts[0] + counts[1] + counts[2] + counts[3]; }
};

namespace detail {

inline std::vector<std::string> default_labels(int n) {
  std::vector<std::string> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = std::to_string(i);
  return labels;
}

inline std::vector<std::string> tokenize(const std::string& line) {
  std::string cleaned = line;
  for (char& c : cleaned)
    if (c == ',' || c == '\t') c = ' ';
  std::istringstream ss(cleaned);
  std::vector<std::string> tokens;
  std::string tok;
  while (ss >> tok) tokens.push_back(tok);
  return tokens;
}

inline int parse_int(const std::string& tok, const char* what) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("network parse failure: bad ") + what + " '" + tok + "'");
  }
}

}  // namespace detail

inline Network network_from_edges(const std::vector<std::pair<int, int>>& edges, int n,
                                  std::vector<std::string> labels = {}) {
  if (n <= 0) throw std::invalid_argument("network: empty node set");
  Network net;
  net.adjacency = Eigen::MatrixXi::Zero(n, n);
  net.labels = labels.empty() ? detail::default_labels(n) : std::move(labels);
  for (const auto& [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw std::invalid_argument("network: edge endpoint out of range");
    if (i == j) throw std::invalid_argument("network: self-loop rejected");
    net.adjacency(i, j) = 1;
    net.adjacency(j, i) = 1;  // duplicates collapse
  }
  net.validate();
  return net;
}

// One "i j" pair per line, 0-based indices; blank lines ignored.
inline Network network_from_edge_list_text(const std::string& text,
                                           std::optional<int> node_count = std::nullopt) {
  std::vector<std::pair<int, int>> edges;
  int max_index = -1;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const auto tokens = detail::tokenize(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 2)
      throw std::invalid_argument("network parse failure: edge list lines need exactly two indices");
    const int i = detail::parse_int(tokens[0], "node index");
    const int j = detail::parse_int(tokens[1], "node index");
    max_index = std::max({max_index, i, j});
    edges.emplace_back(i, j);
  }
  const int n = node_count.value_or(max_index + 1);
  return network_from_edges(edges, n);
}

// Whitespace/comma-separated square 0/1 matrix.
inline Network network_from_dense_text(const std::string& text) {
  std::vector<std::vector<int>> rows;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const auto tokens = detail::tokenize(line);
    if (tokens.empty()) continue;
    std::vector<int> row;
    row.reserve(tokens.size());
    for (const auto& tok : tokens) {
      const int v = detail::parse_int(tok, "matrix entry");
      if (v != 0 && v != 1) throw std::invalid_argument("network: non-binary entry");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  const int n = static_cast<int>(rows.size());
  if (n == 0) throw std::invalid_argument("network parse failure: empty matrix");
  Network net;
  net.adjacency = Eigen::MatrixXi::Zero(n, n);
  net.labels = detail::default_labels(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n)
      throw std::invalid_argument("network parse failure: ragged matrix");
    for (int j = 0; j < n; ++j) net.adjacency(i, j) = rows[i][j];
  }
  net.validate();
  return net;
}

enum class NetworkFormat { auto_detect, edge_list, dense };

// Auto-detection tries a dense parse when the token grid is square, falling
// back to the edge-list reader.
inline Network load_network(const std::string& text,
                            NetworkFormat format = NetworkFormat::auto_detect) {
  if (format == NetworkFormat::edge_list) return network_from_edge_list_text(text);
  if (format == NetworkFormat::dense) return network_from_dense_text(text);

  std::istringstream ss(text);
  std::string line;
  std::size_t lines = 0, width = 0;
  bool rectangular = true;
  while (std::getline(ss, line)) {
    const auto tokens = detail::tokenize(line);
    if (tokens.empty()) continue;
    if (lines == 0) width = tokens.size();
    rectangular = rectangular && tokens.size() == width;
    ++lines;
  }
  if (rectangular && lines > 0 && lines == width) {
    try {
      return network_from_dense_text(text);
    } catch (const std::invalid_argument&) {
      if (width != 2) throw;
    }
  }
  return network_from_edge_list_text(text);
}

// Marriage network among Renaissance Florentine families (16 families; the
// Pucci have no ties and drop out under drop_isolated).
inline Network florentine_families() {
  const std::vector<std::string> labels = {
      "Acciaiuoli", "Albizzi",      "Barbadori", "Bischeri", "Castellani", "Ginori",
      "Guadagni",   "Lamberteschi", "Medici",    "Pazzi",    "Peruzzi",    "Pucci",
      "Ridolfi",    "Salviati",     "Strozzi",   "Tornabuoni"};
  const std::vector<std::pair<int, int>> edges = {
      {0, 8},  {1, 5},  {1, 6},   {1, 8},  {2, 4},  {2, 8},  {3, 6},
      {3, 10}, {3, 14}, {4, 10},  {4, 14}, {6, 7},  {6, 15}, {8, 12},
      {8, 13}, {8, 15}, {9, 13},  {10, 14}, {12, 14}, {12, 15}};
  return network_from_edges(edges, 16, labels);
}

// Removes degree-zero nodes; `kept_indices`, when provided, receives the
// original index of each surviving node.
inline Network drop_isolated(const Network& net, std::vector<int>* kept_indices = nullptr) {
  std::vector<int> kept;
  for (int i = 0; i < net.node_count(); ++i)
    if (net.degree(i) > 0) kept.push_back(i);
  if (kept.empty()) throw std::invalid_argument("drop_isolated: empty network");

  const int m = static_cast<int>(kept.size());
  Network out;
  out.adjacency = Eigen::MatrixXi::Zero(m, m);
  out.labels.resize(m);
  for (int a = 0; a < m; ++a) {
    out.labels[a] = net.labels[kept[a]];
    for (int b = 0; b < m; ++b) out.adjacency(a, b) = net.adjacency(kept[a], kept[b]);
  }
  if (kept_indices) *kept_indices = kept;
  return out;
}

inline std::vector<int> bfs_distances(const Network& net, int source) {
  const int n = net.node_count();
  std::vector<int> dist(n, -1);
  std::deque<int> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int v = 0; v < n; ++v)
      if (net.adjacency(u, v) == 1 && dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
  }
  return dist;
}

// Nodes of the largest connected component (ties go to the component with
// the smallest node index).
inline std::vector<int> largest_component(const Network& net) {
  const int n = net.node_count();
  std::vector<bool> seen(n, false);
  std::vector<int> best;
  for (int s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::vector<int> comp;
    const auto dist = bfs_distances(net, s);
    for (int v = 0; v < n; ++v)
      if (dist[v] >= 0) {
        comp.push_back(v);
        seen[v] = true;
      }
    if (comp.size() > best.size()) best = std::move(comp);
  }
  return best;
}

inline TriadCensus triad_census(const Network& net) {
  TriadCensus census;
  const int n = net.node_count();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        const int edges = net.adjacency(i, j) + net.adjacency(i, k) + net.adjacency(j, k);
        ++census.counts[edges];
      }
  return census;
}

// Common-neighbour count for every dyad i<j, lexicographic order.
inline std::vector<int> shared_partner_counts(const Network& net) {
  const int n = net.node_count();
  std::vector<int> counts;
  counts.reserve(net.dyad_count());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      int c = 0;
      for (int k = 0; k < n; ++k)
        if (k != i && k != j) c += net.adjacency(i, k) * net.adjacency(j, k);
      counts.push_back(c);
    }
  return counts;
}

inline double modularity(const Network& net, const std::vector<int>& assignment) {
  const int n = net.node_count();
  if (static_cast<int>(assignment.size()) != n)
    throw std::invalid_argument("modularity: assignment size mismatch");
  const double m = net.edge_count();
  if (m == 0) throw std::invalid_argument("modularity: no edges");
  int k = 0;
  for (int c : assignment) k = std::max(k, c + 1);
  std::vector<double> intra(k, 0.0), degree_sum(k, 0.0);
  for (int i = 0; i < n; ++i) {
    degree_sum[assignment[i]] += net.degree(i);
    for (int j = i + 1; j < n; ++j)
      if (net.adjacency(i, j) == 1 && assignment[i] == assignment[j]) intra[assignment[i]] += 1.0;
  }
  double q = 0.0;
  for (int c = 0; c < k; ++c) {
    const double a = degree_sum[c] / (2.0 * m);
    q += intra[c] / m - a * a;
  }
  return q;
}

struct CommunityPartition {
  std::vector<int> assignment;
  int community_count = 0;
  double modularity = 0.0;
};

// Greedy agglomerative modularity maximization: repeatedly merge the
// community pair with the largest positive gain. Ties break on the smallest
// community index pair.
inline CommunityPartition greedy_modularity(const Network& net) {
  const int n = net.node_count();
  const double m = net.edge_count();
  if (m == 0) throw std::invalid_argument("greedy_modularity: no edges");

  std::vector<int> comm(n);
  for (int i = 0; i < n; ++i) comm[i] = i;
  std::vector<bool> alive(n, true);
  std::vector<double> deg(n, 0.0);
  Eigen::MatrixXd between = Eigen::MatrixXd::Zero(n, n);  // edge counts between communities
  for (int i = 0; i < n; ++i) {
    deg[i] = net.degree(i);
    for (int j = i + 1; j < n; ++j)
      if (net.adjacency(i, j) == 1) {
        between(i, j) += 1.0;
        between(j, i) += 1.0;
      }
  }

  for (;;) {
    double best_gain = 0.0;
    int best_a = -1, best_b = -1;
    for (int a = 0; a < n; ++a) {
      if (!alive[a]) continue;
      for (int b = a + 1; b < n; ++b) {
        if (!alive[b] || between(a, b) == 0.0) continue;
        const double gain = between(a, b) / m - deg[a] * deg[b] / (2.0 * m * m);
        if (gain > best_gain + 1e-15) {
          best_gain = gain;
          best_a = a;
          best_b = b;
        }
      }
    }
    if (best_a < 0) break;
    // Merge b into a (a < b keeps the smallest index as the community id).
    for (int c = 0; c < n; ++c) {
      if (!alive[c] || c == best_a || c == best_b) continue;
      between(best_a, c) += between(best_b, c);
      between(c, best_a) = between(best_a, c);
    }
    deg[best_a] += deg[best_b];
    alive[best_b] = false;
    for (int i = 0; i < n; ++i)
      if (comm[i] == best_b) comm[i] = best_a;
  }

  // Relabel communities to 0..K-1 in order of first appearance.
  CommunityPartition part;
  part.assignment.assign(n, -1);
  std::vector<int> relabel(n, -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    if (relabel[comm[i]] < 0) relabel[comm[i]] = next++;
    part.assignment[i] = relabel[comm[i]];
  }
  part.community_count = next;
  part.modularity = modularity(net, part.assignment);
  return part;
}

struct GraphStatistics {
  std::vector<int> degree_sequence;
  std::vector<long long> geodesic_counts;  // index = path length; pairs within the largest component
  std::vector<int> shared_partners;        // per dyad i<j
  TriadCensus triads;
  double modularity = 0.0;
  int community_count = 0;
  bool modularity_defined = false;
  bool geodesics_defined = false;

  double degree_mean() const {
    double s = 0.0;
    for (int d : degree_sequence) s += d;
    return s / static_cast<double>(degree_sequence.size());
  }
  double degree_variance() const {
    const double m = degree_mean();
    double s = 0.0;
    for (int d : degree_sequence) s += (d - m) * (d - m);
    return s / static_cast<double>(degree_sequence.size());
  }
  double geodesic_mean() const {
    double s = 0.0, c = 0.0;
    for (std::size_t d = 1; d < geodesic_counts.size(); ++d) {
      s += static_cast<double>(d) * static_cast<double>(geodesic_counts[d]);
      c += static_cast<double>(geodesic_counts[d]);
    }
    return c > 0.0 ? s / c : 0.0;
  }
  double shared_partner_mean() const {
    double s = 0.0;
    for (int v : shared_partners) s += v;
    return shared_partners.empty() ? 0.0 : s / static_cast<double>(shared_partners.size());
  }
};

inline GraphStatistics graph_statistics(const Network& net) {
  GraphStatistics stats;
  stats.degree_sequence = net.degrees();
  stats.shared_partners = shared_partner_counts(net);
  stats.triads = triad_census(net);

  const auto component = largest_component(net);
  if (component.size() >= 2) {
    std::vector<bool> in_comp(net.node_count(), false);
    for (int v : component) in_comp[v] = true;
    for (int s : component) {
      const auto dist = bfs_distances(net, s);
      for (int v : component)
        if (v > s && dist[v] > 0) {
          if (static_cast<std::size_t>(dist[v]) >= stats.geodesic_counts.size())
            stats.geodesic_counts.resize(dist[v] + 1, 0);
          ++stats.geodesic_counts[dist[v]];
        }
    }
    stats.geodesics_defined = true;
  }

  if (net.edge_count() > 0) {
    const auto part = greedy_modularity(net);
    stats.modularity = part.modularity;
    stats.community_count = part.community_count;
    stats.modularity_defined = true;
  }
  return stats;
}

}  // namespace lsm
