#include "sbtm/dynamic_network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace sbtm {

namespace {

long long days_from_civil(long long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

// Accepts plain numbers, YYYY-MM-DD, and YYYY-MM-DD[T ]HH:MM:SS with an
// optional trailing Z. Returns seconds.
bool parse_timestamp(const std::string& tok, double& out) {
  if (tok.size() >= 10 && tok[4] == '-' && tok[7] == '-') {
    int y, mo, d, h = 0, mi = 0, s = 0;
    char sep = 'T';
    int n = std::sscanf(tok.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep,
                        &h, &mi, &s);
    if (n < 3) return false;
    if (n >= 4 && sep != 'T' && sep != ' ') return false;
    if (mo < 1 || mo > 12 || d < 1 || d > 31) return false;
    out = static_cast<double>(days_from_civil(y, mo, d)) * 86400.0 +
          h * 3600.0 + mi * 60.0 + s;
    return true;
  }
  char* end = nullptr;
  out = std::strtod(tok.c_str(), &end);
  return end != tok.c_str() && *end == '\0';
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  std::istringstream ss(line);
  while (ss >> cur) fields.push_back(cur);
  return fields;
}

struct Event {
  double ts;
  int src, dst;
};

}  // namespace

int DynamicNetwork::active_count(int t) const {
  int n = 0;
  for (auto a : activity[t]) n += a != 0;
  return n;
}

std::vector<int> DynamicNetwork::active_nodes(int t) const {
  std::vector<int> out;
  for (int i = 0; i < num_nodes(); ++i)
    if (is_active(t, i)) out.push_back(i);
  return out;
}

long long DynamicNetwork::edge_step_count() const {
  long long total = 0;
  const int n = num_nodes();
  for (const auto& w : snapshots) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if (w(i, j)) {
          if (directed || i < j) ++total;
        }
  }
  return total;
}

void DynamicNetwork::validate() const {
  const int n = num_nodes();
  if (static_cast<int>(activity.size()) != num_steps())
    throw DataError("activity length does not match snapshot count");
  for (int t = 0; t < num_steps(); ++t) {
    const auto& w = snapshots[t];
    if (w.rows() != n || w.cols() != n)
      throw DataError("snapshot dimension mismatch at step " +
                      std::to_string(t + 1));
    if (static_cast<int>(activity[t].size()) != n)
      throw DataError("activity vector size mismatch at step " +
                      std::to_string(t + 1));
    for (int i = 0; i < n; ++i) {
      if (w(i, i) != 0)
        throw DataError("nonzero diagonal at step " + std::to_string(t + 1));
      for (int j = 0; j < n; ++j) {
        if (w(i, j) > 1)
          throw DataError("non-binary entry at step " + std::to_string(t + 1));
        if (w(i, j) && (!is_active(t, i) || !is_active(t, j)))
          throw DataError("edge incident to inactive node at step " +
                          std::to_string(t + 1));
        if (!directed && w(i, j) != w(j, i))
          throw DataError("asymmetric undirected snapshot at step " +
                          std::to_string(t + 1));
      }
    }
  }
}

void ClassSequence::validate_against(const DynamicNetwork& net) const {
  if (num_steps() != net.num_steps())
    throw DataError("class sequence length does not match network");
  for (int t = 0; t < num_steps(); ++t) {
    if (labels[t].size() != net.num_nodes())
      throw DataError("class vector size mismatch at step " +
                      std::to_string(t + 1));
    for (int i = 0; i < net.num_nodes(); ++i) {
      int c = labels[t][i];
      if (net.is_active(t, i)) {
        if (c < 1 || c > k)
          throw DataError("active node with class outside 1..k at step " +
                          std::to_string(t + 1));
      } else if (c != 0) {
        throw DataError("inactive node with nonzero class at step " +
                        std::to_string(t + 1));
      }
    }
  }
}

long long BlockCells::total_pairs() const {
  long long total = 0;
  for (const auto& cell : members) total += static_cast<long long>(cell.size());
  return total;
}

static DynamicNetwork build_from_events(std::vector<Event>& events,
                                        std::vector<std::string> ids,
                                        const WindowSpec& window,
                                        bool directed) {
  if (events.empty()) throw DataError("empty network: no events in stream");
  if (window.length <= 0) throw ConfigError("window length must be > 0");

  double origin = window.origin;
  if (window.origin_from_data) {
    origin = events.front().ts;
    for (const auto& e : events) origin = std::min(origin, e.ts);
  }

  int T = 0;
  std::vector<int> bucket(events.size());
  for (std::size_t e = 0; e < events.size(); ++e) {
    double rel = events[e].ts - origin;
    if (rel < 0)
      throw DataError("event precedes the window origin");
    bucket[e] = static_cast<int>(std::floor(rel / window.length));
    T = std::max(T, bucket[e] + 1);
  }
  if (window.max_steps > 0) T = std::min(T, window.max_steps);

  const int n = static_cast<int>(ids.size());
  DynamicNetwork net;
  net.directed = directed;
  net.node_ids = std::move(ids);
  net.snapshots.assign(T, Adjacency::Zero(n, n));
  net.activity.assign(T, std::vector<std::uint8_t>(n, 0));
  for (std::size_t e = 0; e < events.size(); ++e) {
    int t = bucket[e];
    if (t >= T) continue;  // beyond the truncated horizon
    int i = events[e].src, j = events[e].dst;
    net.activity[t][i] = 1;
    net.activity[t][j] = 1;
    if (i == j) continue;  // self-edges dropped
    net.snapshots[t](i, j) = 1;
    if (!directed) net.snapshots[t](j, i) = 1;
  }
  return net;
}

DynamicNetwork load_temporal_edges(std::istream& stream, const WindowSpec& window,
                                   bool directed) {
  std::vector<Event> events;
  std::unordered_map<std::string, int> index;
  std::vector<std::string> ids;
  auto intern = [&](const std::string& id) {
    auto [it, inserted] = index.emplace(id, static_cast<int>(ids.size()));
    if (inserted) ids.push_back(id);
    return it->second;
  };

  std::string line;
  long long line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (fields.size() != 3)
      throw DataError("parse error at line " + std::to_string(line_no) +
                      ": expected 'timestamp<TAB>src<TAB>dst'");
    double ts;
    if (!parse_timestamp(fields[0], ts))
      throw DataError("parse error at line " + std::to_string(line_no) +
                      ": bad timestamp '" + fields[0] + "'");
    events.push_back({ts, intern(fields[1]), intern(fields[2])});
  }
  return build_from_events(events, std::move(ids), window, directed);
}

DynamicNetwork load_temporal_edges_file(const std::string& path,
                                        const WindowSpec& window, bool directed) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge list: " + path);
  return load_temporal_edges(in, window, directed);
}

void write_temporal_edges(const DynamicNetwork& net, std::ostream& out,
                          double window, double origin) {
  const int n = net.num_nodes();
  for (int t = 0; t < net.num_steps(); ++t) {
    double ts = origin + t * window;
    const auto& w = net.snapshots[t];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (!w(i, j)) continue;
        if (!net.directed && i > j) continue;
        out << ts << '\t' << net.node_ids[i] << '\t' << net.node_ids[j] << '\n';
      }
  }
}

void write_snapshots(const DynamicNetwork& net, const std::string& edges_path,
                     const std::string& activity_path) {
  std::ofstream edges(edges_path);
  if (!edges) throw DataError("cannot write " + edges_path);
  const int n = net.num_nodes();
  for (int t = 0; t < net.num_steps(); ++t) {
    const auto& w = net.snapshots[t];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (!w(i, j)) continue;
        if (!net.directed && i > j) continue;
        edges << (t + 1) << '\t' << net.node_ids[i] << '\t' << net.node_ids[j]
              << '\n';
      }
  }
  std::ofstream act(activity_path);
  if (!act) throw DataError("cannot write " + activity_path);
  for (int t = 0; t < net.num_steps(); ++t)
    for (int i = 0; i < n; ++i)
      if (net.is_active(t, i)) act << (t + 1) << '\t' << net.node_ids[i] << '\n';
}

DynamicNetwork load_snapshots(const std::string& edges_path,
                              const std::string& activity_path, bool directed) {
  std::ifstream edges(edges_path);
  if (!edges) throw DataError("cannot open " + edges_path);

  std::unordered_map<std::string, int> index;
  std::vector<std::string> ids;
  auto intern = [&](const std::string& id) {
    auto [it, inserted] = index.emplace(id, static_cast<int>(ids.size()));
    if (inserted) ids.push_back(id);
    return it->second;
  };

  struct Rec {
    int t, i, j;
  };
  std::vector<Rec> recs;
  std::vector<std::pair<int, int>> act_recs;
  int T = 0;
  std::string line;
  long long line_no = 0;
  while (std::getline(edges, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_fields(line);
    if (fields.size() != 3)
      throw DataError("parse error in " + edges_path + " at line " +
                      std::to_string(line_no));
    int t = std::atoi(fields[0].c_str());
    if (t < 1)
      throw DataError("bad step index in " + edges_path + " at line " +
                      std::to_string(line_no));
    recs.push_back({t - 1, intern(fields[1]), intern(fields[2])});
    T = std::max(T, t);
  }

  if (!activity_path.empty()) {
    std::ifstream act(activity_path);
    if (!act) throw DataError("cannot open " + activity_path);
    line_no = 0;
    while (std::getline(act, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      auto fields = split_fields(line);
      if (fields.size() != 2)
        throw DataError("parse error in " + activity_path + " at line " +
                        std::to_string(line_no));
      int t = std::atoi(fields[0].c_str());
      if (t < 1)
        throw DataError("bad step index in " + activity_path + " at line " +
                        std::to_string(line_no));
      act_recs.emplace_back(t - 1, intern(fields[1]));
      T = std::max(T, t);
    }
  }

  if (recs.empty() && act_recs.empty())
    throw DataError("empty network: no records in " + edges_path);

  const int n = static_cast<int>(ids.size());
  DynamicNetwork net;
  net.directed = directed;
  net.node_ids = std::move(ids);
  net.snapshots.assign(T, Adjacency::Zero(n, n));
  net.activity.assign(T, std::vector<std::uint8_t>(n, 0));
  for (const auto& r : recs) {
    if (r.i == r.j) continue;
    net.snapshots[r.t](r.i, r.j) = 1;
    if (!directed) net.snapshots[r.t](r.j, r.i) = 1;
    net.activity[r.t][r.i] = 1;
    net.activity[r.t][r.j] = 1;
  }
  for (const auto& [t, i] : act_recs) net.activity[t][i] = 1;
  return net;
}

namespace {

DynamicNetwork filter_once(const DynamicNetwork& net, int min_active,
                           int min_degree, bool& changed) {
  const int n = net.num_nodes();
  const int T = net.num_steps();

  // union (aggregate) graph over all steps
  Adjacency agg = Adjacency::Zero(n, n);
  for (const auto& w : net.snapshots)
    agg = agg.binaryExpr(w, [](std::uint8_t x, std::uint8_t y) {
      return static_cast<std::uint8_t>(x | y);
    });

  std::vector<int> keep;
  for (int i = 0; i < n; ++i) {
    int active_steps = 0;
    for (int t = 0; t < T; ++t) active_steps += net.is_active(t, i);
    int out_deg = 0, in_deg = 0;
    for (int j = 0; j < n; ++j) {
      out_deg += agg(i, j);
      in_deg += agg(j, i);
    }
    if (active_steps >= min_active && out_deg >= min_degree &&
        in_deg >= min_degree)
      keep.push_back(i);
  }
  changed = static_cast<int>(keep.size()) != n;
  if (keep.empty()) throw DataError("empty network: all nodes filtered out");
  if (!changed) return net;

  const int m = static_cast<int>(keep.size());
  DynamicNetwork out;
  out.directed = net.directed;
  out.node_ids.reserve(m);
  for (int i : keep) out.node_ids.push_back(net.node_ids[i]);
  out.snapshots.assign(T, Adjacency::Zero(m, m));
  out.activity.assign(T, std::vector<std::uint8_t>(m, 0));
  for (int t = 0; t < T; ++t) {
    for (int a = 0; a < m; ++a) {
      out.activity[t][a] = net.activity[t][keep[a]];
      for (int b = 0; b < m; ++b)
        out.snapshots[t](a, b) = net.snapshots[t](keep[a], keep[b]);
    }
  }
  return out;
}

}  // namespace

DynamicNetwork activity_filter(const DynamicNetwork& net, int min_active,
                               int min_degree, bool iterate) {
  if (min_active < 0 || min_degree < 0)
    throw ConfigError("filter thresholds must be >= 0");
  bool changed = false;
  DynamicNetwork cur = filter_once(net, min_active, min_degree, changed);
  while (iterate && changed)
    cur = filter_once(cur, min_active, min_degree, changed);
  return cur;
}

BlockCells block_cells_from(const Adjacency& w_prev,
                            const Eigen::VectorXi& prev,
                            const Eigen::VectorXi& cur,
                            const CellLayout& layout) {
  BlockCells cells(layout);
  const int n = static_cast<int>(cur.size());
  for (int i = 0; i < n; ++i) {
    if (cur[i] == 0) continue;
    const int j0 = layout.directed() ? 0 : i + 1;
    for (int j = j0; j < n; ++j) {
      if (j == i || cur[j] == 0) continue;
      int u = w_prev(i, j) ? 1 : 0;  // zero rows make absent nodes u=0
      int idx = layout.transition_index(cur[i], cur[j], u);
      PairEntry entry{i, j, prev[i], prev[j]};
      if (!layout.directed() && cur[i] > cur[j]) {
        // orient so previous classes stay paired with the canonical current
        // classes; stable pairs must land on the xi = 1 diagonal
        entry = {j, i, prev[j], prev[i]};
      }
      cells.members[idx].push_back(entry);
    }
  }
  return cells;
}

BlockCells block_cells(const DynamicNetwork& net, const ClassSequence& classes,
                       int t) {
  if (t < 1 || t >= net.num_steps())
    throw DataError("block_cells needs a previous step: t must be in 2..T");
  CellLayout layout(classes.k, net.directed);
  BlockCells cells = block_cells_from(net.snapshots[t - 1],
                                      classes.labels[t - 1], classes.labels[t],
                                      layout);
  cells.t = t;
  return cells;
}

std::vector<int> edge_durations(const DynamicNetwork& net) {
  std::vector<int> durations;
  const int n = net.num_nodes();
  const int T = net.num_steps();
  for (int i = 0; i < n; ++i) {
    const int j0 = net.directed ? 0 : i + 1;
    for (int j = j0; j < n; ++j) {
      if (j == i) continue;
      int run = 0;
      for (int t = 0; t < T; ++t) {
        if (net.snapshots[t](i, j)) {
          ++run;
        } else if (run > 0) {
          durations.push_back(run);
          run = 0;
        }
      }
      if (run > 0) durations.push_back(run);
    }
  }
  return durations;
}

void write_class_sequence(const ClassSequence& classes,
                          const std::vector<std::string>& node_ids,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "t,node_id,class\n";
  for (int t = 0; t < classes.num_steps(); ++t)
    for (int i = 0; i < classes.labels[t].size(); ++i)
      out << (t + 1) << ',' << node_ids[i] << ',' << classes.labels[t][i]
          << '\n';
}

ClassSequence load_class_sequence(const std::string& path,
                                  const std::vector<std::string>& node_ids) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < node_ids.size(); ++i)
    index[node_ids[i]] = static_cast<int>(i);

  struct Rec {
    int t, i, c;
  };
  std::vector<Rec> recs;
  int T = 0, k = 0;
  std::string line;
  long long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.rfind("t,", 0) == 0) continue;
    std::istringstream ss(line);
    std::string t_s, id, c_s;
    if (!std::getline(ss, t_s, ',') || !std::getline(ss, id, ',') ||
        !std::getline(ss, c_s))
      throw DataError("parse error in " + path + " at line " +
                      std::to_string(line_no));
    auto it = index.find(id);
    if (it == index.end())
      throw DataError("unknown node id '" + id + "' in " + path);
    int t = std::atoi(t_s.c_str());
    int c = std::atoi(c_s.c_str());
    if (t < 1) throw DataError("bad step index in " + path);
    recs.push_back({t - 1, it->second, c});
    T = std::max(T, t);
    k = std::max(k, c);
  }
  if (recs.empty()) throw DataError("no class records in " + path);

  ClassSequence classes;
  classes.k = k;
  classes.labels.assign(T, Eigen::VectorXi::Zero(node_ids.size()));
  for (const auto& r : recs) classes.labels[r.t][r.i] = r.c;
  return classes;
}

void write_membership(const Eigen::VectorXi& labels,
                      const std::vector<std::string>& node_ids,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "node_id,class\n";
  for (int i = 0; i < labels.size(); ++i)
    out << node_ids[i] << ',' << labels[i] << '\n';
}

}  // namespace sbtm
