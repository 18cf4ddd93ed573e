#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <map>
#include <sstream>

#include "doctest.h"
#include "sbtm/dynamic_network.hpp"
#include "sbtm/rng.hpp"
#include "test_util.hpp"

using namespace sbtm;
using testutil::labels_of;
using testutil::make_network;

TEST_CASE("single-window bucketing") {
  std::istringstream in("0\tA\tB\n10\tB\tA\n");
  auto net = load_temporal_edges(in, {.length = 100}, true);
  CHECK(net.num_steps() == 1);
  CHECK(net.num_nodes() == 2);
  CHECK(net.snapshots[0](0, 1) == 1);
  CHECK(net.snapshots[0](1, 0) == 1);
  net.validate();
}

TEST_CASE("two-window split") {
  std::istringstream in("0\tA\tB\n150\tA\tC\n");
  auto net = load_temporal_edges(in, {.length = 100}, true);
  REQUIRE(net.num_steps() == 2);
  CHECK(net.snapshots[0](0, 1) == 1);
  CHECK(net.snapshots[0](0, 2) == 0);
  CHECK(net.snapshots[1](0, 2) == 1);
  CHECK(net.snapshots[1](0, 1) == 0);
  // C appears only in window 2
  CHECK(!net.is_active(0, 2));
  CHECK(net.is_active(1, 2));
}

TEST_CASE("ISO-8601 timestamps bucket by day") {
  std::istringstream in(
      "2006-06-01\tA\tB\n"
      "2006-06-02T12:00:00\tB\tC\n"
      "2006-09-01\tA\tC\n");
  auto net = load_temporal_edges(in, {.length = 90.0 * 86400.0}, true);
  REQUIRE(net.num_steps() == 2);
  CHECK(net.snapshots[0](0, 1) == 1);
  CHECK(net.snapshots[0](1, 2) == 1);
  CHECK(net.snapshots[1](0, 2) == 1);
}

TEST_CASE("synthetic trace densities match an independent rescan") {
  // oracle: bucket the same event list by direct arithmetic and recount
  Rng rng(42);
  const int n = 30;
  const double window = 50.0;
  std::vector<std::tuple<double, int, int>> events;
  for (int e = 0; e < 1000; ++e) {
    int i = static_cast<int>(rng.uniform_int(n));
    int j = static_cast<int>(rng.uniform_int(n));
    double ts = rng.uniform() * 500.0;
    events.emplace_back(ts, i, j);
  }
  std::ostringstream text;
  for (auto [ts, i, j] : events)
    text << ts << "\tv" << i << "\tv" << j << "\n";

  std::istringstream in(text.str());
  auto net = load_temporal_edges(in, {.length = window}, true);

  double t0 = std::get<0>(events[0]);
  for (auto& e : events) t0 = std::min(t0, std::get<0>(e));
  std::map<std::string, int> id_index;
  for (int i = 0; i < net.num_nodes(); ++i) id_index[net.node_ids[i]] = i;

  std::vector<Adjacency> expect(net.num_steps(),
                                Adjacency::Zero(net.num_nodes(), net.num_nodes()));
  for (auto [ts, i, j] : events) {
    int t = static_cast<int>(std::floor((ts - t0) / window));
    int a = id_index.at("v" + std::to_string(i));
    int b = id_index.at("v" + std::to_string(j));
    if (a != b) expect[t](a, b) = 1;
  }
  for (int t = 0; t < net.num_steps(); ++t)
    CHECK(net.snapshots[t] == expect[t]);
}

TEST_CASE("malformed record reports the line number") {
  std::istringstream in("0\tA\tB\nnot-a-line\n");
  CHECK_THROWS_WITH_AS(load_temporal_edges(in, {.length = 10}, true),
                       doctest::Contains("line 2"), DataError);
}

TEST_CASE("zero events is an empty-network error") {
  std::istringstream in("");
  CHECK_THROWS_AS(load_temporal_edges(in, {.length = 10}, true), DataError);
}

TEST_CASE("activity_filter") {
  SUBCASE("zero thresholds are the identity") {
    auto net = make_network(3, 4, true, {{0, 0, 1}, {1, 1, 2}, {2, 2, 3}});
    auto filtered = activity_filter(net, 0, 0);
    CHECK(filtered.num_nodes() == 4);
    for (int t = 0; t < 3; ++t)
      CHECK(filtered.snapshots[t] == net.snapshots[t]);
  }

  SUBCASE("node active 2 of 9 steps is removed everywhere") {
    std::vector<std::pair<int, int>> inactive;
    for (int t = 0; t < 9; ++t)
      if (t != 0 && t != 5) inactive.emplace_back(t, 3);
    auto net = make_network(9, 4, true, {{0, 3, 0}, {5, 0, 3}, {1, 0, 1}},
                            inactive);
    auto filtered = activity_filter(net, 7, 0);
    CHECK(filtered.num_nodes() == 3);
    for (const auto& id : filtered.node_ids) CHECK(id != "n3");
  }

  SUBCASE("degree threshold uses the aggregate graph") {
    // n0->n1 at t=0 and n0->n2 at t=1: aggregate out-degree 2, in-degree 0
    auto net = make_network(2, 3, true, {{0, 0, 1}, {1, 0, 2}});
    CHECK_THROWS_AS(activity_filter(net, 0, 1), DataError);  // no in-edges for n0
    auto sym = make_network(2, 3, false, {{0, 0, 1}, {1, 0, 2}});
    auto filtered = activity_filter(sym, 0, 2);
    CHECK(filtered.num_nodes() == 1);  // only n0 has aggregate degree 2
  }

  SUBCASE("all nodes removed is an error") {
    auto net = make_network(2, 2, true, {{0, 0, 1}});
    CHECK_THROWS_AS(activity_filter(net, 0, 100), DataError);
  }
}

TEST_CASE("block_cells") {
  SUBCASE("two active nodes, no previous edge: one pair per direction in u=0") {
    auto net = make_network(2, 2, true, {{1, 0, 1}});
    ClassSequence classes;
    classes.k = 2;
    classes.labels = {labels_of({1, 2}), labels_of({1, 2})};
    auto cells = block_cells(net, classes, 1);
    CHECK(cells.count(1, 2, 0) == 1);
    CHECK(cells.count(2, 1, 0) == 1);
    CHECK(cells.count(1, 2, 1) == 0);
    CHECK(cells.total_pairs() == 2);
  }

  SUBCASE("saturated previous step: all pairs in u=1 cells") {
    auto net = make_network(
        2, 3, true,
        {{0, 0, 1}, {0, 1, 0}, {0, 0, 2}, {0, 2, 0}, {0, 1, 2}, {0, 2, 1}});
    ClassSequence classes;
    classes.k = 1;
    classes.labels = {labels_of({1, 1, 1}), labels_of({1, 1, 1})};
    auto cells = block_cells(net, classes, 1);
    CHECK(cells.count(1, 1, 1) == 6);
    CHECK(cells.count(1, 1, 0) == 0);
  }

  SUBCASE("t=1 has no previous step") {
    auto net = make_network(2, 2, true, {});
    ClassSequence classes;
    classes.k = 1;
    classes.labels = {labels_of({1, 1}), labels_of({1, 1})};
    CHECK_THROWS_AS(block_cells(net, classes, 0), DataError);
  }

  SUBCASE("cell counts partition the active ordered pairs (128 nodes)") {
    Rng rng(7);
    const int n = 128;
    std::vector<std::tuple<int, int, int>> edges;
    for (int e = 0; e < 900; ++e)
      edges.emplace_back(static_cast<int>(rng.uniform_int(2)),
                         static_cast<int>(rng.uniform_int(n)),
                         static_cast<int>(rng.uniform_int(n)));
    std::erase_if(edges, [](auto& e) { return std::get<1>(e) == std::get<2>(e); });
    auto net = make_network(2, n, true, edges);
    ClassSequence classes;
    classes.k = 4;
    classes.labels.assign(2, Eigen::VectorXi::Zero(n));
    for (int t = 0; t < 2; ++t)
      for (int i = 0; i < n; ++i)
        classes.labels[t][i] = 1 + static_cast<int>(rng.uniform_int(4));
    auto cells = block_cells(net, classes, 1);
    CHECK(cells.total_pairs() == static_cast<long long>(n) * (n - 1));
  }

  SUBCASE("new nodes land in u=0 cells with previous class 0") {
    auto net = make_network(2, 2, true, {{1, 0, 1}}, {{0, 1}});
    ClassSequence classes;
    classes.k = 2;
    classes.labels = {labels_of({1, 0}), labels_of({1, 2})};
    auto cells = block_cells(net, classes, 1);
    REQUIRE(cells.count(1, 2, 0) == 1);
    CHECK(cells.cell(1, 2, 0)[0].prev_b == 0);
    CHECK(cells.cell(1, 2, 0)[0].prev_a == 1);
  }
}

TEST_CASE("edge_durations") {
  SUBCASE("single run of length 3") {
    auto net = make_network(6, 2, true, {{2, 0, 1}, {3, 0, 1}, {4, 0, 1}});
    auto durations = edge_durations(net);
    REQUIRE(durations.size() == 1);
    CHECK(durations[0] == 3);
  }

  SUBCASE("a gap splits runs") {
    auto net = make_network(3, 2, true, {{0, 0, 1}, {2, 0, 1}});
    auto durations = edge_durations(net);
    REQUIRE(durations.size() == 2);
    CHECK(durations[0] == 1);
    CHECK(durations[1] == 1);
  }

  SUBCASE("random 20-step sequence matches a run-length-encoding oracle") {
    Rng rng(99);
    const int T = 20;
    std::vector<int> presence(T);
    std::vector<std::tuple<int, int, int>> edges;
    for (int t = 0; t < T; ++t) {
      presence[t] = rng.bernoulli(0.5);
      if (presence[t]) edges.emplace_back(t, 0, 1);
    }
    auto net = make_network(T, 2, true, edges);
    auto durations = edge_durations(net);

    std::vector<int> oracle;
    int run = 0;
    for (int t = 0; t < T; ++t) {
      if (presence[t]) {
        ++run;
      } else if (run) {
        oracle.push_back(run);
        run = 0;
      }
    }
    if (run) oracle.push_back(run);
    CHECK(durations == oracle);
  }

  SUBCASE("durations sum to the total edge-step count") {
    Rng rng(3);
    std::vector<std::tuple<int, int, int>> edges;
    for (int e = 0; e < 300; ++e)
      edges.emplace_back(static_cast<int>(rng.uniform_int(7)),
                         static_cast<int>(rng.uniform_int(12)),
                         static_cast<int>(rng.uniform_int(12)));
    std::erase_if(edges, [](auto& e) { return std::get<1>(e) == std::get<2>(e); });
    auto net = make_network(7, 12, true, edges);
    long long total = 0;
    for (int d : edge_durations(net)) total += d;
    CHECK(total == net.edge_step_count());
  }
}

TEST_CASE("edge-list round trip reproduces identical snapshots") {
  Rng rng(11);
  std::vector<std::tuple<int, int, int>> edges;
  for (int e = 0; e < 120; ++e)
    edges.emplace_back(static_cast<int>(rng.uniform_int(4)),
                       static_cast<int>(rng.uniform_int(9)),
                       static_cast<int>(rng.uniform_int(9)));
  std::erase_if(edges, [](auto& e) { return std::get<1>(e) == std::get<2>(e); });
  auto net = make_network(4, 9, true, edges);

  std::ostringstream text;
  write_temporal_edges(net, text, 10.0, 0.0);
  std::istringstream in(text.str());
  auto reload = load_temporal_edges(
      in, {.length = 10.0, .origin = 0.0, .origin_from_data = false}, true);

  REQUIRE(reload.num_steps() == net.num_steps());
  std::map<std::string, int> remap;
  for (int i = 0; i < reload.num_nodes(); ++i) remap[reload.node_ids[i]] = i;
  for (int t = 0; t < net.num_steps(); ++t)
    for (int i = 0; i < net.num_nodes(); ++i)
      for (int j = 0; j < net.num_nodes(); ++j) {
        if (i == j) continue;
        // nodes with no events anywhere may be missing from the reload
        auto a = remap.find(net.node_ids[i]);
        auto b = remap.find(net.node_ids[j]);
        int have = (a != remap.end() && b != remap.end())
                       ? reload.snapshots[t](a->second, b->second)
                       : 0;
        CHECK(have == static_cast<int>(net.snapshots[t](i, j)));
      }
}

TEST_CASE("snapshot dump round trip keeps activity") {
  auto net = make_network(3, 5, false, {{0, 0, 1}, {1, 2, 3}, {2, 0, 4}},
                          {{0, 2}, {2, 1}});
  std::string edges_path = "test_snap_edges.tsv";
  std::string act_path = "test_snap_activity.tsv";
  write_snapshots(net, edges_path, act_path);
  auto reload = load_snapshots(edges_path, act_path, false);
  REQUIRE(reload.num_steps() == 3);
  REQUIRE(reload.num_nodes() == 5);
  std::map<std::string, int> remap;
  for (int i = 0; i < reload.num_nodes(); ++i) remap[reload.node_ids[i]] = i;
  for (int t = 0; t < 3; ++t)
    for (int i = 0; i < 5; ++i) {
      CHECK(reload.is_active(t, remap.at(net.node_ids[i])) ==
            net.is_active(t, i));
      for (int j = 0; j < 5; ++j)
        CHECK(reload.snapshots[t](remap.at(net.node_ids[i]),
                                  remap.at(net.node_ids[j])) ==
              net.snapshots[t](i, j));
    }
  std::remove(edges_path.c_str());
  std::remove(act_path.c_str());
}
