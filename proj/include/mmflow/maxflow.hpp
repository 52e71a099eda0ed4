#pragma once

// Boykov-Kolmogorov augmenting-path max-flow on integer capacities.

#include <cstdint>
#include <deque>
#include <vector>

namespace mmflow {

class MaxFlowGraph {
 public:
  using Cap = std::int64_t;

  explicit MaxFlowGraph(int nodes, std::size_t edge_hint = 0);

  /// Adds capacities source->i and i->sink (accumulated over calls).
  void add_terminal(int i, Cap from_source, Cap to_sink);
  /// Adds an arc pair i->j (cap) and j->i (reverse_cap).
  void add_edge(int i, int j, Cap cap, Cap reverse_cap);

  Cap solve();

  /// Nodes reachable from the source in the residual network.
  std::vector<char> source_side() const;
  /// Nodes from which the sink is reachable in the residual network.
  std::vector<char> sink_reachers() const;

  int nodes() const { return static_cast<int>(nodes_.size()); }
  std::size_t arcs() const { return arcs_.size(); }
  long augmentations() const { return augmentations_; }
  Cap flow() const { return flow_; }

 private:
  static constexpr int kNone = -1;
  static constexpr int kTerminal = -2;
  static constexpr int kOrphan = -3;

  struct Node {
    int first = kNone;
    int parent = kNone;
    bool sink_tree = false;
    bool active = false;
    int ts = 0;
    int dist = 0;
    // Positive: residual source->node; negative: residual node->sink.
    Cap tr_cap = 0;
  };
  struct Arc {
    int head;
    int next;
    Cap r_cap;
  };

  int head(int a) const { return arcs_[a].head; }
  static int sister(int a) { return a ^ 1; }

  void set_active(int i);
  int next_active();
  void augment(int middle);
  void adopt_source_orphan(int i);
  void adopt_sink_orphan(int i);
  int origin_distance(int j);

  std::vector<Node> nodes_;
  std::vector<Arc> arcs_;
  std::deque<int> active_;
  std::deque<int> orphans_;
  Cap flow_ = 0;
  long augmentations_ = 0;
  int time_ = 0;
  bool solved_ = false;
};

}  // namespace mmflow
