#include "mmflow/maxflow.hpp"

#include "mmflow/core.hpp"

#include <algorithm>
#include <limits>

namespace mmflow {

namespace {
constexpr int kInfDist = std::numeric_limits<int>::max();
}

MaxFlowGraph::MaxFlowGraph(int nodes, std::size_t edge_hint) : nodes_(nodes) {
  arcs_.reserve(2 * edge_hint);
}

void MaxFlowGraph::add_terminal(int i, Cap from_source, Cap to_sink) {
  if (from_source < 0 || to_sink < 0) throw Error("maxflow: negative terminal capacity");
  Node& n = nodes_[i];
  if (n.tr_cap > 0)
    from_source += n.tr_cap;
  else
    to_sink -= n.tr_cap;
  flow_ += std::min(from_source, to_sink);
  n.tr_cap = from_source - to_sink;
}

void MaxFlowGraph::add_edge(int i, int j, Cap cap, Cap reverse_cap) {
  if (cap < 0 || reverse_cap < 0) throw Error("maxflow: negative edge capacity");
  if (i == j) return;
  const int a = static_cast<int>(arcs_.size());
  arcs_.push_back({j, nodes_[i].first, cap});
  nodes_[i].first = a;
  arcs_.push_back({i, nodes_[j].first, reverse_cap});
  nodes_[j].first = a + 1;
}

void MaxFlowGraph::set_active(int i) {
  if (nodes_[i].active) return;
  nodes_[i].active = true;
  active_.push_back(i);
}

int MaxFlowGraph::next_active() {
  while (!active_.empty()) {
    const int i = active_.front();
    active_.pop_front();
    nodes_[i].active = false;
    if (nodes_[i].parent != kNone) return i;
  }
  return kNone;
}

MaxFlowGraph::Cap MaxFlowGraph::solve() {
  if (solved_) return flow_;
  solved_ = true;
  for (int i = 0; i < nodes(); ++i) {
    Node& n = nodes_[i];
    n.ts = 0;
    if (n.tr_cap != 0) {
      n.sink_tree = n.tr_cap < 0;
      n.parent = kTerminal;
      n.dist = 1;
      set_active(i);
    } else {
      n.parent = kNone;
    }
  }

  int current = kNone;
  while (true) {
    int i = current;
    if (i != kNone) {
      nodes_[i].active = false;
      if (nodes_[i].parent == kNone) i = kNone;
    }
    if (i == kNone && (i = next_active()) == kNone) break;

    // Grow the tree of i until it touches the other tree.
    int middle = kNone;
    const Node ni = nodes_[i];
    for (int a = ni.first; a != kNone; a = arcs_[a].next) {
      const Cap cap = ni.sink_tree ? arcs_[sister(a)].r_cap : arcs_[a].r_cap;
      if (cap == 0) continue;
      const int j = head(a);
      Node& nj = nodes_[j];
      if (nj.parent == kNone) {
        nj.sink_tree = ni.sink_tree;
        nj.parent = sister(a);
        nj.ts = ni.ts;
        nj.dist = ni.dist + 1;
        set_active(j);
      } else if (nj.sink_tree != ni.sink_tree) {
        middle = ni.sink_tree ? sister(a) : a;
        break;
      } else if (nj.ts <= ni.ts && nj.dist > ni.dist) {
        nj.parent = sister(a);
        nj.ts = ni.ts;
        nj.dist = ni.dist + 1;
      }
    }

    ++time_;
    if (middle == kNone) {
      current = kNone;
      continue;
    }
    // Keep i as the current node; the active flag prevents re-queueing.
    nodes_[i].active = true;
    current = i;
    augment(middle);
    while (!orphans_.empty()) {
      const int o = orphans_.front();
      orphans_.pop_front();
      if (nodes_[o].sink_tree)
        adopt_sink_orphan(o);
      else
        adopt_source_orphan(o);
    }
  }
  return flow_;
}

void MaxFlowGraph::augment(int middle) {
  ++augmentations_;
  Cap bottleneck = arcs_[middle].r_cap;
  // Source tree: flow runs from the root down to the tail of `middle`.
  for (int i = head(sister(middle));;) {
    const int a = nodes_[i].parent;
    if (a == kTerminal) {
      bottleneck = std::min(bottleneck, nodes_[i].tr_cap);
      break;
    }
    bottleneck = std::min(bottleneck, arcs_[sister(a)].r_cap);
    i = head(a);
  }
  for (int i = head(middle);;) {
    const int a = nodes_[i].parent;
    if (a == kTerminal) {
      bottleneck = std::min(bottleneck, -nodes_[i].tr_cap);
      break;
    }
    bottleneck = std::min(bottleneck, arcs_[a].r_cap);
    i = head(a);
  }

  arcs_[middle].r_cap -= bottleneck;
  arcs_[sister(middle)].r_cap += bottleneck;
  for (int i = head(sister(middle));;) {
    const int a = nodes_[i].parent;
    if (a == kTerminal) {
      nodes_[i].tr_cap -= bottleneck;
      if (nodes_[i].tr_cap == 0) {
        nodes_[i].parent = kOrphan;
        orphans_.push_front(i);
      }
      break;
    }
    arcs_[a].r_cap += bottleneck;
    arcs_[sister(a)].r_cap -= bottleneck;
    if (arcs_[sister(a)].r_cap == 0) {
      nodes_[i].parent = kOrphan;
      orphans_.push_front(i);
    }
    i = head(a);
  }
  for (int i = head(middle);;) {
    const int a = nodes_[i].parent;
    if (a == kTerminal) {
      nodes_[i].tr_cap += bottleneck;
      if (nodes_[i].tr_cap == 0) {
        nodes_[i].parent = kOrphan;
        orphans_.push_front(i);
      }
      break;
    }
    arcs_[a].r_cap -= bottleneck;
    arcs_[sister(a)].r_cap += bottleneck;
    if (arcs_[a].r_cap == 0) {
      nodes_[i].parent = kOrphan;
      orphans_.push_front(i);
    }
    i = head(a);
  }
  flow_ += bottleneck;
}

// Distance from j to a terminal along parent links, or kInfDist if the path
// ends in an orphan. Nodes already checked in this round carry ts == time_.
int MaxFlowGraph::origin_distance(int j) {
  int d = 0;
  while (true) {
    Node& n = nodes_[j];
    if (n.ts == time_) return d + n.dist;
    const int a = n.parent;
    ++d;
    if (a == kTerminal) {
      n.ts = time_;
      n.dist = 1;
      return d;
    }
    if (a == kOrphan) return kInfDist;
    j = head(a);
  }
}

void MaxFlowGraph::adopt_source_orphan(int i) {
  int best = kNone, d_min = kInfDist;
  for (int a0 = nodes_[i].first; a0 != kNone; a0 = arcs_[a0].next) {
    if (arcs_[sister(a0)].r_cap == 0) continue;
    const int j = head(a0);
    if (nodes_[j].sink_tree || nodes_[j].parent == kNone) continue;
    int d = origin_distance(j);
    if (d == kInfDist) continue;
    if (d < d_min) {
      best = a0;
      d_min = d;
    }
    for (int k = j; nodes_[k].ts != time_; k = head(nodes_[k].parent)) {
      nodes_[k].ts = time_;
      nodes_[k].dist = d--;
    }
  }
  if (best != kNone) {
    nodes_[i].parent = best;
    nodes_[i].ts = time_;
    nodes_[i].dist = d_min + 1;
    return;
  }
  for (int a0 = nodes_[i].first; a0 != kNone; a0 = arcs_[a0].next) {
    const int j = head(a0);
    const int a = nodes_[j].parent;
    if (nodes_[j].sink_tree || a == kNone) continue;
    if (arcs_[sister(a0)].r_cap > 0) set_active(j);
    if (a != kTerminal && a != kOrphan && head(a) == i) {
      nodes_[j].parent = kOrphan;
      orphans_.push_back(j);
    }
  }
  nodes_[i].parent = kNone;
}

void MaxFlowGraph::adopt_sink_orphan(int i) {
  int best = kNone, d_min = kInfDist;
  for (int a0 = nodes_[i].first; a0 != kNone; a0 = arcs_[a0].next) {
    if (arcs_[a0].r_cap == 0) continue;
    const int j = head(a0);
    if (!nodes_[j].sink_tree || nodes_[j].parent == kNone) continue;
    int d = origin_distance(j);
    if (d == kInfDist) continue;
    if (d < d_min) {
      best = a0;
      d_min = d;
    }
    for (int k = j; nodes_[k].ts != time_; k = head(nodes_[k].parent)) {
      nodes_[k].ts = time_;
      nodes_[k].dist = d--;
    }
  }
  if (best != kNone) {
    nodes_[i].parent = best;
    nodes_[i].ts = time_;
    nodes_[i].dist = d_min + 1;
    return;
  }
  for (int a0 = nodes_[i].first; a0 != kNone; a0 = arcs_[a0].next) {
    const int j = head(a0);
    const int a = nodes_[j].parent;
    if (!nodes_[j].sink_tree || a == kNone) continue;
    if (arcs_[a0].r_cap > 0) set_active(j);
    if (a != kTerminal && a != kOrphan && head(a) == i) {
      nodes_[j].parent = kOrphan;
      orphans_.push_back(j);
    }
  }
  nodes_[i].parent = kNone;
}

std::vector<char> MaxFlowGraph::source_side() const {
  std::vector<char> seen(nodes_.size(), 0);
  std::vector<int> stack;
  for (int i = 0; i < nodes(); ++i)
    if (nodes_[i].tr_cap > 0) {
      seen[i] = 1;
      stack.push_back(i);
    }
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    for (int a = nodes_[i].first; a != kNone; a = arcs_[a].next) {
      const int j = head(a);
      if (!seen[j] && arcs_[a].r_cap > 0) {
        seen[j] = 1;
        stack.push_back(j);
      }
    }
  }
  return seen;
}

std::vector<char> MaxFlowGraph::sink_reachers() const {
  std::vector<char> seen(nodes_.size(), 0);
  std::vector<int> stack;
  for (int i = 0; i < nodes(); ++i)
    if (nodes_[i].tr_cap < 0) {
      seen[i] = 1;
      stack.push_back(i);
    }
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    // j reaches i when the arc j->i (sister of i->j) has residual capacity.
    for (int a = nodes_[i].first; a != kNone; a = arcs_[a].next) {
      const int j = head(a);
      if (!seen[j] && arcs_[sister(a)].r_cap > 0) {
        seen[j] = 1;
        stack.push_back(j);
      }
    }
  }
  return seen;
}

}  // namespace mmflow
