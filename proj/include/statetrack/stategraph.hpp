#pragma once

// State graph: one edge per accepted candidate, placed at the frame where the
// candidate emerged. Nodes are track states. Every edge consumes the current
// state of each pre-set track and yields a fresh state for each post-set
// track, labelled from the describer's object texts.

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "statetrack/backend.hpp"
#include "statetrack/io.hpp"
#include "statetrack/partition.hpp"

namespace statetrack {

inline constexpr const char* kPromptLabel = "prompt object";
inline constexpr const char* kUnknownVerb = "unknown";

struct StateChange {
  int t = 0;
  std::vector<std::string> pre_track_ids;
  std::vector<std::string> post_track_ids;
  std::string new_track_id;
  Description description;
};

struct StateNode {
  std::string id;  // "<track>#<state index>"
  std::string track_id;
  std::string label;
  int start_frame = 0;

  bool operator==(const StateNode&) const = default;
};

struct StateEdge {
  StateChange change;
  std::vector<std::string> pre_nodes;
  std::vector<std::string> post_nodes;
  std::vector<std::string> contour_tracks;  // after-frame contour index -> track id
  std::string diagnostic;                   // nonempty when the describer failed
};

struct StateGraph {
  std::vector<StateNode> nodes;
  std::vector<StateEdge> edges;

  const StateNode* node(const std::string& id) const {
    for (const auto& n : nodes) {
      if (n.id == id) return &n;
    }
    return nullptr;
  }
};

struct StateEvent {
  int t = 0;
  const PoolTubelet* tubelet = nullptr;
};

// One event per valid tubelet at its start frame: ascending frame, then
// descending seed area, then seed hash.
inline std::vector<StateEvent> detect_state_changes(const std::vector<const PoolTubelet*>& valid) {
  std::vector<StateEvent> events;
  for (const auto* t : valid) events.push_back({t->tubelet.start_frame, t});
  std::sort(events.begin(), events.end(), [](const StateEvent& a, const StateEvent& b) {
    if (a.t != b.t) return a.t < b.t;
    const auto aa = a.tubelet->seed.area();
    const auto ba = b.tubelet->seed.area();
    if (aa != ba) return aa > ba;
    return a.tubelet->seed_hash < b.tubelet->seed_hash;
  });
  return events;
}

inline StateGraph build_state_graph(const PoolTubelet& prompt, const std::vector<const PoolTubelet*>& valid,
                                    const Backend& backend) {
  StateGraph g;
  std::map<std::string, int> state_count;
  std::map<std::string, std::string> current_node;
  auto add_node = [&](const std::string& track, std::string label, int frame) {
    const int k = state_count[track]++;
    StateNode n{track + "#" + std::to_string(k), track, std::move(label), frame};
    current_node[track] = n.id;
    g.nodes.push_back(n);
    return n.id;
  };
  auto label_of = [&](const std::string& track) -> std::string {
    auto it = current_node.find(track);
    return it == current_node.end() ? std::string("unknown object") : g.node(it->second)->label;
  };

  const auto& prompt_track = prompt.tubelet;
  add_node(prompt_track.id, kPromptLabel, 0);
  const BinaryMask* prompt0 = prompt_track.mask_at(0);
  if (!prompt0 || prompt0->empty()) throw ValidationError("prompt track is empty at frame 0");
  const std::vector<BinaryMask> before{*prompt0};

  std::vector<const PoolTubelet*> accepted;
  for (const auto& ev : detect_state_changes(valid)) {
    const int s = ev.t;
    StateEdge edge;
    auto& ch = edge.change;
    ch.t = s;
    ch.new_track_id = ev.tubelet->tubelet.id;
    std::vector<const Tubelet*> post{&prompt_track};
    for (const auto* a : accepted) {
      if (a->tubelet.start_frame < s) post.push_back(&a->tubelet);
    }
    for (const auto* t : post) ch.pre_track_ids.push_back(t->id);
    post.push_back(&ev.tubelet->tubelet);
    for (const auto* t : post) ch.post_track_ids.push_back(t->id);

    std::vector<BinaryMask> after;
    for (const auto* t : post) {
      const auto* m = t->mask_at(s);
      if (m && !m->empty()) {
        after.push_back(*m);
        edge.contour_tracks.push_back(t->id);
      }
    }
    try {
      ch.description = backend.describe(0, s, before, after);
    } catch (const std::exception& e) {
      ch.description = {kUnknownVerb, {}};
      edge.diagnostic = std::string("describer failed: ") + e.what();
    }

    std::map<std::string, std::string> texts;
    for (const auto& [idx, text] : ch.description.objects) {
      if (idx >= 0 && static_cast<std::size_t>(idx) < edge.contour_tracks.size()) {
        texts[edge.contour_tracks[static_cast<std::size_t>(idx)]] = text;
      }
    }
    for (const auto& id : ch.pre_track_ids) edge.pre_nodes.push_back(current_node.at(id));
    for (const auto& id : ch.post_track_ids) {
      auto it = texts.find(id);
      edge.post_nodes.push_back(add_node(id, it != texts.end() ? it->second : label_of(id), s));
    }
    g.edges.push_back(std::move(edge));
    accepted.push_back(ev.tubelet);
  }
  return g;
}

// ---------------------------------------------------------------------------
// graph.json

inline json graph_to_json(const StateGraph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes) {
    nodes.push_back(json{{"id", n.id}, {"label", n.label}, {"start_frame", n.start_frame}, {"track", n.track_id}});
  }
  json edges = json::array();
  for (const auto& e : g.edges) {
    json objs = json::array();
    for (const auto& [idx, text] : e.change.description.objects) objs.push_back(json::array({idx, text}));
    json je{{"t", e.change.t},
            {"pre", e.pre_nodes},
            {"post", e.post_nodes},
            {"verb", e.change.description.action_verb},
            {"objects", std::move(objs)},
            {"pre_tracks", e.change.pre_track_ids},
            {"post_tracks", e.change.post_track_ids},
            {"new_track", e.change.new_track_id},
            {"contour_tracks", e.contour_tracks}};
    if (!e.diagnostic.empty()) je["diagnostic"] = e.diagnostic;
    edges.push_back(std::move(je));
  }
  return json{{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

inline std::string serialize_graph(const StateGraph& g) { return graph_to_json(g).dump(2) + "\n"; }

inline StateGraph graph_from_json(const json& doc, const std::string& where = "graph.json") {
  JsonReader r(doc, where);
  StateGraph g;
  const auto& nodes = r.array("nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    JsonReader n(nodes[i], where + ".nodes[" + std::to_string(i) + "]");
    StateNode node{n.get<std::string>("id"), "", n.get<std::string>("label"), n.get<int>("start_frame")};
    node.track_id = n.get_or<std::string>("track", node.id.substr(0, node.id.rfind('#')));
    g.nodes.push_back(std::move(node));
  }
  const auto& edges = r.array("edges");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    JsonReader e(edges[i], where + ".edges[" + std::to_string(i) + "]");
    StateEdge edge;
    edge.change.t = e.get<int>("t");
    edge.pre_nodes = e.get<std::vector<std::string>>("pre");
    edge.post_nodes = e.get<std::vector<std::string>>("post");
    edge.change.description.action_verb = e.get<std::string>("verb");
    for (const auto& o : e.array("objects")) {
      if (!o.is_array() || o.size() != 2 || !o[0].is_number_integer() || !o[1].is_string()) {
        throw ValidationError(e.where() + ": objects entries must be [int, string]");
      }
      edge.change.description.objects.emplace_back(o[0].get<int>(), o[1].get<std::string>());
    }
    auto tracks_of = [&](const std::vector<std::string>& ids) {
      std::vector<std::string> out;
      for (const auto& id : ids) {
        const auto* n = g.node(id);
        if (!n) throw ValidationError(e.where() + ": unknown node '" + id + "'");
        out.push_back(n->track_id);
      }
      return out;
    };
    edge.change.pre_track_ids = e.has("pre_tracks") ? e.get<std::vector<std::string>>("pre_tracks") : tracks_of(edge.pre_nodes);
    edge.change.post_track_ids =
        e.has("post_tracks") ? e.get<std::vector<std::string>>("post_tracks") : tracks_of(edge.post_nodes);
    tracks_of(edge.pre_nodes);
    tracks_of(edge.post_nodes);
    edge.change.new_track_id = e.get_or<std::string>("new_track", "");
    edge.contour_tracks = e.get_or<std::vector<std::string>>("contour_tracks", {});
    edge.diagnostic = e.get_or<std::string>("diagnostic", "");
    g.edges.push_back(std::move(edge));
  }
  for (std::size_t i = 1; i < g.edges.size(); ++i) {
    if (g.edges[i].change.t < g.edges[i - 1].change.t) throw ValidationError(where + ": edges not sorted by t");
  }
  return g;
}

inline StateGraph parse_graph(const std::string& text) {
  try {
    return graph_from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("graph.json: invalid JSON: ") + e.what());
  }
}

// Plain-text adjacency listing for terminals.
inline std::string graph_listing(const StateGraph& g) {
  std::ostringstream out;
  auto label = [&](const std::string& id) {
    const auto* n = g.node(id);
    return id + " (" + (n ? n->label : "?") + ")";
  };
  out << "nodes: " << g.nodes.size() << ", edges: " << g.edges.size() << "\n";
  for (const auto& e : g.edges) {
    out << "t=" << e.change.t << " [" << e.change.description.action_verb << "]\n";
    for (const auto& p : e.pre_nodes) out << "  pre  " << label(p) << "\n";
    for (const auto& p : e.post_nodes) out << "  post " << label(p) << "\n";
    if (!e.diagnostic.empty()) out << "  ! " << e.diagnostic << "\n";
  }
  return out.str();
}

}  // namespace statetrack
