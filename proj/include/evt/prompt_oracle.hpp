#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evt/intervals.hpp"
#include "evt/tensor.hpp"

namespace evt {

// Reserved class id for action-free segments.
inline constexpr int kBackgroundClass = 0;

struct ScriptEvent {
    int class_id = 0;
    double start_sec = 0.0;
    double end_sec = 0.0;
};

// Ground-truth event description for one video; the structured input the
// embedding oracle consumes instead of free-form text.
struct EventScript {
    std::string video_id;
    int global_label = 0;
    std::vector<ScriptEvent> events;  // sorted by start
    double video_duration_sec = 0.0;
};

void validate_script(const EventScript& script);

enum class Relation { Before, PartOf };

struct GraphNode {
    int node_id = 0;
    int class_id = 0;
    Span anchor;
    Tensor embedding;
};

struct GraphEdge {
    int src = 0;
    int dst = 0;
    Relation relation = Relation::Before;
};

// Directed acyclic event graph: one node per scripted event plus a single
// global node; BEFORE edges order disjoint events, PART_OF edges attach every
// sub-event to the global node.
struct EventGraph {
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;
    int global_node_id = 0;
};

void validate_graph(const EventGraph& graph);

struct SubPrompt {
    Tensor embedding;  // unit L2 norm, width d_p
    Span clip_span;
};

struct PromptBundle {
    Tensor p_global;  // unit L2 norm, width d_p
    std::vector<SubPrompt> subs;
    EventGraph graph;
};

struct ClipPolicy {
    double clip_len = 4.0;
    double stride = 2.0;
};

// Tiles [0, duration) into clips starting at 0, stride, 2*stride, ...; the
// final clip is clamped to the duration. M = ceil((duration-clip_len)/stride)+1,
// minimum 1.
std::vector<Span> clip_video(double duration_sec, double clip_len, double stride);

// Unit-norm embedding for a class id, a pure function of (class_id, seed).
// Construction rejects candidates whose cosine similarity against any
// lower-id class embedding reaches 0.5, so distinct classes stay separated.
// The clip context is accepted for interface compatibility and ignored.
Tensor embed_event(int class_id, std::optional<Span> context, int d_p, std::uint64_t seed,
                   int max_class_id);

// Derives the full bundle from a script: global embedding, per-clip sub-event
// embeddings (overlap-weighted mean of overlapping event embeddings,
// BACKGROUND for action-free clips) and the event graph.
PromptBundle build_bundle(const EventScript& script, const ClipPolicy& policy, int d_p,
                          std::uint64_t seed, int max_class_id);

nlohmann::json script_to_json(const EventScript& script);
EventScript script_from_json(const nlohmann::json& j);

nlohmann::json bundle_to_json(const PromptBundle& bundle);
PromptBundle bundle_from_json(const nlohmann::json& j);

}  // namespace evt
