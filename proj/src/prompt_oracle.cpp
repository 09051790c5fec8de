#include "evt/prompt_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace evt {

void validate_script(const EventScript& script) {
    if (script.video_duration_sec <= 0.0)
        throw ContractError("script duration must be positive");
    double prev_start = -1.0;
    for (const auto& e : script.events) {
        if (!(e.start_sec < e.end_sec))
            throw ContractError("script event must satisfy start < end");
        if (e.start_sec < 0.0 || e.end_sec > script.video_duration_sec)
            throw ContractError("script event outside [0, duration]");
        if (e.start_sec < prev_start)
            throw ContractError("script events must be sorted by start");
        prev_start = e.start_sec;
    }
}

std::vector<Span> clip_video(double duration_sec, double clip_len, double stride) {
    if (stride <= 0.0) throw ConfigError("clip stride must be positive");
    if (clip_len < stride) throw ConfigError("clip length must be >= stride");
    if (duration_sec <= 0.0) throw ConfigError("video duration must be positive");

    std::vector<Span> clips;
    double start = 0.0;
    while (true) {
        const double end = std::min(start + clip_len, duration_sec);
        clips.push_back({start, end});
        if (start + clip_len >= duration_sec) break;
        start += stride;
    }
    return clips;
}

namespace {

double cosine(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / std::sqrt(na * nb);
}

std::vector<double> normalized(std::vector<double> v) {
    double ss = 0.0;
    for (double x : v) ss += x * x;
    const double inv = 1.0 / std::sqrt(ss);
    for (double& x : v) x *= inv;
    return v;
}

// Builds vocabulary embeddings 0..class_id deterministically; embedding c
// depends only on (seed, 0..c), never on the vocabulary bound.
std::vector<double> build_class_embedding(int class_id, int d_p, std::uint64_t seed) {
    std::vector<std::vector<double>> accepted;
    accepted.reserve(static_cast<std::size_t>(class_id) + 1);
    for (int c = 0; c <= class_id; ++c) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            Rng rng(seed ^ (0xC1A55E5ULL + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(c)) ^
                    (attempt * 0xD1B54A32D192ED03ULL));
            std::vector<double> candidate(static_cast<std::size_t>(d_p));
            for (double& x : candidate) x = rng.normal();
            candidate = normalized(std::move(candidate));
            bool ok = true;
            for (const auto& prev : accepted) {
                if (cosine(candidate, prev) >= 0.5) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                accepted.push_back(std::move(candidate));
                break;
            }
            if (attempt > 10000)
                throw GenerationError("embedding rejection sampling failed; d_p too small for vocabulary");
        }
    }
    return accepted.back();
}

}  // namespace

Tensor embed_event(int class_id, std::optional<Span>, int d_p, std::uint64_t seed,
                   int max_class_id) {
    if (d_p < 1) throw ConfigError("d_p must be >= 1");
    if (class_id < 0 || class_id > max_class_id)
        throw VocabularyError("class id " + std::to_string(class_id) +
                              " outside vocabulary [0, " + std::to_string(max_class_id) + "]");
    return Tensor::from_data({d_p}, build_class_embedding(class_id, d_p, seed));
}

void validate_graph(const EventGraph& graph) {
    if (graph.nodes.empty()) throw ContractError("event graph must contain the global node");

    std::unordered_set<int> ids;
    int global_count = 0;
    for (const auto& n : graph.nodes) {
        if (!ids.insert(n.node_id).second)
            throw ContractError("duplicate node id in event graph");
        if (n.node_id == graph.global_node_id) ++global_count;
    }
    if (global_count != 1) throw ContractError("event graph must contain exactly one global node");

    auto find_node = [&](int id) -> const GraphNode& {
        for (const auto& n : graph.nodes)
            if (n.node_id == id) return n;
        throw ContractError("edge references unknown node id " + std::to_string(id));
    };

    std::unordered_set<int> has_part_of;
    for (const auto& e : graph.edges) {
        const GraphNode& src = find_node(e.src);
        const GraphNode& dst = find_node(e.dst);
        if (e.relation == Relation::Before) {
            if (!(src.anchor.end_sec <= dst.anchor.start_sec))
                throw ContractError("BEFORE edge requires src.end <= dst.start");
        } else {
            if (e.dst != graph.global_node_id)
                throw ContractError("PART_OF edges must point at the global node");
            has_part_of.insert(e.src);
        }
    }
    for (const auto& n : graph.nodes) {
        if (n.node_id == graph.global_node_id) continue;
        if (!has_part_of.count(n.node_id))
            throw ContractError("sub-event node " + std::to_string(n.node_id) +
                                " lacks a PART_OF edge to the global node");
    }

    // Cycle check over the directed edges (Kahn).
    std::vector<int> indeg(graph.nodes.size(), 0);
    auto index_of = [&](int id) {
        for (std::size_t i = 0; i < graph.nodes.size(); ++i)
            if (graph.nodes[i].node_id == id) return i;
        throw ContractError("edge references unknown node id " + std::to_string(id));
    };
    std::vector<std::vector<std::size_t>> adj(graph.nodes.size());
    for (const auto& e : graph.edges) {
        const std::size_t s = index_of(e.src), d = index_of(e.dst);
        adj[s].push_back(d);
        ++indeg[d];
    }
    std::vector<std::size_t> queue;
    for (std::size_t i = 0; i < indeg.size(); ++i)
        if (indeg[i] == 0) queue.push_back(i);
    std::size_t visited = 0;
    while (!queue.empty()) {
        const std::size_t u = queue.back();
        queue.pop_back();
        ++visited;
        for (std::size_t v : adj[u])
            if (--indeg[v] == 0) queue.push_back(v);
    }
    if (visited != graph.nodes.size()) throw ContractError("event graph contains a cycle");
}

PromptBundle build_bundle(const EventScript& script, const ClipPolicy& policy, int d_p,
                          std::uint64_t seed, int max_class_id) {
    validate_script(script);

    PromptBundle bundle;
    bundle.p_global = embed_event(script.global_label, std::nullopt, d_p, seed, max_class_id);

    const auto clips = clip_video(script.video_duration_sec, policy.clip_len, policy.stride);
    for (const Span& clip : clips) {
        std::vector<std::pair<double, int>> overlapping;  // (overlap seconds, class)
        for (const auto& e : script.events) {
            const double w = overlap_length(clip, Span{e.start_sec, e.end_sec});
            if (w > 0.0) overlapping.emplace_back(w, e.class_id);
        }
        Tensor clip_emb;
        if (overlapping.empty()) {
            clip_emb = embed_event(kBackgroundClass, std::nullopt, d_p, seed, max_class_id);
        } else if (overlapping.size() == 1) {
            // The normalized weighted mean of one unit vector is that vector;
            // returning it verbatim keeps equal-content clips bit-identical.
            clip_emb = embed_event(overlapping[0].second, std::nullopt, d_p, seed, max_class_id);
        } else {
            std::vector<double> acc(static_cast<std::size_t>(d_p), 0.0);
            for (const auto& [w, cls] : overlapping) {
                const Tensor emb = embed_event(cls, std::nullopt, d_p, seed, max_class_id);
                for (int j = 0; j < d_p; ++j) acc[j] += w * emb.at(j);
            }
            double ss = 0.0;
            for (double v : acc) ss += v * v;
            const double inv = 1.0 / std::sqrt(ss);
            for (double& v : acc) v *= inv;
            clip_emb = Tensor::from_data({d_p}, acc);
        }
        bundle.subs.push_back({clip_emb, clip});
    }

    // Event graph: node 0 is the global node anchored to the whole video.
    EventGraph& graph = bundle.graph;
    graph.global_node_id = 0;
    graph.nodes.push_back({0, script.global_label, Span{0.0, script.video_duration_sec},
                           bundle.p_global});
    int next_id = 1;
    for (const auto& e : script.events) {
        graph.nodes.push_back({next_id, e.class_id, Span{e.start_sec, e.end_sec},
                               embed_event(e.class_id, std::nullopt, d_p, seed, max_class_id)});
        graph.edges.push_back({next_id, 0, Relation::PartOf});
        ++next_id;
    }
    for (std::size_t i = 1; i < script.events.size(); ++i) {
        const auto& a = script.events[i - 1];
        const auto& b = script.events[i];
        if (a.end_sec <= b.start_sec)
            graph.edges.push_back({static_cast<int>(i), static_cast<int>(i) + 1, Relation::Before});
    }
    validate_graph(graph);
    return bundle;
}

// ---- serialization ---------------------------------------------------------

nlohmann::json script_to_json(const EventScript& script) {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : script.events)
        events.push_back({{"class_id", e.class_id}, {"start", e.start_sec}, {"end", e.end_sec}});
    return {{"video_id", script.video_id},
            {"duration_sec", script.video_duration_sec},
            {"global_label", script.global_label},
            {"events", events}};
}

EventScript script_from_json(const nlohmann::json& j) {
    EventScript script;
    script.video_id = j.at("video_id").get<std::string>();
    script.video_duration_sec = j.at("duration_sec").get<double>();
    script.global_label = j.at("global_label").get<int>();
    for (const auto& e : j.at("events"))
        script.events.push_back({e.at("class_id").get<int>(), e.at("start").get<double>(),
                                 e.at("end").get<double>()});
    validate_script(script);
    return script;
}

namespace {

nlohmann::json tensor_values(const Tensor& t) {
    nlohmann::json arr = nlohmann::json::array();
    for (double v : t.data()) arr.push_back(v);
    return arr;
}

Tensor vector_from_json(const nlohmann::json& arr) {
    std::vector<double> data;
    for (const auto& v : arr) data.push_back(v.get<double>());
    const int n = static_cast<int>(data.size());
    return Tensor::from_data({n}, std::move(data));
}

std::string relation_name(Relation r) { return r == Relation::Before ? "BEFORE" : "PART_OF"; }

Relation relation_from_name(const std::string& name) {
    if (name == "BEFORE") return Relation::Before;
    if (name == "PART_OF") return Relation::PartOf;
    throw IoError("unknown graph relation: " + name);
}

}  // namespace

nlohmann::json bundle_to_json(const PromptBundle& bundle) {
    nlohmann::json subs = nlohmann::json::array();
    for (const auto& s : bundle.subs)
        subs.push_back({{"embedding", tensor_values(s.embedding)},
                        {"clip_span", {s.clip_span.start_sec, s.clip_span.end_sec}}});
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : bundle.graph.nodes)
        nodes.push_back({{"node_id", n.node_id},
                         {"class_id", n.class_id},
                         {"anchor", {n.anchor.start_sec, n.anchor.end_sec}},
                         {"embedding", tensor_values(n.embedding)}});
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : bundle.graph.edges)
        edges.push_back({{"src", e.src}, {"dst", e.dst}, {"relation", relation_name(e.relation)}});
    return {{"p_global", tensor_values(bundle.p_global)},
            {"subs", subs},
            {"graph",
             {{"nodes", nodes}, {"edges", edges}, {"global_node_id", bundle.graph.global_node_id}}}};
}

PromptBundle bundle_from_json(const nlohmann::json& j) {
    PromptBundle bundle;
    bundle.p_global = vector_from_json(j.at("p_global"));
    for (const auto& s : j.at("subs")) {
        const auto& span = s.at("clip_span");
        bundle.subs.push_back({vector_from_json(s.at("embedding")),
                               Span{span.at(0).get<double>(), span.at(1).get<double>()}});
    }
    const auto& graph = j.at("graph");
    bundle.graph.global_node_id = graph.at("global_node_id").get<int>();
    for (const auto& n : graph.at("nodes")) {
        const auto& anchor = n.at("anchor");
        bundle.graph.nodes.push_back({n.at("node_id").get<int>(), n.at("class_id").get<int>(),
                                      Span{anchor.at(0).get<double>(), anchor.at(1).get<double>()},
                                      vector_from_json(n.at("embedding"))});
    }
    for (const auto& e : graph.at("edges"))
        bundle.graph.edges.push_back({e.at("src").get<int>(), e.at("dst").get<int>(),
                                      relation_from_name(e.at("relation").get<std::string>())});
    validate_graph(bundle.graph);
    return bundle;
}

}  // namespace evt
