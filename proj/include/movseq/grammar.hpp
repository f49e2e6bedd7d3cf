#pragma once

#include "movseq/triggers.hpp"

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace movseq {

struct NodeSpec {
    std::string id;
    std::string label;
    bool is_start = false;
    bool is_finish = false;

    bool operator==(const NodeSpec&) const = default;
};

// Directed edge "from must happen before to", optionally bounded in duration.
struct EdgeSpec {
    std::string from;
    std::string to;
    std::optional<std::int64_t> min_ms;
    std::optional<std::int64_t> max_ms;

    bool admits(std::int64_t elapsed_ms) const
    {
        return (!min_ms || elapsed_ms >= *min_ms) && (!max_ms || elapsed_ms <= *max_ms);
    }

    auto operator<=>(const EdgeSpec&) const = default;
};

// Validated movement grammar: nodes, temporal edges and one trigger per node.
class MovementGraph {
public:
    // Throws Error on: empty or duplicate node id, dangling edge endpoint, no
    // start node, no finish node, negative or inverted duration bounds, two
    // edges between the same nodes with different bounds, a non-finish node
    // without outgoing edges, a node without a trigger binding, or a binding
    // for an unknown node. Identical duplicate edges are merged.
    MovementGraph(std::vector<NodeSpec> nodes, std::vector<EdgeSpec> edges,
                  std::map<std::string, TriggerSpec> bindings);

    const std::vector<NodeSpec>& nodes() const { return nodes_; }
    const std::vector<EdgeSpec>& edges() const { return edges_; }
    const std::map<std::string, TriggerSpec>& bindings() const { return bindings_; }

    const NodeSpec* find_node(std::string_view id) const;

    // Bindings in node declaration order.
    std::vector<TriggerBinding> trigger_bindings() const;

private:
    std::vector<NodeSpec> nodes_;
    std::vector<EdgeSpec> edges_;
    std::map<std::string, TriggerSpec> bindings_;
};

// Grammar configuration file (JSON):
//   { "nodes": [{ "id", "label"?, "start"?, "finish"?, "trigger" }],
//     "edges": [{ "from", "to", "min_ms"?, "max_ms"? }] }
// with trigger one of
//   { "type": "edge", "channel", "threshold", "direction": rising|falling|change }
//   { "type": "peak", "channel", "min_prominence", "min_separation_ms", "polarity": maxima|minima }
//   { "type": "gate", "lat1", "lon1", "lat2", "lon2", "direction": any|left_to_right|right_to_left,
//     "channel"? }
// Unknown keys are rejected.
MovementGraph parse_grammar(const std::filesystem::path& path);
MovementGraph parse_grammar_text(std::string_view json_text);

// Reads only the trigger bindings of a grammar file, without requiring the
// graph itself to be complete. Node and trigger entries are still validated.
std::vector<TriggerBinding> parse_bindings(const std::filesystem::path& path);
std::vector<TriggerBinding> parse_bindings_text(std::string_view json_text);

std::string grammar_to_json(const MovementGraph& graph);

// Deterministic automaton over node ids, generalized to several start states.
// Inputs without an explicit transition leave the state unchanged.
class Automaton {
public:
    static constexpr int kNone = -1;

    // States sorted by id, so equal graphs compile to equal automata.
    const std::vector<std::string>& states() const { return states_; }
    const std::vector<std::string>& alphabet() const { return states_; }
    const std::vector<int>& start_states() const { return start_; }
    const std::vector<int>& accepting_states() const { return accepting_; }

    int index_of(std::string_view id) const;
    std::size_t size() const { return states_.size(); }
    bool is_start(int state) const { return is_start_[static_cast<std::size_t>(state)]; }
    bool is_accepting(int state) const { return is_accepting_[static_cast<std::size_t>(state)]; }

    // Explicit transition state --symbol--> symbol, or nullptr.
    const EdgeSpec* transition(int state, int symbol) const;

    // Transition function including the no-effect default.
    int step(int state, int symbol) const;

    std::size_t transition_count() const { return edges_.size(); }

    // Symbols with an explicit transition out of the state.
    const std::vector<int>& successors(int state) const { return successors_[static_cast<std::size_t>(state)]; }

    bool operator==(const Automaton&) const = default;

private:
    friend Automaton compile(const MovementGraph& graph);

    std::vector<std::string> states_;
    std::vector<int> start_;
    std::vector<int> accepting_;
    std::vector<bool> is_start_;
    std::vector<bool> is_accepting_;
    std::vector<EdgeSpec> edges_;
    std::vector<int> table_; // size*size, index into edges_ or kNone
    std::vector<std::vector<int>> successors_;
};

Automaton compile(const MovementGraph& graph);

} // namespace movseq
