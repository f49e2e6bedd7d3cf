#include "movseq/grammar.hpp"

#include "movseq/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace movseq {

using nlohmann::json;

MovementGraph::MovementGraph(std::vector<NodeSpec> nodes, std::vector<EdgeSpec> edges,
                             std::map<std::string, TriggerSpec> bindings)
    : nodes_(std::move(nodes)), bindings_(std::move(bindings))
{
    std::set<std::string> ids;
    bool any_start = false;
    bool any_finish = false;
    for (const auto& n : nodes_) {
        if (n.id.empty()) throw Error("node with empty id");
        if (!ids.insert(n.id).second) throw Error("duplicate node id '" + n.id + "'");
        any_start |= n.is_start;
        any_finish |= n.is_finish;
    }
    if (!any_start) throw Error("grammar has no start node");
    if (!any_finish) throw Error("grammar has no finish node");

    std::map<std::pair<std::string, std::string>, EdgeSpec> unique;
    for (auto& e : edges) {
        for (const auto* end : {&e.from, &e.to})
            if (!ids.count(*end))
                throw Error("edge " + e.from + " -> " + e.to + " references undefined node '" + *end + "'");
        if ((e.min_ms && *e.min_ms < 0) || (e.max_ms && *e.max_ms < 0))
            throw Error("edge " + e.from + " -> " + e.to + " has a negative duration bound");
        if (e.min_ms && e.max_ms && *e.min_ms > *e.max_ms)
            throw Error("edge " + e.from + " -> " + e.to + " has min_ms > max_ms");
        auto [it, inserted] = unique.try_emplace({e.from, e.to}, e);
        if (!inserted && it->second != e)
            throw Error("edges " + e.from + " -> " + e.to + " repeat with different duration bounds");
    }
    for (auto& [key, e] : unique) edges_.push_back(std::move(e));

    for (const auto& n : nodes_) {
        if (n.is_finish) continue;
        bool has_out = std::any_of(edges_.begin(), edges_.end(), [&](const EdgeSpec& e) { return e.from == n.id; });
        if (!has_out) throw Error("node '" + n.id + "' is not a finish node and has no outgoing edge");
    }

    for (const auto& n : nodes_)
        if (!bindings_.count(n.id)) throw Error("node '" + n.id + "' has no trigger");
    for (const auto& [id, spec] : bindings_) {
        if (!ids.count(id)) throw Error("trigger bound to undefined node '" + id + "'");
        try {
            validate(spec);
        } catch (const Error& e) {
            throw Error("node '" + id + "': " + e.what());
        }
    }
}

const NodeSpec* MovementGraph::find_node(std::string_view id) const
{
    auto it = std::find_if(nodes_.begin(), nodes_.end(), [&](const NodeSpec& n) { return n.id == id; });
    return it == nodes_.end() ? nullptr : &*it;
}

std::vector<TriggerBinding> MovementGraph::trigger_bindings() const
{
    std::vector<TriggerBinding> out;
    for (const auto& n : nodes_) out.push_back({n.id, bindings_.at(n.id)});
    return out;
}

// --- JSON configuration ----------------------------------------------------

namespace {

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where)
{
    if (!obj.is_object()) throw Error(where + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw Error(where + ": unknown key '" + key + "'");
    }
}

const json& require(const json& obj, const char* key, const std::string& where)
{
    auto it = obj.find(key);
    if (it == obj.end()) throw Error(where + ": missing key '" + key + "'");
    return *it;
}

std::string get_string(const json& obj, const char* key, const std::string& where)
{
    const json& v = require(obj, key, where);
    if (!v.is_string()) throw Error(where + ": '" + key + "' must be a string");
    return v.get<std::string>();
}

double get_number(const json& obj, const char* key, const std::string& where)
{
    const json& v = require(obj, key, where);
    if (!v.is_number()) throw Error(where + ": '" + key + "' must be a number");
    return v.get<double>();
}

std::int64_t get_integer(const json& v, const char* key, const std::string& where)
{
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
        double d = v.get<double>();
        if (d == static_cast<double>(static_cast<std::int64_t>(d))) return static_cast<std::int64_t>(d);
    }
    throw Error(where + ": '" + key + "' must be an integer");
}

bool get_bool(const json& obj, const char* key, const std::string& where)
{
    auto it = obj.find(key);
    if (it == obj.end()) return false;
    if (!it->is_boolean()) throw Error(where + ": '" + key + "' must be a boolean");
    return it->get<bool>();
}

template <typename Enum>
Enum parse_enum(const std::string& text, std::initializer_list<std::pair<std::string_view, Enum>> values,
                const std::string& where)
{
    for (const auto& [name, value] : values)
        if (text == name) return value;
    throw Error(where + ": invalid value '" + text + "'");
}

TriggerSpec parse_trigger(const json& t, const std::string& where)
{
    if (!t.is_object()) throw Error(where + ": trigger must be an object");
    const std::string type = get_string(t, "type", where);
    if (type == "edge") {
        check_keys(t, {"type", "channel", "threshold", "direction"}, where);
        EdgeTriggerSpec s;
        s.channel = get_string(t, "channel", where);
        s.threshold = get_number(t, "threshold", where);
        s.direction = parse_enum<EdgeDirection>(
            get_string(t, "direction", where),
            {{"rising", EdgeDirection::rising}, {"falling", EdgeDirection::falling}, {"change", EdgeDirection::change}},
            where);
        return s;
    }
    if (type == "peak") {
        check_keys(t, {"type", "channel", "min_prominence", "min_separation_ms", "polarity"}, where);
        PeakTriggerSpec s;
        s.channel = get_string(t, "channel", where);
        s.min_prominence = get_number(t, "min_prominence", where);
        s.min_separation_ms = get_integer(require(t, "min_separation_ms", where), "min_separation_ms", where);
        s.polarity = parse_enum<PeakPolarity>(get_string(t, "polarity", where),
                                              {{"maxima", PeakPolarity::maxima}, {"minima", PeakPolarity::minima}},
                                              where);
        return s;
    }
    if (type == "gate") {
        check_keys(t, {"type", "lat1", "lon1", "lat2", "lon2", "direction", "channel"}, where);
        GateTriggerSpec s;
        if (t.contains("channel")) s.channel = get_string(t, "channel", where);
        s.p1 = {get_number(t, "lat1", where), get_number(t, "lon1", where)};
        s.p2 = {get_number(t, "lat2", where), get_number(t, "lon2", where)};
        s.direction = parse_enum<GateDirection>(get_string(t, "direction", where),
                                                {{"any", GateDirection::any},
                                                 {"left_to_right", GateDirection::left_to_right},
                                                 {"right_to_left", GateDirection::right_to_left}},
                                                where);
        return s;
    }
    throw Error(where + ": unknown trigger type '" + type + "'");
}

json parse_document(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(std::string("grammar is not valid JSON: ") + e.what());
    }
    check_keys(doc, {"nodes", "edges"}, "grammar");
    return doc;
}

struct ParsedNodes {
    std::vector<NodeSpec> nodes;
    std::map<std::string, TriggerSpec> bindings;
    std::vector<TriggerBinding> ordered;
};

ParsedNodes parse_nodes(const json& doc)
{
    const json& nodes = require(doc, "nodes", "grammar");
    if (!nodes.is_array()) throw Error("grammar: 'nodes' must be an array");
    ParsedNodes out;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const json& n = nodes[i];
        std::string where = "nodes[" + std::to_string(i) + "]";
        check_keys(n, {"id", "label", "start", "finish", "trigger"}, where);
        NodeSpec spec;
        spec.id = get_string(n, "id", where);
        where += " '" + spec.id + "'";
        spec.label = n.contains("label") ? get_string(n, "label", where) : spec.id;
        spec.is_start = get_bool(n, "start", where);
        spec.is_finish = get_bool(n, "finish", where);
        if (!n.contains("trigger")) throw Error(where + ": node has no trigger");
        TriggerSpec trig = parse_trigger(n.at("trigger"), where + ".trigger");
        try {
            validate(trig);
        } catch (const Error& e) {
            throw Error(where + ".trigger: " + e.what());
        }
        if (out.bindings.count(spec.id)) throw Error("duplicate node id '" + spec.id + "'");
        out.bindings.emplace(spec.id, trig);
        out.ordered.push_back({spec.id, trig});
        out.nodes.push_back(std::move(spec));
    }
    return out;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open grammar '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json trigger_to_json(const TriggerSpec& spec)
{
    return std::visit(
        [](const auto& s) -> json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, EdgeTriggerSpec>) {
                return {{"type", "edge"},
                        {"channel", s.channel},
                        {"threshold", s.threshold},
                        {"direction", std::string(to_string(s.direction))}};
            } else if constexpr (std::is_same_v<T, PeakTriggerSpec>) {
                return {{"type", "peak"},
                        {"channel", s.channel},
                        {"min_prominence", s.min_prominence},
                        {"min_separation_ms", s.min_separation_ms},
                        {"polarity", std::string(to_string(s.polarity))}};
            } else {
                json j = {{"type", "gate"},      {"lat1", s.p1.lat}, {"lon1", s.p1.lon}, {"lat2", s.p2.lat},
                          {"lon2", s.p2.lon},    {"direction", std::string(to_string(s.direction))}};
                if (s.channel != "position") j["channel"] = s.channel;
                return j;
            }
        },
        spec);
}

} // namespace

MovementGraph parse_grammar_text(std::string_view json_text)
{
    json doc = parse_document(json_text);
    ParsedNodes parsed = parse_nodes(doc);

    const json& edges = require(doc, "edges", "grammar");
    if (!edges.is_array()) throw Error("grammar: 'edges' must be an array");
    std::vector<EdgeSpec> edge_specs;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const json& e = edges[i];
        const std::string where = "edges[" + std::to_string(i) + "]";
        check_keys(e, {"from", "to", "min_ms", "max_ms"}, where);
        EdgeSpec spec;
        spec.from = get_string(e, "from", where);
        spec.to = get_string(e, "to", where);
        if (e.contains("min_ms") && !e.at("min_ms").is_null()) spec.min_ms = get_integer(e.at("min_ms"), "min_ms", where);
        if (e.contains("max_ms") && !e.at("max_ms").is_null()) spec.max_ms = get_integer(e.at("max_ms"), "max_ms", where);
        edge_specs.push_back(std::move(spec));
    }
    return MovementGraph(std::move(parsed.nodes), std::move(edge_specs), std::move(parsed.bindings));
}

MovementGraph parse_grammar(const std::filesystem::path& path)
{
    try {
        return parse_grammar_text(read_file(path));
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

std::vector<TriggerBinding> parse_bindings_text(std::string_view json_text)
{
    json doc = parse_document(json_text);
    if (!doc.contains("nodes")) return {};
    return parse_nodes(doc).ordered;
}

std::vector<TriggerBinding> parse_bindings(const std::filesystem::path& path)
{
    try {
        return parse_bindings_text(read_file(path));
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

std::string grammar_to_json(const MovementGraph& graph)
{
    json nodes = json::array();
    for (const auto& n : graph.nodes()) {
        nodes.push_back({{"id", n.id},
                         {"label", n.label},
                         {"start", n.is_start},
                         {"finish", n.is_finish},
                         {"trigger", trigger_to_json(graph.bindings().at(n.id))}});
    }
    json edges = json::array();
    for (const auto& e : graph.edges()) {
        json j = {{"from", e.from}, {"to", e.to}};
        if (e.min_ms) j["min_ms"] = *e.min_ms;
        if (e.max_ms) j["max_ms"] = *e.max_ms;
        edges.push_back(std::move(j));
    }
    return json{{"nodes", nodes}, {"edges", edges}}.dump(2) + "\n";
}

// --- automaton -------------------------------------------------------------

int Automaton::index_of(std::string_view id) const
{
    auto it = std::lower_bound(states_.begin(), states_.end(), id);
    return it != states_.end() && *it == id ? static_cast<int>(it - states_.begin()) : kNone;
}

const EdgeSpec* Automaton::transition(int state, int symbol) const
{
    if (state < 0 || symbol < 0) return nullptr;
    const int e = table_[static_cast<std::size_t>(state) * states_.size() + static_cast<std::size_t>(symbol)];
    return e == kNone ? nullptr : &edges_[static_cast<std::size_t>(e)];
}

int Automaton::step(int state, int symbol) const { return transition(state, symbol) ? symbol : state; }

Automaton compile(const MovementGraph& graph)
{
    Automaton a;
    for (const auto& n : graph.nodes()) a.states_.push_back(n.id);
    std::sort(a.states_.begin(), a.states_.end());
    const std::size_t n = a.states_.size();

    a.is_start_.assign(n, false);
    a.is_accepting_.assign(n, false);
    for (const auto& node : graph.nodes()) {
        const auto i = static_cast<std::size_t>(a.index_of(node.id));
        a.is_start_[i] = node.is_start;
        a.is_accepting_[i] = node.is_finish;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (a.is_start_[i]) a.start_.push_back(static_cast<int>(i));
        if (a.is_accepting_[i]) a.accepting_.push_back(static_cast<int>(i));
    }

    // Graph edges are already unique and sorted by (from, to).
    a.edges_ = graph.edges();
    a.table_.assign(n * n, Automaton::kNone);
    a.successors_.assign(n, {});
    for (std::size_t k = 0; k < a.edges_.size(); ++k) {
        const auto from = static_cast<std::size_t>(a.index_of(a.edges_[k].from));
        const int to = a.index_of(a.edges_[k].to);
        a.table_[from * n + static_cast<std::size_t>(to)] = static_cast<int>(k);
        a.successors_[from].push_back(to);
    }
    return a;
}

} // namespace movseq
