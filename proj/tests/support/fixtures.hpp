#pragma once

#include "movseq/grammar.hpp"
#include "movseq/recognizer.hpp"
#include "movseq/timeseries.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

namespace fixtures {

using namespace movseq;

inline Channel scalar_channel(const std::vector<std::pair<std::int64_t, double>>& pts,
                              ChannelKind kind = ChannelKind::generic_scalar, double rate = 10.0)
{
    std::vector<Sample> s;
    for (auto [t, v] : pts) s.push_back({Timestamp{t}, {v, 0.0, 0.0}});
    return Channel(kind, rate, std::move(s));
}

// Values at t = 0, step, 2*step, ...
inline Channel series(const std::vector<double>& values, std::int64_t step = 100,
                      ChannelKind kind = ChannelKind::generic_scalar)
{
    std::vector<std::pair<std::int64_t, double>> pts;
    for (std::size_t i = 0; i < values.size(); ++i) pts.emplace_back(static_cast<std::int64_t>(i) * step, values[i]);
    return scalar_channel(pts, kind, 1000.0 / static_cast<double>(step));
}

inline Channel track(const std::vector<std::pair<std::int64_t, GeoPoint>>& fixes, double rate = 10.0)
{
    std::vector<Sample> s;
    for (auto [t, g] : fixes) s.push_back({Timestamp{t}, {g.lat, g.lon, 0.0}});
    return Channel(ChannelKind::position, rate, std::move(s));
}

inline Recording single(const std::string& name, Channel ch)
{
    std::map<std::string, Channel> m;
    m.emplace(name, std::move(ch));
    return Recording("test", std::move(m));
}

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline std::vector<std::string> lines(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("movseq_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline TriggerSpec dummy_trigger() { return EdgeTriggerSpec{"speed", 1.0, EdgeDirection::rising}; }

inline MovementGraph graph_of(std::vector<NodeSpec> nodes, std::vector<EdgeSpec> edges)
{
    std::map<std::string, TriggerSpec> b;
    for (const auto& n : nodes) b.emplace(n.id, dummy_trigger());
    return MovementGraph(std::move(nodes), std::move(edges), std::move(b));
}

// S -> UE -> UL -> F with optional bound on S -> UE.
inline MovementGraph short_course(std::optional<std::int64_t> s_ue_max = std::nullopt)
{
    return graph_of({{"S", "", true, false}, {"UE", "", false, false}, {"UL", "", false, false}, {"F", "", false, true}},
                    {{"S", "UE", std::nullopt, s_ue_max}, {"UE", "UL", {}, {}}, {"UL", "F", {}, {}}});
}

inline std::vector<PointOfInterest> pois(const std::vector<std::pair<std::string, std::int64_t>>& v)
{
    std::vector<PointOfInterest> out;
    for (const auto& [n, t] : v) out.push_back({n, Timestamp{t}, "test"});
    return out;
}

inline PartialSolution part(const std::vector<std::pair<std::string, std::int64_t>>& steps)
{
    PartialSolution p;
    for (const auto& [n, t] : steps) p.steps.push_back({n, Timestamp{t}});
    return p;
}

// Interval-only part [a, b] for combination tests.
inline PartialSolution span(std::int64_t a, std::int64_t b, const std::string& tag = "X")
{
    return part({{tag, a}, {tag, b}});
}

struct RandomInstance {
    MovementGraph graph;
    std::vector<PointOfInterest> pois;
};

// Up to 6 nodes, up to 12 POIs; bounds and self-loops drawn at random.
inline RandomInstance random_instance(std::mt19937_64& rng, int max_nodes = 6, int max_pois = 12)
{
    auto chance = [&](double p) { return std::bernoulli_distribution(p)(rng); };
    auto uniform = [&](std::int64_t lo, std::int64_t hi) { return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng); };

    const int n = static_cast<int>(uniform(1, max_nodes));
    std::vector<NodeSpec> nodes;
    for (int i = 0; i < n; ++i) nodes.push_back({std::string(1, static_cast<char>('A' + i)), "", chance(0.35), chance(0.35)});
    nodes[static_cast<std::size_t>(uniform(0, n - 1))].is_start = true;
    nodes[static_cast<std::size_t>(uniform(0, n - 1))].is_finish = true;

    std::vector<EdgeSpec> edges;
    auto random_edge = [&](const std::string& a, const std::string& b) {
        EdgeSpec e{a, b, std::nullopt, std::nullopt};
        if (chance(0.3)) e.min_ms = uniform(0, 15) * 1000;
        if (chance(0.5)) e.max_ms = e.min_ms.value_or(0) + uniform(0, 40) * 1000;
        return e;
    };
    for (const auto& a : nodes)
        for (const auto& b : nodes)
            if (chance(0.3)) edges.push_back(random_edge(a.id, b.id));
    for (const auto& a : nodes) {
        if (a.is_finish) continue;
        const bool has_out = std::any_of(edges.begin(), edges.end(), [&](const EdgeSpec& e) { return e.from == a.id; });
        if (!has_out) edges.push_back(random_edge(a.id, nodes[static_cast<std::size_t>(uniform(0, n - 1))].id));
    }

    std::vector<PointOfInterest> ps;
    const int count = static_cast<int>(uniform(0, max_pois));
    std::int64_t t = uniform(0, 5) * 1000;
    for (int i = 0; i < count; ++i) {
        t += chance(0.15) ? 0 : uniform(1, 20) * 1000;
        ps.push_back({nodes[static_cast<std::size_t>(uniform(0, n - 1))].id, Timestamp{t}, "random"});
    }
    return {graph_of(std::move(nodes), std::move(edges)), std::move(ps)};
}

} // namespace fixtures
