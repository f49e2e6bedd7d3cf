#include "movseq/recognizer.hpp"

#include "movseq/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>
#include <set>

namespace movseq {

bool earlier(const PartialSolution& a, const PartialSolution& b)
{
    if (a.start_t() != b.start_t()) return a.start_t() < b.start_t();
    if (a.end_t() != b.end_t()) return a.end_t() < b.end_t();
    return a.steps < b.steps;
}

std::int64_t TotalSolution::covered_ms() const
{
    std::int64_t sum = 0;
    for (const auto& p : parts) sum += p.duration_ms();
    return sum;
}

std::size_t TotalSolution::step_count() const
{
    std::size_t n = 0;
    for (const auto& p : parts) n += p.steps.size();
    return n;
}

RankKey rank_key(const TotalSolution& s) { return {s.covered_ms(), s.part_count()}; }

bool ranks_above(const TotalSolution& a, const TotalSolution& b, RankPolicy policy)
{
    const RankKey ka = rank_key(a);
    const RankKey kb = rank_key(b);
    switch (policy) {
    case RankPolicy::combined:
        if (ka != kb) return ka > kb;
        break;
    case RankPolicy::duration:
        if (ka.covered_ms != kb.covered_ms) return ka.covered_ms > kb.covered_ms;
        break;
    case RankPolicy::count:
        if (ka.part_count != kb.part_count) return ka.part_count > kb.part_count;
        break;
    }
    // Deterministic tie-breaks: earliest start, then lexicographic steps.
    if (!a.empty() && !b.empty() && a.parts.front().start_t() != b.parts.front().start_t())
        return a.parts.front().start_t() < b.parts.front().start_t();
    return a.parts < b.parts;
}

// --- partial solutions -----------------------------------------------------

namespace {

// Depth-first search over admissible POI sequences. Restarts happen only at
// the top level; inside the recursion a path is only ever extended.
class PartialSearch {
public:
    PartialSearch(const Automaton& automaton, std::span<const PointOfInterest> pois, const SearchOptions& options,
                  SearchStats& stats)
        : automaton_(automaton), pois_(pois), options_(options), stats_(stats)
    {
        symbol_.resize(pois.size());
        by_symbol_.assign(automaton.size(), {});
        for (std::size_t i = 0; i < pois.size(); ++i) {
            symbol_[i] = automaton.index_of(pois[i].node);
            if (symbol_[i] != Automaton::kNone) by_symbol_[static_cast<std::size_t>(symbol_[i])].push_back(i);
        }
    }

    std::vector<PartialSolution> run()
    {
        for (std::size_t i = 0; i < pois_.size(); ++i) {
            const int s = symbol_[i];
            if (s == Automaton::kNone || !automaton_.is_start(s)) continue;
            path_.assign(1, i);
            explore(s);
        }
        std::vector<PartialSolution> out(found_.begin(), found_.end());
        std::sort(out.begin(), out.end(), earlier);
        return out;
    }

private:
    void explore(int state)
    {
        if (++stats_.explored_states > options_.max_states)
            throw SearchLimitExceeded("partial-solution search", options_.max_states);

        // Every admissible path reaching an accepting state is a match, also
        // when it could continue (a finish node with outgoing edges).
        if (automaton_.is_accepting(state)) record();

        const std::size_t at = path_.back();
        const Timestamp t1 = pois_[at].t;

        for (int target : automaton_.successors(state)) {
            const EdgeSpec* edge = automaton_.transition(state, target);
            const auto& candidates = by_symbol_[static_cast<std::size_t>(target)];
            // Later POIs only; same-time POIs later in the stream still qualify.
            auto it = std::upper_bound(candidates.begin(), candidates.end(), at);
            const std::int64_t lo = t1.ms + edge->min_ms.value_or(0);
            it = std::lower_bound(it, candidates.end(), lo,
                                  [&](std::size_t idx, std::int64_t t) { return pois_[idx].t.ms < t; });
            for (; it != candidates.end(); ++it) {
                const std::int64_t elapsed = pois_[*it].t - t1;
                if (edge->max_ms && elapsed > *edge->max_ms) break;
                if (!edge->admits(elapsed)) continue;
                path_.push_back(*it);
                explore(target);
                path_.pop_back();
            }
        }
    }

    void record()
    {
        PartialSolution p;
        p.steps.reserve(path_.size());
        for (std::size_t k : path_) p.steps.push_back({pois_[k].node, pois_[k].t});
        found_.insert(std::move(p));
    }

    const Automaton& automaton_;
    std::span<const PointOfInterest> pois_;
    const SearchOptions& options_;
    SearchStats& stats_;
    std::vector<int> symbol_;
    std::vector<std::vector<std::size_t>> by_symbol_;
    std::vector<std::size_t> path_;
    std::set<PartialSolution> found_;
};

std::vector<PartialSolution> canonical_parts(std::span<const PartialSolution> parts)
{
    std::vector<PartialSolution> sorted(parts.begin(), parts.end());
    for (const auto& p : sorted)
        if (p.steps.empty()) throw Error("partial solution without steps");
    std::sort(sorted.begin(), sorted.end(), earlier);
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    return sorted;
}

} // namespace

std::vector<PartialSolution> find_partial_solutions(const Automaton& automaton, std::span<const PointOfInterest> pois,
                                                    const SearchOptions& options, SearchStats* stats)
{
    for (std::size_t i = 1; i < pois.size(); ++i)
        if (pois[i].t < pois[i - 1].t) throw Error("points of interest must be sorted by time");
    SearchStats local;
    PartialSearch search(automaton, pois, options, stats ? *stats : local);
    return search.run();
}

// --- combination and ranking ----------------------------------------------

std::vector<TotalSolution> combine(std::span<const PartialSolution> input, const SearchOptions& options)
{
    const std::vector<PartialSolution> parts = canonical_parts(input);
    std::vector<TotalSolution> out;
    std::vector<std::size_t> chosen;
    std::size_t explored = 0;

    auto rec = [&](auto&& self, std::size_t from) -> void {
        for (std::size_t j = from; j < parts.size(); ++j) {
            if (!chosen.empty() && parts[chosen.back()].end_t() > parts[j].start_t()) continue;
            if (++explored > options.max_states) throw SearchLimitExceeded("combination", options.max_states);
            chosen.push_back(j);
            TotalSolution s;
            for (std::size_t k : chosen) s.parts.push_back(parts[k]);
            out.push_back(std::move(s));
            self(self, j + 1);
            chosen.pop_back();
        }
    };
    rec(rec, 0);
    return out;
}

TotalSolution rank(std::span<const TotalSolution> solutions, RankPolicy policy)
{
    if (solutions.empty()) throw Error("rank: no candidate solutions");
    const TotalSolution* best = &solutions.front();
    for (const auto& s : solutions)
        if (ranks_above(s, *best, policy)) best = &s;
    return *best;
}

TotalSolution best_combination(std::span<const PartialSolution> input, const SearchOptions& options,
                               SearchStats* stats)
{
    const std::vector<PartialSolution> parts = canonical_parts(input);
    const std::size_t n = parts.size();

    // Upper bounds on what parts[j..] can still add.
    std::vector<std::int64_t> suffix_cover(n + 1, 0);
    for (std::size_t j = n; j-- > 0;) suffix_cover[j] = suffix_cover[j + 1] + parts[j].duration_ms();

    TotalSolution best;
    TotalSolution current;
    std::size_t explored = 0;
    std::size_t candidates = 0;

    auto primary_bound_below = [&](std::size_t j) {
        if (best.empty()) return false;
        const std::int64_t cover_bound = current.covered_ms() + suffix_cover[j];
        const std::size_t count_bound = current.part_count() + (n - j);
        switch (options.policy) {
        case RankPolicy::combined:
        case RankPolicy::duration: return cover_bound < best.covered_ms();
        case RankPolicy::count: return count_bound < best.part_count();
        }
        return false;
    };

    auto rec = [&](auto&& self, std::size_t from) -> void {
        for (std::size_t j = from; j < n; ++j) {
            // Bounds shrink with j, so nothing further right can win either.
            if (primary_bound_below(j)) break;
            if (!current.empty() && current.parts.back().end_t() > parts[j].start_t()) continue;
            if (++explored > options.max_states) throw SearchLimitExceeded("combination", options.max_states);
            current.parts.push_back(parts[j]);
            ++candidates;
            if (best.empty() || ranks_above(current, best, options.policy)) best = current;
            self(self, j + 1);
            current.parts.pop_back();
        }
    };
    rec(rec, 0);

    if (stats) {
        stats->explored_states += explored;
        stats->candidates += candidates;
    }
    return best;
}

std::optional<std::string> check_partial(const Automaton& automaton, const PartialSolution& part)
{
    if (part.steps.empty()) return "no steps";
    std::vector<int> idx;
    for (const auto& s : part.steps) {
        const int i = automaton.index_of(s.node);
        if (i == Automaton::kNone) return "unknown node '" + s.node + "'";
        idx.push_back(i);
    }
    if (!automaton.is_start(idx.front())) return "first node '" + part.steps.front().node + "' is not a start node";
    if (!automaton.is_accepting(idx.back())) return "last node '" + part.steps.back().node + "' is not a finish node";
    for (std::size_t k = 1; k < idx.size(); ++k) {
        const auto& a = part.steps[k - 1];
        const auto& b = part.steps[k];
        if (b.t < a.t) return "timestamps decrease at step " + std::to_string(k);
        const EdgeSpec* e = automaton.transition(idx[k - 1], idx[k]);
        if (!e) return "no edge " + a.node + " -> " + b.node;
        if (!e->admits(b.t - a.t)) return "edge " + a.node + " -> " + b.node + " duration out of bounds";
    }
    return std::nullopt;
}

SearchResult search(const Automaton& automaton, std::span<const PointOfInterest> pois, const SearchOptions& options)
{
    SearchResult r;
    r.partial_solutions = find_partial_solutions(automaton, pois, options, &r.stats);
    SearchOptions remaining = options;
    remaining.max_states = options.max_states > r.stats.explored_states ? options.max_states - r.stats.explored_states : 0;
    r.optimal = best_combination(r.partial_solutions, remaining, &r.stats);
    return r;
}

RecognitionResult recognize(const Recording& recording, const MovementGraph& graph, const SearchOptions& options)
{
    using clock = std::chrono::steady_clock;
    RecognitionResult out;

    const auto t0 = clock::now();
    const auto bindings = graph.trigger_bindings();
    out.pois = run_triggers(recording, bindings);
    const auto t1 = clock::now();

    const Automaton automaton = compile(graph);
    SearchResult r = search(automaton, out.pois, options);
    const auto t2 = clock::now();

    out.partial_solutions = std::move(r.partial_solutions);
    out.optimal = std::move(r.optimal);

    auto& d = out.diagnostics;
    for (const auto& n : graph.nodes()) d.poi_counts[n.id] = 0;
    for (const auto& p : out.pois) ++d.poi_counts[p.node];
    d.partial_solution_count = out.partial_solutions.size();
    d.candidate_count = r.stats.candidates;
    d.explored_states = r.stats.explored_states;
    d.trigger_seconds = std::chrono::duration<double>(t1 - t0).count();
    d.search_seconds = std::chrono::duration<double>(t2 - t1).count();
    return out;
}

namespace {

nlohmann::json steps_json(const PartialSolution& p)
{
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : p.steps) steps.push_back({{"node", s.node}, {"t_ms", s.t.ms}});
    return {{"steps", steps}};
}

} // namespace

std::string solution_to_json(const RecognitionResult& result)
{
    using nlohmann::json;
    json pois = json::array();
    for (const auto& p : result.pois) pois.push_back({{"node", p.node}, {"t_ms", p.t.ms}, {"source", p.source}});
    json partials = json::array();
    for (const auto& p : result.partial_solutions) partials.push_back(steps_json(p));
    json parts = json::array();
    for (const auto& p : result.optimal.parts) parts.push_back(steps_json(p));

    const auto& d = result.diagnostics;
    json counts = json::object();
    for (const auto& [node, n] : d.poi_counts) counts[node] = n;

    json doc = {
        {"pois", pois},
        {"partial_solutions", partials},
        {"optimal",
         {{"parts", parts}, {"covered_ms", result.optimal.covered_ms()}, {"part_count", result.optimal.part_count()}}},
        {"diagnostics",
         {{"poi_counts", counts},
          {"partial_solution_count", d.partial_solution_count},
          {"candidate_count", d.candidate_count},
          {"explored_states", d.explored_states}}},
    };
    return doc.dump(2) + "\n";
}

} // namespace movseq
