#pragma once

#include "movseq/grammar.hpp"
#include "movseq/timeseries.hpp"
#include "movseq/triggers.hpp"

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace movseq {

struct PathStep {
    std::string node;
    Timestamp t;

    auto operator<=>(const PathStep&) const = default;
};

// One start-to-finish path through the grammar, matched against POIs.
struct PartialSolution {
    std::vector<PathStep> steps;

    Timestamp start_t() const { return steps.front().t; }
    Timestamp end_t() const { return steps.back().t; }
    std::int64_t duration_ms() const { return end_t() - start_t(); }

    auto operator<=>(const PartialSolution&) const = default;
};

// Canonical order: start time, end time, then steps.
bool earlier(const PartialSolution& a, const PartialSolution& b);

// Temporally non-overlapping partial solutions in canonical order.
struct TotalSolution {
    std::vector<PartialSolution> parts;

    bool empty() const { return parts.empty(); }
    std::int64_t covered_ms() const;
    std::size_t part_count() const { return parts.size(); }
    std::size_t step_count() const;

    bool operator==(const TotalSolution&) const = default;
};

struct RankKey {
    std::int64_t covered_ms = 0;
    std::size_t part_count = 0;

    auto operator<=>(const RankKey&) const = default;
};

RankKey rank_key(const TotalSolution& s);

enum class RankPolicy {
    count,    // most partial solutions
    duration, // most covered time
    combined, // most covered time, then most partial solutions
};

// Strict "a is preferred over b". After the policy's keys, ties go to the
// earlier first start, then to the lexicographically smaller sequence of
// parts (node, then time, step by step). A total order on distinct solutions.
bool ranks_above(const TotalSolution& a, const TotalSolution& b, RankPolicy policy = RankPolicy::combined);

struct SearchOptions {
    std::size_t max_states = 1'000'000;
    RankPolicy policy = RankPolicy::combined;
};

struct SearchStats {
    std::size_t explored_states = 0;
    std::size_t candidates = 0;
};

// Depth-first exploration from every POI of a start node. From state A at
// time t1 every later POI B with an explicit transition A->B whose duration
// bounds admit t2 - t1 is a branch; other POIs have no effect. Every path
// that reaches an accepting state is recorded, whether or not it extends
// further. Results are deduplicated and returned in canonical order.
// Throws SearchLimitExceeded after options.max_states explored states.
std::vector<PartialSolution> find_partial_solutions(const Automaton& automaton,
                                                    std::span<const PointOfInterest> pois,
                                                    const SearchOptions& options = {},
                                                    SearchStats* stats = nullptr);

// Every non-empty, pairwise non-overlapping subset of the (deduplicated) parts.
// Parts may share a boundary timestamp.
std::vector<TotalSolution> combine(std::span<const PartialSolution> parts, const SearchOptions& options = {});

// Best candidate under the policy. Throws Error on empty input.
TotalSolution rank(std::span<const TotalSolution> solutions, RankPolicy policy = RankPolicy::combined);

// Same result as rank(combine(parts)), found by branch and bound over parts
// sorted by start time. Returns an empty solution for no parts.
TotalSolution best_combination(std::span<const PartialSolution> parts, const SearchOptions& options = {},
                               SearchStats* stats = nullptr);

// Standalone check of a partial solution against the automaton. Returns a
// description of the first violation, or nullopt if valid.
std::optional<std::string> check_partial(const Automaton& automaton, const PartialSolution& part);

struct SearchResult {
    std::vector<PartialSolution> partial_solutions;
    TotalSolution optimal;
    SearchStats stats;
};

// POIs -> partial solutions -> optimal combination.
SearchResult search(const Automaton& automaton, std::span<const PointOfInterest> pois,
                    const SearchOptions& options = {});

struct Diagnostics {
    std::map<std::string, std::size_t> poi_counts;
    std::size_t partial_solution_count = 0;
    std::size_t candidate_count = 0;
    std::size_t explored_states = 0;
    double trigger_seconds = 0.0;
    double search_seconds = 0.0;
};

struct RecognitionResult {
    std::vector<PointOfInterest> pois;
    std::vector<PartialSolution> partial_solutions;
    TotalSolution optimal; // empty when nothing was recognized
    Diagnostics diagnostics;
};

RecognitionResult recognize(const Recording& recording, const MovementGraph& graph,
                            const SearchOptions& options = {});

// Deterministic JSON document (timings are left out):
// { "pois": [...], "partial_solutions": [{"steps": [{"node","t_ms"}]}],
//   "optimal": {"parts": [...], "covered_ms", "part_count"}, "diagnostics": {...} }
std::string solution_to_json(const RecognitionResult& result);

} // namespace movseq
