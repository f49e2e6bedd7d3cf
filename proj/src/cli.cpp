#include "movseq/cli.hpp"

#include "movseq/errors.hpp"
#include "movseq/grammar.hpp"
#include "movseq/metrics.hpp"
#include "movseq/recognizer.hpp"
#include "movseq/synthdata.hpp"
#include "movseq/timeseries.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <unistd.h>

namespace movseq {

namespace {

namespace fs = std::filesystem;

// Write to a sibling temp file, then rename over the target.
void write_atomically(const fs::path& target, const std::function<void(std::ostream&)>& body)
{
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        body(out);
        out.flush();
        if (!out) throw Error("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error("cannot move output into place at '" + target.string() + "': " + ec.message());
    }
}

void write_text(const fs::path& target, const std::string& text)
{
    write_atomically(target, [&](std::ostream& o) { o << text; });
}

void require_file(const std::string& what, const fs::path& p)
{
    if (!fs::is_regular_file(p)) throw Error(what + " '" + p.string() + "' does not exist or is not a file");
}

struct Options {
    std::string plan;
    std::string recording;
    std::string grammar;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::size_t max_states = SearchOptions{}.max_states;
    std::string lap_node = MetricsOptions{}.lap_node;
    bool verbose = false;
};

TrackPlan plan_from(const Options& o)
{
    TrackPlan plan = o.plan.empty() ? TrackPlan{} : load_plan(o.plan);
    if (o.seed) plan.noise_seed = *o.seed;
    validate(plan);
    return plan;
}

int cmd_synth(const Options& o, std::ostream& out)
{
    const TrackPlan plan = plan_from(o);
    auto [recording, truth] = generate(plan);
    if (plan.warmup_crossings > 0) {
        const WarmupPlan w{plan.warmup_crossings};
        recording = inject_noise_events(recording, plan, w);
        for (auto& e : warmup_events(plan, w)) truth.pois.push_back(e);
        std::stable_sort(truth.pois.begin(), truth.pois.end(), [](const PlannedEvent& a, const PlannedEvent& b) {
            return a.t != b.t ? a.t < b.t : a.node < b.node;
        });
    }
    const fs::path dir = o.out;
    write_atomically(dir / "recording.csv", [&](std::ostream& s) { write_recording_csv(s, recording); });
    write_text(dir / "ground_truth.json", ground_truth_to_json(truth));
    out << "wrote " << recording.sample_count() << " samples (" << truth.pois.size() << " planned POIs) to "
        << dir.string() << "\n";
    return kExitOk;
}

int cmd_grammar(const Options& o, std::ostream& out)
{
    const TrackPlan plan = plan_from(o);
    const fs::path target = fs::path(o.out) / "grammar.json";
    write_text(target, grammar_to_json(biathlon_grammar(plan)));
    out << "wrote " << target.string() << "\n";
    return kExitOk;
}

std::string pois_json(const std::vector<PointOfInterest>& pois)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : pois) arr.push_back({{"node", p.node}, {"t_ms", p.t.ms}, {"source", p.source}});
    return nlohmann::json{{"pois", arr}}.dump(2) + "\n";
}

void write_poi_csv(std::ostream& s, const std::vector<PointOfInterest>& pois)
{
    s << "t_ms,t_s,node,source\n";
    for (const auto& p : pois)
        s << p.t.ms << ',' << p.t.ms / 1000 << '.' << std::setw(3) << std::setfill('0') << p.t.ms % 1000
          << std::setfill(' ') << ',' << p.node << ',' << p.source << '\n';
}

int cmd_detect(const Options& o, std::ostream& out)
{
    require_file("recording", o.recording);
    require_file("grammar", o.grammar);
    const auto bindings = parse_bindings(o.grammar);
    const Recording rec = load_recording(o.recording);
    const auto pois = run_triggers(rec, bindings);

    const fs::path dir = o.out;
    write_text(dir / "pois.json", pois_json(pois));
    write_atomically(dir / "poi.csv", [&](std::ostream& s) { write_poi_csv(s, pois); });
    out << pois.size() << " POIs from " << bindings.size() << " trigger(s)\n";
    return kExitOk;
}

int cmd_recognize(const Options& o, std::ostream& out)
{
    require_file("recording", o.recording);
    require_file("grammar", o.grammar);
    const MovementGraph graph = parse_grammar(o.grammar);
    if (!graph.find_node(o.lap_node)) throw Error("lap node '" + o.lap_node + "' is not a node of the grammar");

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const Recording rec = load_recording(o.recording);
    const double load_s = std::chrono::duration<double>(clock::now() - t0).count();

    SearchOptions so;
    so.max_states = o.max_states;
    const RecognitionResult result = recognize(rec, graph, so);

    MetricsOptions mo;
    mo.lap_node = o.lap_node;
    const auto segments = segment_metrics(result.optimal, rec, mo);
    const auto ranges = range_report(result.optimal, rec, mo);

    const fs::path dir = o.out;
    write_text(dir / "solution.json", solution_to_json(result));
    write_atomically(dir / "segments.csv", [&](std::ostream& s) { write_segments_csv(s, segments); });
    write_atomically(dir / "range_report.csv", [&](std::ostream& s) { write_range_report_csv(s, rec.id(), ranges); });

    const auto& d = result.diagnostics;
    out << std::fixed << std::setprecision(3);
    out << "load: " << load_s * 1000.0 << " ms, trigger scan: " << d.trigger_seconds * 1000.0
        << " ms, graph search: " << d.search_seconds * 1000.0 << " ms\n";
    out << "POIs: " << result.pois.size() << ", partial solutions: " << d.partial_solution_count
        << ", candidates: " << d.candidate_count << ", explored states: " << d.explored_states << "\n";
    if (result.optimal.empty()) {
        out << "no solution found\n";
    } else {
        out << "optimal: " << result.optimal.part_count() << " part(s), covered "
            << static_cast<double>(result.optimal.covered_ms()) / 1000.0 << " s, " << segments.size()
            << " segments\n";
    }
    if (o.verbose)
        for (const auto& [node, n] : d.poi_counts) out << "  " << node << ": " << n << " POI(s)\n";
    return kExitOk;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Movement sequence recognition over multi-sensor recordings"};
    app.require_subcommand(1);
    Options o;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic race recording and its ground truth");
    synth->add_option("--plan", o.plan, "Track plan JSON (defaults built in)");
    synth->add_option("-o,--out", o.out, "Output directory");
    synth->add_option("--seed", o.seed, "Override the plan's noise seed");

    auto* gram = app.add_subcommand("grammar", "Write the race grammar for a track plan");
    gram->add_option("--plan", o.plan, "Track plan JSON (defaults built in)");
    gram->add_option("-o,--out", o.out, "Output directory");

    auto* detect = app.add_subcommand("detect", "Run the grammar's triggers and write POIs");
    detect->add_option("--recording", o.recording, "Recording CSV")->required();
    detect->add_option("--grammar", o.grammar, "Grammar JSON")->required();
    detect->add_option("-o,--out", o.out, "Output directory");

    auto* recog = app.add_subcommand("recognize", "Recognize the optimal movement sequence and report metrics");
    recog->add_option("--recording", o.recording, "Recording CSV")->required();
    recog->add_option("--grammar", o.grammar, "Grammar JSON")->required();
    recog->add_option("-o,--out", o.out, "Output directory");
    recog->add_option("--max-search-states", o.max_states, "Cap on explored search states")->check(CLI::PositiveNumber);
    recog->add_option("--lap-node", o.lap_node, "Node that starts a new lap");

    for (auto* sub : {synth, gram, detect, recog}) sub->add_flag("-v,--verbose", o.verbose, "More output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInputError;
    }

    try {
        if (*synth) return cmd_synth(o, out);
        if (*gram) return cmd_grammar(o, out);
        if (*detect) return cmd_detect(o, out);
        return cmd_recognize(o, out);
    } catch (const SearchLimitExceeded& e) {
        err << "error: " << e.what() << "\n"
            << "hint: tighten the grammar's duration bounds or raise --max-search-states\n";
        return kExitSearchLimit;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    }
}

} // namespace movseq
