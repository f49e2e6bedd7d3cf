#include "movseq/metrics.hpp"

#include "movseq/errors.hpp"

#include <algorithm>
#include <charconv>
#include <ostream>

namespace movseq {

namespace {

std::span<const Sample> window(const Channel& ch, Timestamp from, Timestamp to)
{
    auto s = ch.samples();
    auto lo = std::lower_bound(s.begin(), s.end(), from, [](const Sample& a, Timestamp t) { return a.t < t; });
    auto hi = std::upper_bound(lo, s.end(), to, [](Timestamp t, const Sample& a) { return t < a.t; });
    return {lo, hi};
}

const Channel* optional_channel(const Recording& rec, const std::string& name, ChannelKind kind)
{
    const Channel* c = rec.find(name);
    if (c && c->kind() != kind)
        throw Error("metrics: channel '" + name + "' is " + std::string(to_string(c->kind())) + ", expected " +
                    std::string(to_string(kind)));
    return c;
}

std::optional<double> mean_scalar(const Channel* ch, Timestamp from, Timestamp to, int axis = 0)
{
    if (!ch) return std::nullopt;
    auto w = window(*ch, from, to);
    if (w.empty()) return std::nullopt;
    double sum = 0.0;
    for (const auto& s : w) sum += s.v[static_cast<std::size_t>(axis)];
    return sum / static_cast<double>(w.size());
}

std::string fmt(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

double seconds(std::int64_t ms) { return static_cast<double>(ms) / 1000.0; }

} // namespace

std::vector<int> lap_indices(const PartialSolution& part, const std::string& lap_node)
{
    std::vector<int> laps;
    laps.reserve(part.steps.size());
    int lap = 1;
    for (const auto& s : part.steps) {
        if (s.node == lap_node) ++lap;
        laps.push_back(lap);
    }
    return laps;
}

std::vector<SegmentMetrics> segment_metrics(const TotalSolution& solution, const Recording& recording,
                                            const MetricsOptions& options)
{
    const Channel* speed = optional_channel(recording, options.speed_channel, ChannelKind::speed);
    const Channel* accel = optional_channel(recording, options.accel_channel, ChannelKind::accel);

    std::vector<SegmentMetrics> out;
    for (const auto& part : solution.parts) {
        const auto laps = lap_indices(part, options.lap_node);
        for (std::size_t i = 1; i < part.steps.size(); ++i) {
            const auto& a = part.steps[i - 1];
            const auto& b = part.steps[i];
            SegmentMetrics m;
            m.from = a.node;
            m.to = b.node;
            m.lap_index = laps[i - 1];
            m.start_t = a.t;
            m.end_t = b.t;
            m.duration_s = seconds(b.t - a.t);
            m.mean_speed_mps = mean_scalar(speed, a.t, b.t);
            if (accel) {
                auto w = window(*accel, a.t, b.t);
                if (!w.empty()) {
                    std::array<double, 3> sum{}, mx = w.front().v;
                    for (const auto& s : w)
                        for (std::size_t k = 0; k < 3; ++k) {
                            sum[k] += s.v[k];
                            mx[k] = std::max(mx[k], s.v[k]);
                        }
                    for (auto& x : sum) x /= static_cast<double>(w.size());
                    m.mean_accel_g = sum;
                    m.max_accel_g = mx;
                }
            }
            out.push_back(std::move(m));
        }
    }
    return out;
}

std::vector<RangeReport> range_report(const TotalSolution& solution, const Recording& recording,
                                      const MetricsOptions& options)
{
    const Channel* accel = optional_channel(recording, options.accel_channel, ChannelKind::accel);

    std::vector<RangeReport> out;
    for (const auto& part : solution.parts) {
        const auto laps = lap_indices(part, options.lap_node);
        const auto& st = part.steps;
        for (std::size_t i = 0; i + 3 < st.size(); ++i) {
            if (st[i].node != options.range_enter || st[i + 1].node != options.shooting_start ||
                st[i + 2].node != options.shooting_finish || st[i + 3].node != options.range_leave)
                continue;
            RangeReport r;
            r.lap_index = laps[i];
            r.range_enter_t = st[i].t;
            r.range_leave_t = st[i + 3].t;
            r.range_time_s = seconds(st[i + 3].t - st[i].t);
            r.shooting_time_s = seconds(st[i + 2].t - st[i + 1].t);
            r.shooting_z_accel_g = mean_scalar(accel, st[i + 1].t, st[i + 2].t, 2);
            out.push_back(r);
        }
    }
    return out;
}

void write_segments_csv(std::ostream& out, const std::vector<SegmentMetrics>& segments)
{
    out << kSegmentsCsvHeader << '\n';
    for (const auto& m : segments) {
        out << m.lap_index << ',' << m.from << ',' << m.to << ',' << fmt(m.duration_s) << ','
            << fmt(m.mean_speed_mps);
        for (std::size_t k = 0; k < 3; ++k) out << ',' << (m.max_accel_g ? fmt((*m.max_accel_g)[k]) : "");
        out << '\n';
    }
}

void write_range_report_csv(std::ostream& out, const std::string& dataset, const std::vector<RangeReport>& reports)
{
    out << kRangeReportCsvHeader << '\n';
    for (const auto& r : reports)
        out << dataset << ',' << r.lap_index << ',' << fmt(r.range_time_s) << ',' << fmt(r.shooting_time_s) << ','
            << fmt(r.shooting_z_accel_g) << '\n';
}

} // namespace movseq
