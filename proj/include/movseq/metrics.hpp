#pragma once

#include "movseq/recognizer.hpp"
#include "movseq/timeseries.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace movseq {

struct MetricsOptions {
    // Each traversal of this node starts a new lap.
    std::string lap_node = "RL";
    std::string speed_channel = "speed";
    std::string accel_channel = "accel";

    std::string range_enter = "RE";
    std::string shooting_start = "SS";
    std::string shooting_finish = "SF";
    std::string range_leave = "RL";
};

struct SegmentMetrics {
    std::string from;
    std::string to;
    int lap_index = 1;
    Timestamp start_t;
    Timestamp end_t;
    double duration_s = 0.0;
    std::optional<double> mean_speed_mps;
    std::optional<std::array<double, 3>> mean_accel_g;
    std::optional<std::array<double, 3>> max_accel_g;
};

struct RangeReport {
    int lap_index = 1;
    Timestamp range_enter_t;
    Timestamp range_leave_t;
    double range_time_s = 0.0;
    double shooting_time_s = 0.0;
    std::optional<double> shooting_z_accel_g;
};

// Lap index of every step: 1 + number of lap-node steps up to and including it.
std::vector<int> lap_indices(const PartialSolution& part, const std::string& lap_node);

// One entry per consecutive step pair of every part. Aggregates are taken over
// samples with start_t <= t <= end_t and are missing when the channel is
// absent or has no sample in the window.
std::vector<SegmentMetrics> segment_metrics(const TotalSolution& solution, const Recording& recording,
                                            const MetricsOptions& options = {});

// One report per RE -> SS -> SF -> RL run of steps. Z-accel is the mean of the
// third accel axis over [SS, SF] in the raw sensor frame.
std::vector<RangeReport> range_report(const TotalSolution& solution, const Recording& recording,
                                      const MetricsOptions& options = {});

inline constexpr std::string_view kSegmentsCsvHeader =
    "lap,edge_from,edge_to,duration_s,mean_speed_mps,max_accel_x_g,max_accel_y_g,max_accel_z_g";
inline constexpr std::string_view kRangeReportCsvHeader =
    "dataset,lap,range_time_s,shooting_time_s,shooting_z_accel_g";

// Missing aggregates are written as empty fields.
void write_segments_csv(std::ostream& out, const std::vector<SegmentMetrics>& segments);
void write_range_report_csv(std::ostream& out, const std::string& dataset, const std::vector<RangeReport>& reports);

} // namespace movseq
