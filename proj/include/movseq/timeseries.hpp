#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace movseq {

// Milliseconds since the recording epoch.
struct Timestamp {
    std::int64_t ms = 0;

    constexpr auto operator<=>(const Timestamp&) const = default;
};

constexpr std::int64_t operator-(Timestamp a, Timestamp b) { return a.ms - b.ms; }

// WGS84 latitude/longitude in degrees.
struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    constexpr bool operator==(const GeoPoint&) const = default;
};

bool is_valid(GeoPoint p);

enum class ChannelKind { position, speed, accel, gyro, generic_scalar };

std::string_view to_string(ChannelKind kind);

// Kind implied by a CSV channel name; unknown names are custom scalars.
ChannelKind kind_for_channel_name(std::string_view name);

// Number of payload components carried by a sample of this kind.
int arity(ChannelKind kind);

bool is_scalar(ChannelKind kind);

// One sample. Payload layout depends on the channel kind:
//   position        v[0] = lat, v[1] = lon (degrees)
//   speed, scalar   v[0]
//   accel, gyro     v[0..2] = x, y, z (G or deg/s)
struct Sample {
    Timestamp t;
    std::array<double, 3> v{};

    double scalar() const { return v[0]; }
    GeoPoint geo() const { return {v[0], v[1]}; }

    bool operator==(const Sample&) const = default;
};

// Immutable, strictly time-ordered sequence of samples of one kind.
class Channel {
public:
    // Throws Error unless timestamps are non-negative and strictly increasing and
    // every payload is valid for the kind.
    Channel(ChannelKind kind, double nominal_rate_hz, std::vector<Sample> samples);

    ChannelKind kind() const { return kind_; }
    double nominal_rate_hz() const { return rate_hz_; }
    std::span<const Sample> samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    const Sample& operator[](std::size_t i) const { return samples_[i]; }

    bool operator==(const Channel&) const = default;

private:
    ChannelKind kind_;
    double rate_hz_;
    std::vector<Sample> samples_;
};

class Recording {
public:
    // Throws Error if there are no channels.
    Recording(std::string id, std::map<std::string, Channel> channels);

    const std::string& id() const { return id_; }
    const std::map<std::string, Channel>& channels() const { return channels_; }

    const Channel* find(std::string_view name) const;
    // Throws Error naming the channel if absent.
    const Channel& channel(std::string_view name) const;

    std::size_t sample_count() const;
    Timestamp first_t() const;
    Timestamp last_t() const;

    bool operator==(const Recording&) const = default;

private:
    std::string id_;
    std::map<std::string, Channel> channels_;
};

enum class RecordingFormat { csv };

// Header line of the recording CSV format.
inline constexpr std::string_view kRecordingCsvHeader = "timestamp_ms,channel,v0,v1,v2";

Recording load_recording(const std::filesystem::path& path,
                         RecordingFormat format = RecordingFormat::csv);
Recording parse_recording_csv(std::istream& in, std::string id);

// Rows are merged across channels in time order; doubles use the shortest
// representation that parses back to the same value.
void write_recording_csv(std::ostream& out, const Recording& recording);
void save_recording(const std::filesystem::path& path, const Recording& recording);

// Samples with from <= t <= to. Throws Error if from > to.
Channel slice(const Channel& channel, Timestamp from, Timestamp to);

// Linear interpolation of a scalar channel. Throws Error outside the channel span.
double resample_linear(const Channel& channel, Timestamp at);

// Scalar view of one axis (0..2) of an accel or gyro channel.
Channel component(const Channel& channel, int axis);

} // namespace movseq
