#include "movseq/timeseries.hpp"

#include "movseq/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace movseq {

bool is_valid(GeoPoint p)
{
    return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
           p.lon >= -180.0 && p.lon <= 180.0;
}

std::string_view to_string(ChannelKind kind)
{
    switch (kind) {
    case ChannelKind::position: return "position";
    case ChannelKind::speed: return "speed";
    case ChannelKind::accel: return "accel";
    case ChannelKind::gyro: return "gyro";
    case ChannelKind::generic_scalar: return "generic_scalar";
    }
    return "?";
}

ChannelKind kind_for_channel_name(std::string_view name)
{
    if (name == "position") return ChannelKind::position;
    if (name == "speed") return ChannelKind::speed;
    if (name == "accel") return ChannelKind::accel;
    if (name == "gyro") return ChannelKind::gyro;
    return ChannelKind::generic_scalar;
}

int arity(ChannelKind kind)
{
    switch (kind) {
    case ChannelKind::position: return 2;
    case ChannelKind::accel:
    case ChannelKind::gyro: return 3;
    case ChannelKind::speed:
    case ChannelKind::generic_scalar: return 1;
    }
    return 1;
}

bool is_scalar(ChannelKind kind)
{
    return kind == ChannelKind::speed || kind == ChannelKind::generic_scalar;
}

namespace {

std::string describe_sample(const Sample& s) { return "sample at t=" + std::to_string(s.t.ms); }

void validate_payload(ChannelKind kind, const Sample& s)
{
    for (int i = 0; i < arity(kind); ++i) {
        if (!std::isfinite(s.v[static_cast<std::size_t>(i)]))
            throw Error(describe_sample(s) + ": non-finite value");
    }
    if (kind == ChannelKind::position && !is_valid(s.geo()))
        throw Error(describe_sample(s) + ": latitude/longitude out of range");
    if (kind == ChannelKind::speed && s.scalar() < 0.0)
        throw Error(describe_sample(s) + ": negative speed");
}

} // namespace

Channel::Channel(ChannelKind kind, double nominal_rate_hz, std::vector<Sample> samples)
    : kind_(kind), rate_hz_(nominal_rate_hz), samples_(std::move(samples))
{
    if (!(nominal_rate_hz > 0.0) || !std::isfinite(nominal_rate_hz))
        throw Error("channel nominal rate must be positive");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        if (samples_[i].t.ms < 0) throw Error(describe_sample(samples_[i]) + ": negative timestamp");
        if (i > 0 && samples_[i].t <= samples_[i - 1].t) {
            throw Error(describe_sample(samples_[i]) +
                        (samples_[i].t == samples_[i - 1].t ? ": duplicate timestamp"
                                                            : ": non-monotonic timestamp"));
        }
        validate_payload(kind_, samples_[i]);
    }
}

Recording::Recording(std::string id, std::map<std::string, Channel> channels)
    : id_(std::move(id)), channels_(std::move(channels))
{
    if (channels_.empty()) throw Error("recording '" + id_ + "' has no channels");
}

const Channel* Recording::find(std::string_view name) const
{
    auto it = channels_.find(std::string(name));
    return it == channels_.end() ? nullptr : &it->second;
}

const Channel& Recording::channel(std::string_view name) const
{
    if (const Channel* c = find(name)) return *c;
    throw Error("unknown channel '" + std::string(name) + "'");
}

std::size_t Recording::sample_count() const
{
    std::size_t n = 0;
    for (const auto& [name, ch] : channels_) n += ch.size();
    return n;
}

Timestamp Recording::first_t() const
{
    Timestamp t{INT64_MAX};
    for (const auto& [name, ch] : channels_)
        if (!ch.empty()) t = std::min(t, ch.samples().front().t);
    return t.ms == INT64_MAX ? Timestamp{0} : t;
}

Timestamp Recording::last_t() const
{
    Timestamp t{0};
    for (const auto& [name, ch] : channels_)
        if (!ch.empty()) t = std::max(t, ch.samples().back().t);
    return t;
}

// --- CSV ingestion ---------------------------------------------------------

namespace {

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

double parse_double(std::string_view field, std::size_t line, std::string_view what)
{
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
        throw ParseError("invalid " + std::string(what) + " '" + std::string(field) + "'", line);
    return value;
}

// Nominal rate from the median sampling interval.
double estimate_rate_hz(const std::vector<Sample>& samples)
{
    if (samples.size() < 2) return 1.0;
    std::vector<std::int64_t> dts;
    dts.reserve(samples.size() - 1);
    for (std::size_t i = 1; i < samples.size(); ++i) dts.push_back(samples[i].t - samples[i - 1].t);
    auto mid = dts.begin() + static_cast<std::ptrdiff_t>(dts.size() / 2);
    std::nth_element(dts.begin(), mid, dts.end());
    return *mid > 0 ? 1000.0 / static_cast<double>(*mid) : 1.0;
}

struct PendingChannel {
    ChannelKind kind;
    std::vector<Sample> samples;
};

} // namespace

Recording parse_recording_csv(std::istream& in, std::string id)
{
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::map<std::string, PendingChannel> pending;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have_header) {
            if (line != kRecordingCsvHeader)
                throw ParseError("expected header '" + std::string(kRecordingCsvHeader) + "'", line_no);
            have_header = true;
            continue;
        }
        if (line.empty()) continue;

        auto fields = split_fields(line);
        if (fields.size() < 3 || fields.size() > 5)
            throw ParseError("expected 3 to 5 fields, got " + std::to_string(fields.size()), line_no);

        std::int64_t t = 0;
        auto tf = fields[0];
        auto [ptr, ec] = std::from_chars(tf.data(), tf.data() + tf.size(), t);
        if (ec != std::errc() || ptr != tf.data() + tf.size() || tf.empty())
            throw ParseError("invalid timestamp '" + std::string(tf) + "'", line_no);
        if (t < 0) throw ParseError("negative timestamp", line_no);

        std::string name(fields[1]);
        if (name.empty()) throw ParseError("empty channel name", line_no);
        ChannelKind kind = kind_for_channel_name(name);
        int n = arity(kind);

        Sample s;
        s.t = Timestamp{t};
        for (std::size_t i = 0; i < 3; ++i) {
            std::string_view f = i + 2 < fields.size() ? fields[i + 2] : std::string_view{};
            if (static_cast<int>(i) < n) {
                if (f.empty())
                    throw ParseError("channel '" + name + "' requires v" + std::to_string(i), line_no);
                s.v[i] = parse_double(f, line_no, "value");
                if (!std::isfinite(s.v[i])) throw ParseError("non-finite value", line_no);
            } else if (!f.empty()) {
                throw ParseError("channel '" + name + "' takes " + std::to_string(n) + " value(s)",
                                 line_no);
            }
        }
        if (kind == ChannelKind::position && !is_valid(s.geo()))
            throw ParseError("latitude/longitude out of range", line_no);
        if (kind == ChannelKind::speed && s.scalar() < 0.0)
            throw ParseError("negative speed", line_no);

        auto& ch = pending.try_emplace(name, PendingChannel{kind, {}}).first->second;
        if (!ch.samples.empty()) {
            Timestamp prev = ch.samples.back().t;
            if (s.t == prev)
                throw ParseError("duplicate timestamp " + std::to_string(t) + " in channel '" + name + "'",
                                 line_no);
            if (s.t < prev)
                throw ParseError("non-monotonic timestamp " + std::to_string(t) + " in channel '" + name +
                                     "'",
                                 line_no);
        }
        ch.samples.push_back(s);
    }
    if (!have_header) throw ParseError("empty file", line_no == 0 ? 1 : line_no);

    std::map<std::string, Channel> channels;
    for (auto& [name, p] : pending) {
        double rate = estimate_rate_hz(p.samples);
        channels.emplace(name, Channel(p.kind, rate, std::move(p.samples)));
    }
    return Recording(std::move(id), std::move(channels));
}

Recording load_recording(const std::filesystem::path& path, RecordingFormat format)
{
    if (format != RecordingFormat::csv) throw Error("unsupported recording format");
    std::ifstream in(path);
    if (!in) throw Error("cannot open recording '" + path.string() + "'");
    try {
        return parse_recording_csv(in, path.stem().string());
    } catch (const ParseError& e) {
        throw ParseError(e.message(), e.line(), path.string());
    }
}

namespace {

void append_double(std::string& out, double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
}

} // namespace

void write_recording_csv(std::ostream& out, const Recording& recording)
{
    struct Cursor {
        const std::string* name;
        const Channel* channel;
        std::size_t next = 0;
    };
    std::vector<Cursor> cursors;
    for (const auto& [name, ch] : recording.channels()) cursors.push_back({&name, &ch});

    std::string buf;
    buf.reserve(1 << 16);
    buf.append(kRecordingCsvHeader);
    buf.push_back('\n');

    // k-way merge by timestamp; ties keep channel-name order.
    while (true) {
        Cursor* best = nullptr;
        for (auto& c : cursors) {
            if (c.next >= c.channel->size()) continue;
            if (!best || (*c.channel)[c.next].t < (*best->channel)[best->next].t) best = &c;
        }
        if (!best) break;
        const Sample& s = (*best->channel)[best->next++];
        int n = arity(best->channel->kind());
        buf.append(std::to_string(s.t.ms));
        buf.push_back(',');
        buf.append(*best->name);
        for (int i = 0; i < 3; ++i) {
            buf.push_back(',');
            if (i < n) append_double(buf, s.v[static_cast<std::size_t>(i)]);
        }
        buf.push_back('\n');
        if (buf.size() > (1 << 16) - 256) {
            out << buf;
            buf.clear();
        }
    }
    out << buf;
}

void save_recording(const std::filesystem::path& path, const Recording& recording)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write recording '" + path.string() + "'");
    write_recording_csv(out, recording);
    if (!out) throw Error("failed writing recording '" + path.string() + "'");
}

// --- channel operations ----------------------------------------------------

namespace {

auto lower(std::span<const Sample> s, Timestamp t)
{
    return std::lower_bound(s.begin(), s.end(), t, [](const Sample& a, Timestamp b) { return a.t < b; });
}

auto upper(std::span<const Sample> s, Timestamp t)
{
    return std::upper_bound(s.begin(), s.end(), t, [](Timestamp a, const Sample& b) { return a < b.t; });
}

} // namespace

Channel slice(const Channel& channel, Timestamp from, Timestamp to)
{
    if (from > to)
        throw Error("slice: window start " + std::to_string(from.ms) + " is after end " +
                    std::to_string(to.ms));
    auto s = channel.samples();
    return Channel(channel.kind(), channel.nominal_rate_hz(), std::vector<Sample>(lower(s, from), upper(s, to)));
}

double resample_linear(const Channel& channel, Timestamp at)
{
    if (!is_scalar(channel.kind())) throw Error("resample_linear: channel is not scalar");
    auto s = channel.samples();
    if (s.empty() || at < s.front().t || at > s.back().t)
        throw Error("resample_linear: t=" + std::to_string(at.ms) + " outside channel span");
    auto it = lower(s, at);
    if (it->t == at) return it->scalar();
    const Sample& hi = *it;
    const Sample& lo = *(it - 1);
    double f = static_cast<double>(at - lo.t) / static_cast<double>(hi.t - lo.t);
    return lo.scalar() + f * (hi.scalar() - lo.scalar());
}

Channel component(const Channel& channel, int axis)
{
    if (channel.kind() != ChannelKind::accel && channel.kind() != ChannelKind::gyro)
        throw Error("component: channel is not a 3-axis channel");
    if (axis < 0 || axis > 2) throw Error("component: axis must be 0, 1 or 2");
    std::vector<Sample> out;
    out.reserve(channel.size());
    for (const Sample& s : channel.samples()) out.push_back({s.t, {s.v[static_cast<std::size_t>(axis)], 0.0, 0.0}});
    return Channel(ChannelKind::generic_scalar, channel.nominal_rate_hz(), std::move(out));
}

} // namespace movseq
