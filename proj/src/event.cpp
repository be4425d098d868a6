#include "fusepose/event.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace fusepose {

namespace {

void check_bounds(const Event& e, int width, int height, std::size_t index) {
    if (e.x >= width || e.y >= height) {
        throw std::out_of_range("event " + std::to_string(index) + " at (" + std::to_string(e.x) +
                                ", " + std::to_string(e.y) + ") outside " + std::to_string(width) +
                                "x" + std::to_string(height));
    }
    if (e.p != 1 && e.p != -1) {
        throw std::invalid_argument("event " + std::to_string(index) + " has polarity " +
                                    std::to_string(static_cast<int>(e.p)));
    }
}

}  // namespace

EventBuffer::EventBuffer(int width, int height) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("EventBuffer: non-positive dimensions");
}

void EventBuffer::append(const Event& e) {
    check_bounds(e, width_, height_, events_.size());
    if (!events_.empty() && e.t < events_.back().t) {
        throw std::invalid_argument("EventBuffer: timestamps must be non-decreasing");
    }
    events_.push_back(e);
}

void EventBuffer::append(std::span<const Event> events) {
    for (const Event& e : events) append(e);
}

std::span<const Event> slice_window(const EventBuffer& buffer, std::uint64_t t0, std::uint64_t t1) {
    if (t0 > t1) throw std::invalid_argument("slice_window: t0 > t1");
    const auto all = buffer.events();
    const auto lo = std::upper_bound(all.begin(), all.end(), t0,
                                     [](std::uint64_t t, const Event& e) { return t < e.t; });
    const auto hi = std::upper_bound(lo, all.end(), t1,
                                     [](std::uint64_t t, const Event& e) { return t < e.t; });
    return all.subspan(static_cast<std::size_t>(lo - all.begin()),
                       static_cast<std::size_t>(hi - lo));
}

EventFrame accumulate_frame(std::span<const Event> batch, int width, int height, PolarityMode mode) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("accumulate_frame: non-positive dimensions");

    EventFrame frame;
    frame.width = width;
    frame.height = height;
    frame.values = Eigen::MatrixXd::Zero(height, width);
    frame.encoding = mode == PolarityMode::Count ? FrameEncoding::Count : FrameEncoding::Signed;
    frame.empty = batch.empty();
    if (batch.empty()) return frame;

    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Event& e = batch[i];
        check_bounds(e, width, height, i);
        frame.values(e.y, e.x) += mode == PolarityMode::Count ? 1.0 : static_cast<double>(e.p);
    }

    if (mode == PolarityMode::Count) {
        const double peak = frame.values.maxCoeff();
        frame.values /= peak;  // batch non-empty, so peak >= 1
    } else {
        const double peak = frame.values.cwiseAbs().maxCoeff();
        if (peak > 0.0) {
            frame.values = (frame.values / (2.0 * peak)).array() + 0.5;
        } else {
            frame.values.setConstant(0.5);  // balanced polarities everywhere
        }
    }
    return frame;
}

EventFrame ignore_polarity(const EventFrame& frame) {
    if (frame.encoding != FrameEncoding::Signed) return frame;  // already polarity-invariant

    EventFrame out = frame;
    out.encoding = FrameEncoding::Mono;
    if (frame.empty) return out;

    out.values = (frame.values.array() - 0.5).abs() * 2.0;
    const double peak = out.values.maxCoeff();
    if (peak > 0.0) {
        out.values /= peak;
    } else {
        out.empty = true;  // no net activity anywhere
    }
    return out;
}

namespace {

constexpr std::size_t kRecordSize = 16;

std::array<unsigned char, kRecordSize> pack_record(const Event& e) {
    std::array<unsigned char, kRecordSize> rec{};
    for (int i = 0; i < 8; ++i) rec[static_cast<std::size_t>(i)] = static_cast<unsigned char>((e.t >> (8 * i)) & 0xff);
    rec[8] = static_cast<unsigned char>(e.x & 0xff);
    rec[9] = static_cast<unsigned char>((e.x >> 8) & 0xff);
    rec[10] = static_cast<unsigned char>(e.y & 0xff);
    rec[11] = static_cast<unsigned char>((e.y >> 8) & 0xff);
    rec[12] = static_cast<unsigned char>(static_cast<std::int8_t>(e.p));
    return rec;
}

Event unpack_record(const std::array<unsigned char, kRecordSize>& rec) {
    Event e;
    e.t = 0;
    for (int i = 7; i >= 0; --i) e.t = (e.t << 8) | rec[static_cast<std::size_t>(i)];
    e.x = static_cast<std::uint16_t>(rec[8] | (rec[9] << 8));
    e.y = static_cast<std::uint16_t>(rec[10] | (rec[11] << 8));
    e.p = static_cast<std::int8_t>(rec[12]);
    return e;
}

}  // namespace

void write_events_bin(std::ostream& os, std::span<const Event> events) {
    for (const Event& e : events) {
        const auto rec = pack_record(e);
        os.write(reinterpret_cast<const char*>(rec.data()), kRecordSize);
    }
}

EventBuffer read_events_bin(std::istream& is, int width, int height) {
    EventBuffer buffer(width, height);
    std::array<unsigned char, kRecordSize> rec{};
    while (is.read(reinterpret_cast<char*>(rec.data()), kRecordSize)) {
        buffer.append(unpack_record(rec));
    }
    if (is.gcount() != 0) throw std::runtime_error("read_events_bin: truncated record");
    return buffer;
}

void write_events_bin(const std::filesystem::path& path, std::span<const Event> events) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_events_bin(os, events);
}

EventBuffer read_events_bin(const std::filesystem::path& path, int width, int height) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return read_events_bin(is, width, height);
}

void write_events_csv(std::ostream& os, std::span<const Event> events) {
    os << "t_us,x,y,p\n";
    for (const Event& e : events) {
        os << e.t << ',' << e.x << ',' << e.y << ',' << static_cast<int>(e.p) << '\n';
    }
}

EventBuffer read_events_csv(std::istream& is, int width, int height) {
    EventBuffer buffer(width, height);
    std::string line;
    if (!std::getline(is, line)) return buffer;
    if (line != "t_us,x,y,p") throw std::runtime_error("read_events_csv: bad header: " + line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        Event e;
        std::getline(ls, field, ',');
        e.t = std::stoull(field);
        std::getline(ls, field, ',');
        e.x = static_cast<std::uint16_t>(std::stoi(field));
        std::getline(ls, field, ',');
        e.y = static_cast<std::uint16_t>(std::stoi(field));
        std::getline(ls, field, ',');
        e.p = static_cast<std::int8_t>(std::stoi(field));
        buffer.append(e);
    }
    return buffer;
}

}  // namespace fusepose
