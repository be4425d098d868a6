#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace fusepose {

// Timestamped polarity spike. 16-byte on-disk record, see read/write below.
struct Event {
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::int8_t p = 1;  // -1 or +1
    std::uint64_t t = 0;  // microseconds

    friend bool operator==(const Event&, const Event&) = default;
};

// Append-only ordered event container. One appender, any number of readers of
// the committed prefix; slicing hands out views into immutable storage.
class EventBuffer {
public:
    EventBuffer(int width, int height);

    void append(const Event& e);
    void append(std::span<const Event> events);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return events_.size(); }
    bool empty() const { return events_.empty(); }
    std::span<const Event> events() const { return events_; }
    const Event& operator[](std::size_t i) const { return events_[i]; }

private:
    int width_;
    int height_;
    std::vector<Event> events_;
};

enum class PolarityMode { Count, Signed };

// Encoding of an accumulated frame. Count and Mono grids are activity maps
// with 0 = no events; Signed grids center no-net-activity at 0.5.
enum class FrameEncoding { Count, Signed, Mono };

struct EventFrame {
    int width = 0;
    int height = 0;
    Eigen::MatrixXd values;  // height x width, values(y, x) in [0, 1]
    std::uint64_t window_start = 0;
    std::uint64_t window_end = 0;
    bool empty = true;
    FrameEncoding encoding = FrameEncoding::Count;

    double at(int x, int y) const { return values(y, x); }
};

// Events with t0 < t <= t1 (half-open at the left so that chained windows
// partition the stream). Returns a view into the buffer's storage.
std::span<const Event> slice_window(const EventBuffer& buffer, std::uint64_t t0, std::uint64_t t1);

// 2D histogram of the batch, normalized to [0, 1]. Count mode divides by the
// maximum cell count; Signed mode maps net polarity affinely with 0 -> 0.5.
EventFrame accumulate_frame(std::span<const Event> batch, int width, int height,
                            PolarityMode mode = PolarityMode::Count);

// Folds a signed frame into a polarity-invariant activity map. Frames that
// already are activity maps (Count, Mono) pass through unchanged.
EventFrame ignore_polarity(const EventFrame& frame);

// Binary record, little-endian: u64 t_us, u16 x, u16 y, i8 p, 3 pad bytes.
void write_events_bin(std::ostream& os, std::span<const Event> events);
EventBuffer read_events_bin(std::istream& is, int width, int height);
void write_events_bin(const std::filesystem::path& path, std::span<const Event> events);
EventBuffer read_events_bin(const std::filesystem::path& path, int width, int height);

// CSV alternative with header "t_us,x,y,p".
void write_events_csv(std::ostream& os, std::span<const Event> events);
EventBuffer read_events_csv(std::istream& is, int width, int height);

}  // namespace fusepose
