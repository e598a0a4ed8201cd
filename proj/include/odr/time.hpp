#pragma once

#include <chrono>
#include <mutex>
#include <string>
#include <string_view>

namespace odr {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;
using std::chrono::milliseconds;

/// "2023-06-19T10:00:00.000Z"
std::string format_timestamp(Timestamp t);
Timestamp parse_timestamp(std::string_view text);

class Clock {
public:
    virtual ~Clock() = default;
    virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
public:
    Timestamp now() const override
    {
        return std::chrono::time_point_cast<milliseconds>(std::chrono::system_clock::now());
    }
};

/// Settable clock for simulations and tests.
class ManualClock final : public Clock {
public:
    explicit ManualClock(Timestamp start) : now_(start) {}

    Timestamp now() const override
    {
        std::lock_guard lock(mutex_);
        return now_;
    }
    void set(Timestamp t)
    {
        std::lock_guard lock(mutex_);
        now_ = t;
    }
    void advance(milliseconds d)
    {
        std::lock_guard lock(mutex_);
        now_ += d;
    }

private:
    mutable std::mutex mutex_;
    Timestamp now_;
};

} // namespace odr
