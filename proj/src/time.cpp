#include "odr/time.hpp"

#include "odr/error.hpp"

#include <cstdio>
#include <ctime>
#include <string>

namespace odr {

std::string format_timestamp(Timestamp t)
{
    using namespace std::chrono;
    auto secs = floor<seconds>(t);
    auto ms = (t - secs).count();
    std::time_t tt = system_clock::to_time_t(secs);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

Timestamp parse_timestamp(std::string_view text)
{
    std::tm tm{};
    int ms = 0;
    int consumed = 0;
    std::string s(text);
    int n = std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3dZ%n", &tm.tm_year, &tm.tm_mon,
                        &tm.tm_mday, &tm.tm_hour, &tm.tm_min, &tm.tm_sec, &ms, &consumed);
    if (n != 7 || consumed != static_cast<int>(s.size())) {
        throw Error(ErrorCode::InvalidArgument, "malformed timestamp: " + s);
    }
    tm.tm_year -= 1900;
    tm.tm_mon -= 1;
    std::time_t tt = timegm(&tm);
    return std::chrono::time_point_cast<milliseconds>(std::chrono::system_clock::from_time_t(tt)) +
           milliseconds(ms);
}

} // namespace odr
