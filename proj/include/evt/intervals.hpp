#pragma once

#include "evt/common.hpp"

namespace evt {

// Half-open time interval [start_sec, end_sec) in seconds.
struct Span {
    double start_sec = 0.0;
    double end_sec = 0.0;
};

inline bool span_valid(const Span& s) { return s.start_sec < s.end_sec; }

inline void require_span(const Span& s, const char* what) {
    if (!span_valid(s))
        throw ContractError(std::string(what) + ": degenerate interval [" +
                            std::to_string(s.start_sec) + ", " + std::to_string(s.end_sec) + ")");
}

inline double span_length(const Span& s) { return s.end_sec - s.start_sec; }

inline double overlap_length(const Span& a, const Span& b) {
    const double lo = a.start_sec > b.start_sec ? a.start_sec : b.start_sec;
    const double hi = a.end_sec < b.end_sec ? a.end_sec : b.end_sec;
    return hi > lo ? hi - lo : 0.0;
}

// Gap in seconds between two intervals; 0 when they overlap or touch.
inline double gap_seconds(const Span& a, const Span& b) {
    const double g1 = b.start_sec - a.end_sec;
    const double g2 = a.start_sec - b.end_sec;
    const double g = g1 > g2 ? g1 : g2;
    return g > 0.0 ? g : 0.0;
}

inline double span_center(const Span& s) { return 0.5 * (s.start_sec + s.end_sec); }

}  // namespace evt
