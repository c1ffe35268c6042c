#pragma once

#include <optional>

namespace acdc {

// Structured stand-in for a text prompt. Character and background are
// persistent attributes, motion is transient. An unset field models an
// unresolved referent ("he", "the dog", ...) that the memory module is
// expected to fill in from earlier records.
struct ConditionRecord {
    std::optional<int> character;
    std::optional<int> background;
    std::optional<int> motion;

    bool operator==(const ConditionRecord&) const = default;
};

struct ConditionWeights {
    double character = 1.0;
    double background = 1.0;
    double motion = 1.0;
};

// Weighted Hamming distance over attributes; an unset field is its own
// value, so set-vs-unset counts as a mismatch.
inline double condition_distance(const ConditionRecord& a, const ConditionRecord& b,
                                 const ConditionWeights& w = {}) {
    double d = 0.0;
    if (a.character != b.character) d += w.character;
    if (a.background != b.background) d += w.background;
    if (a.motion != b.motion) d += w.motion;
    return d;
}

}  // namespace acdc
