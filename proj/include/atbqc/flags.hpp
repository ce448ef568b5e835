#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "atbqc/errors.hpp"

namespace atbqc {

enum class C1ErrorKind { Incomplete, Frame };
enum class C2ErrorKind { Tb, Frame };

inline std::string to_string(C1ErrorKind k) {
    return k == C1ErrorKind::Incomplete ? "incomplete" : "frame";
}
inline std::string to_string(C2ErrorKind k) {
    return k == C2ErrorKind::Tb ? "tb" : "frame";
}

inline std::optional<C1ErrorKind> c1_kind_from_string(const std::string& s) {
    if (s == "incomplete") return C1ErrorKind::Incomplete;
    if (s == "frame") return C1ErrorKind::Frame;
    return std::nullopt;
}
inline std::optional<C2ErrorKind> c2_kind_from_string(const std::string& s) {
    if (s == "tb") return C2ErrorKind::Tb;
    if (s == "frame") return C2ErrorKind::Frame;
    return std::nullopt;
}

// Identifiers recorded in ErrorFlags::triggering_rules.
namespace rules {
inline constexpr const char* kC1MeanVelum = "c1-mean-velum";
inline constexpr const char* kC1VelToC3 = "c1-vel-c3";
inline constexpr const char* kC1VelUnresolvable = "vel-unresolvable";
inline constexpr const char* kC2PointCount = "c2-point-count";
inline constexpr const char* kC2Slope = "c2-slope";
inline constexpr const char* kC2Distance = "c2-distance";
inline constexpr const char* kC2TbUnresolvable = "tb-unresolvable";
} // namespace rules

/// Per-frame, per-contour error classification.
struct ErrorFlags {
    bool c1_error = false;
    std::optional<C1ErrorKind> c1_kind;
    bool c2_error = false;
    std::optional<C2ErrorKind> c2_kind;
    std::set<std::string> triggering_rules;
};

/// A kind must be present exactly when the corresponding error bit is set.
inline void validate_flags(const ErrorFlags& f) {
    if (f.c1_error != f.c1_kind.has_value())
        throw InvalidArgumentError("flags: c1 kind must be present iff c1_error");
    if (f.c2_error != f.c2_kind.has_value())
        throw InvalidArgumentError("flags: c2 kind must be present iff c2_error");
}

/// Per-video flag vectors, keyed by video id, indexed by frame.
using FlagTable = std::map<std::string, std::vector<ErrorFlags>>;

} // namespace atbqc
