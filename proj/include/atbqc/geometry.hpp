#pragma once

/**
 * @file geometry.hpp
 * @brief Pixel-space contour primitives: points, contours, landmark sets,
 *        arc-length resampling, nearest-point lookup and point-in-polygon.
 *
 * Coordinates are (row, col) with row increasing downward, so a "dip" is a
 * row maximum. Closed contours do not repeat their first point; closure is
 * implied by the flag and realized as the segment last->first.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "atbqc/errors.hpp"

namespace atbqc {

// Comparison slack for exact-intent geometric predicates.
inline constexpr double kGeomEpsilon = 1e-9;

struct PixelPoint {
    double row = 0.0;
    double col = 0.0;

    friend bool operator==(const PixelPoint& a, const PixelPoint& b) {
        return a.row == b.row && a.col == b.col;
    }
    friend PixelPoint operator+(const PixelPoint& a, const PixelPoint& b) {
        return {a.row + b.row, a.col + b.col};
    }
    friend PixelPoint operator-(const PixelPoint& a, const PixelPoint& b) {
        return {a.row - b.row, a.col - b.col};
    }
    friend PixelPoint operator*(const PixelPoint& a, double s) {
        return {a.row * s, a.col * s};
    }
};

inline double norm(const PixelPoint& p) {
    return std::hypot(p.row, p.col);
}

inline double distance(const PixelPoint& a, const PixelPoint& b) {
    return norm(a - b);
}

inline double squared_distance(const PixelPoint& a, const PixelPoint& b) {
    const double dr = a.row - b.row;
    const double dc = a.col - b.col;
    return dr * dr + dc * dc;
}

enum class ContourKind { C1, C2, C3 };

inline std::string to_string(ContourKind k) {
    switch (k) {
        case ContourKind::C1: return "C1";
        case ContourKind::C2: return "C2";
        case ContourKind::C3: return "C3";
    }
    return "?";
}

inline std::optional<ContourKind> contour_kind_from_string(const std::string& s) {
    if (s == "C1" || s == "c1") return ContourKind::C1;
    if (s == "C2" || s == "c2") return ContourKind::C2;
    if (s == "C3" || s == "c3") return ContourKind::C3;
    return std::nullopt;
}

/**
 * Ordered polyline in pixel space.
 *
 * For C1 index 0 is the upper-lip end and the last index is the
 * pharyngeal-wall (velum-side) end. For C2 index 0 is the jawline end.
 * C3 is stored open.
 */
struct Contour {
    std::vector<PixelPoint> points;
    ContourKind kind = ContourKind::C1;
    bool closed = false;
};

/// Throws InvalidContourError unless the contour has at least two points,
/// all coordinates finite and no two consecutive points identical.
inline void validate_contour(const Contour& c) {
    if (c.points.size() < 2)
        throw InvalidContourError("contour has fewer than 2 points");
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        if (!std::isfinite(c.points[i].row) || !std::isfinite(c.points[i].col))
            throw InvalidContourError("contour has non-finite coordinate at index " +
                                      std::to_string(i));
        if (i > 0 && c.points[i] == c.points[i - 1])
            throw InvalidContourError("contour has identical consecutive points at index " +
                                      std::to_string(i));
    }
}

/// Total length of the stored polyline (closure segment not included).
inline double arc_length(const Contour& c) {
    double total = 0.0;
    for (std::size_t i = 1; i < c.points.size(); ++i)
        total += distance(c.points[i - 1], c.points[i]);
    return total;
}

/**
 * Resamples the stored polyline to exactly n points uniformly spaced by arc
 * length. First and last input points are preserved exactly; kind and closed
 * flag carry over. The chain is resampled as stored for closed contours too,
 * keeping the endpoint convention intact.
 */
inline Contour resample_contour(const Contour& c, std::size_t n) {
    if (c.points.size() < 2)
        throw InvalidContourError("resample_contour: contour has fewer than 2 points");
    if (n < 2)
        throw InvalidArgumentError("resample_contour: n must be at least 2");

    const auto& pts = c.points;
    std::vector<double> cum(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i)
        cum[i] = cum[i - 1] + distance(pts[i - 1], pts[i]);
    const double total = cum.back();

    Contour out;
    out.kind = c.kind;
    out.closed = c.closed;
    out.points.reserve(n);
    out.points.push_back(pts.front());

    std::size_t seg = 0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double target = total * static_cast<double>(i) / static_cast<double>(n - 1);
        while (seg + 2 < pts.size() && cum[seg + 1] < target)
            ++seg;
        const double seg_len = cum[seg + 1] - cum[seg];
        const double t = seg_len > 0.0 ? (target - cum[seg]) / seg_len : 0.0;
        out.points.push_back(pts[seg] + (pts[seg + 1] - pts[seg]) * t);
    }
    out.points.push_back(pts.back());
    return out;
}

/// Index of the contour point nearest to p; ties go to the smallest index.
inline std::size_t nearest_point_index(const Contour& c, const PixelPoint& p) {
    if (c.points.empty())
        throw InvalidContourError("nearest_point_index: empty contour");
    std::size_t best = 0;
    double best_d = squared_distance(c.points[0], p);
    for (std::size_t i = 1; i < c.points.size(); ++i) {
        const double d = squared_distance(c.points[i], p);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

namespace detail {

inline double point_segment_distance(const PixelPoint& p, const PixelPoint& a,
                                     const PixelPoint& b) {
    const PixelPoint ab = b - a;
    const double len2 = ab.row * ab.row + ab.col * ab.col;
    if (len2 == 0.0)
        return distance(p, a);
    double t = ((p.row - a.row) * ab.row + (p.col - a.col) * ab.col) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return distance(p, a + ab * t);
}

} // namespace detail

/**
 * Even-odd ray-casting containment test over the implied closed polygon
 * (stored chain plus the closing segment). Points lying exactly on an edge
 * count as inside. Open contours are rejected.
 */
inline bool point_in_closed_contour(const Contour& c, const PixelPoint& p) {
    if (!c.closed)
        throw InvalidArgumentError("point_in_closed_contour: contour is not closed");
    if (c.points.size() < 3)
        throw InvalidContourError("point_in_closed_contour: closed contour needs 3+ points");

    const auto& pts = c.points;
    const std::size_t n = pts.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        if (detail::point_segment_distance(p, pts[j], pts[i]) <= kGeomEpsilon)
            return true;
    }
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const PixelPoint& a = pts[i];
        const PixelPoint& b = pts[j];
        if ((a.row > p.row) != (b.row > p.row)) {
            const double cross = (b.col - a.col) * (p.row - a.row) / (b.row - a.row) + a.col;
            if (p.col < cross)
                inside = !inside;
        }
    }
    return inside;
}

enum class LandmarkName { UL, LL, TB, VEL, GLTB };

inline std::string to_string(LandmarkName n) {
    switch (n) {
        case LandmarkName::UL: return "UL";
        case LandmarkName::LL: return "LL";
        case LandmarkName::TB: return "TB";
        case LandmarkName::VEL: return "VEL";
        case LandmarkName::GLTB: return "GLTB";
    }
    return "?";
}

inline std::optional<LandmarkName> landmark_from_string(const std::string& s) {
    if (s == "UL") return LandmarkName::UL;
    if (s == "LL") return LandmarkName::LL;
    if (s == "TB") return LandmarkName::TB;
    if (s == "VEL") return LandmarkName::VEL;
    if (s == "GLTB") return LandmarkName::GLTB;
    return std::nullopt;
}

/// Contour a landmark is anchored to. UL and VEL live on C1; LL, TB and
/// GLTB live on C2.
inline ContourKind contour_for_landmark(LandmarkName n) {
    switch (n) {
        case LandmarkName::UL:
        case LandmarkName::VEL:
            return ContourKind::C1;
        default:
            return ContourKind::C2;
    }
}

enum class Provenance { Annotated, Estimated };

inline std::string to_string(Provenance p) {
    return p == Provenance::Annotated ? "annotated" : "estimated";
}

struct LandmarkEntry {
    PixelPoint point;
    std::size_t contour_index = 0;
    Provenance provenance = Provenance::Annotated;
};

struct LandmarkSet {
    std::map<LandmarkName, LandmarkEntry> entries;

    const LandmarkEntry* find(LandmarkName n) const {
        auto it = entries.find(n);
        return it == entries.end() ? nullptr : &it->second;
    }
};

/// Checks that each landmark's stored point matches the indexed point of its
/// anchor contour within kGeomEpsilon. Contours are looked up by kind;
/// landmarks whose anchor contour is absent from the map are rejected.
inline void validate_landmark_set(const LandmarkSet& ls,
                                  const std::map<ContourKind, Contour>& contours) {
    for (const auto& [name, entry] : ls.entries) {
        const ContourKind kind = contour_for_landmark(name);
        auto it = contours.find(kind);
        if (it == contours.end())
            throw InvalidArgumentError("landmark " + to_string(name) +
                                       " refers to absent contour " + to_string(kind));
        const auto& pts = it->second.points;
        if (entry.contour_index >= pts.size())
            throw InvalidArgumentError("landmark " + to_string(name) +
                                       " index out of range");
        if (distance(pts[entry.contour_index], entry.point) > kGeomEpsilon)
            throw InvalidArgumentError("landmark " + to_string(name) +
                                       " point does not match indexed contour point");
    }
}

} // namespace atbqc
