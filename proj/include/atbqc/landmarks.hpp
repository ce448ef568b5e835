#pragma once

/**
 * @file landmarks.hpp
 * @brief Landmark extraction from predicted contours.
 *
 * All extractors work on row maxima/minima of index windows. Row increases
 * downward, so the velum tip and the tongue-base groove are row maxima.
 */

#include <cmath>
#include <cstddef>
#include <optional>

#include "atbqc/dataset.hpp"
#include "atbqc/geometry.hpp"

namespace atbqc {

struct LandmarkConfig {
    /// Trailing fraction of C1 searched for the velum dip.
    double velum_region_fraction = 0.30;
    /// Leading fraction of C2 searched for the lower lip.
    double ll_search_fraction = 0.25;
};

inline void validate_landmark_config(const LandmarkConfig& cfg) {
    if (!(cfg.velum_region_fraction > 0.0) || !(cfg.velum_region_fraction < 1.0))
        throw ConfigError("velum_region_fraction must lie in (0, 1)");
    if (!(cfg.ll_search_fraction > 0.0) || !(cfg.ll_search_fraction < 1.0))
        throw ConfigError("ll_search_fraction must lie in (0, 1)");
}

struct DipResult {
    std::size_t index = 0;
    PixelPoint point;
};

/// Maximal-row point over [start, end); ties go to the smallest index.
inline DipResult find_dip(const Contour& c, std::size_t start, std::size_t end) {
    if (start >= end || end > c.points.size())
        throw InvalidArgumentError("find_dip: empty or out-of-bounds range");
    std::size_t best = start;
    for (std::size_t i = start + 1; i < end; ++i)
        if (c.points[i].row > c.points[best].row)
            best = i;
    return {best, c.points[best]};
}

/// Velum tip: row maximum over the last ceil(fraction*N) indices of C1.
inline DipResult extract_vel(const Contour& c1, const LandmarkConfig& cfg = {}) {
    validate_landmark_config(cfg);
    const std::size_t n = c1.points.size();
    if (n < 4)
        throw DegenerateContourError("extract_vel: contour has fewer than 4 points");
    const auto window =
        static_cast<std::size_t>(std::ceil(cfg.velum_region_fraction * static_cast<double>(n)));
    return find_dip(c1, n - window, n);
}

/// Lower lip: row minimum over the first ceil(fraction*N) indices of C2;
/// ties go to the smallest index.
inline DipResult extract_ll(const Contour& c2, const LandmarkConfig& cfg = {}) {
    validate_landmark_config(cfg);
    const std::size_t n = c2.points.size();
    if (n < 4)
        throw DegenerateContourError("extract_ll: contour has fewer than 4 points");
    const auto window =
        static_cast<std::size_t>(std::ceil(cfg.ll_search_fraction * static_cast<double>(n)));
    std::size_t best = 0;
    for (std::size_t i = 1; i < window; ++i)
        if (c2.points[i].row < c2.points[best].row)
            best = i;
    return {best, c2.points[best]};
}

/// Row minimum at indices strictly greater than ll_index (smallest index on
/// ties). Empty when ll_index is the last point.
inline std::optional<std::size_t> uppermost_tongue_index(const Contour& c2,
                                                         std::size_t ll_index) {
    if (ll_index >= c2.points.size())
        throw InvalidArgumentError("uppermost_tongue_index: ll_index out of range");
    if (ll_index + 1 >= c2.points.size())
        return std::nullopt;
    std::size_t best = ll_index + 1;
    for (std::size_t i = ll_index + 2; i < c2.points.size(); ++i)
        if (c2.points[i].row < c2.points[best].row)
            best = i;
    return best;
}

/// Tongue base: dip strictly between the lower lip and the uppermost tongue
/// point. Returns nullopt (a no-dip outcome, not an error) when that interior
/// range is empty; detection consumes this as a tongue-base error signal.
inline std::optional<DipResult> extract_tb(const Contour& c2, std::size_t ll_index,
                                           const LandmarkConfig& cfg = {}) {
    validate_landmark_config(cfg);
    if (c2.points.size() < 4)
        throw DegenerateContourError("extract_tb: contour has fewer than 4 points");
    const auto upper = uppermost_tongue_index(c2, ll_index);
    if (!upper || *upper <= ll_index + 1)
        return std::nullopt;
    return find_dip(c2, ll_index + 1, *upper);
}

/**
 * Lower-lip and tongue-base geometry resolved on one C2 contour.
 *
 * When annotated landmarks accompany the frame, the annotated LL point takes
 * precedence and its index on this contour is the nearest contour point (the
 * annotated index addresses the annotated contour, not this one). Otherwise
 * the LL estimator runs. TB and the uppermost tongue point always come from
 * extraction on this contour.
 */
struct ResolvedC2 {
    PixelPoint ll;
    std::size_t ll_index = 0;
    Provenance ll_provenance = Provenance::Estimated;
    std::optional<std::size_t> uppermost_index;
    std::optional<DipResult> tb;
};

inline ResolvedC2 resolve_c2_landmarks(const Contour& c2, const LandmarkSet* annotated,
                                       const LandmarkConfig& cfg = {}) {
    ResolvedC2 out;
    const LandmarkEntry* ll = annotated ? annotated->find(LandmarkName::LL) : nullptr;
    if (ll) {
        out.ll = ll->point;
        out.ll_index = nearest_point_index(c2, ll->point);
        out.ll_provenance = Provenance::Annotated;
    } else {
        const DipResult est = extract_ll(c2, cfg);
        out.ll = est.point;
        out.ll_index = est.index;
        out.ll_provenance = Provenance::Estimated;
    }
    out.uppermost_index = uppermost_tongue_index(c2, out.ll_index);
    out.tb = extract_tb(c2, out.ll_index, cfg);
    return out;
}

} // namespace atbqc
