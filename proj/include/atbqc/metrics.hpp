#pragma once

/**
 * @file metrics.hpp
 * @brief Contour-quality metrics: normalized DTW, region-restricted DTW
 *        variants and landmark distances.
 */

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "atbqc/geometry.hpp"
#include "atbqc/landmarks.hpp"

namespace atbqc {

enum class MetricName { Dtw, Evel, VelRdtw, Etb, TbRdtw };

inline std::string to_string(MetricName m) {
    switch (m) {
        case MetricName::Dtw: return "DTW";
        case MetricName::Evel: return "EVEL";
        case MetricName::VelRdtw: return "VELrDTW";
        case MetricName::Etb: return "ETB";
        case MetricName::TbRdtw: return "TBrDTW";
    }
    return "?";
}

/**
 * Normalized dynamic time warping distance.
 *
 * Alignment paths run from (0,0) to (n-1,m-1) with steps (1,0), (0,1) and
 * (1,1); every visited cell matches one point pair at Euclidean cost. The
 * returned value is the minimum over all such paths of total cost divided by
 * path length (the number of matched pairs), computed exactly by a DP
 * stratified over path length. Costs accumulate in path order, so the result
 * agrees bit-for-bit with exhaustive path enumeration.
 */
inline double dtw_distance(std::span<const PixelPoint> a, std::span<const PixelPoint> b) {
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    if (n == 0 || m == 0)
        throw EmptyInputError("dtw_distance: empty sequence");

    std::vector<double> cost(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            cost[i * m + j] = distance(a[i], b[j]);

    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(n * m, kInf);
    std::vector<double> cur(n * m, kInf);
    prev[0] = cost[0];

    double best = prev[n * m - 1];  // covers n == m == 1 at length 1
    const std::size_t max_len = n + m - 1;
    for (std::size_t len = 2; len <= max_len; ++len) {
        std::fill(cur.begin(), cur.end(), kInf);
        // A cell (i,j) lies on a length-len path only if
        // max(i,j)+1 <= len <= i+j+1.
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                if (i + j + 1 < len || std::max(i, j) + 1 > len)
                    continue;
                double pred = kInf;
                if (i > 0) pred = std::min(pred, prev[(i - 1) * m + j]);
                if (j > 0) pred = std::min(pred, prev[i * m + (j - 1)]);
                if (i > 0 && j > 0) pred = std::min(pred, prev[(i - 1) * m + (j - 1)]);
                if (pred < kInf)
                    cur[i * m + j] = pred + cost[i * m + j];
            }
        }
        const double total = cur[n * m - 1];
        if (total < kInf) {
            const double ratio = total / static_cast<double>(len);
            if (ratio < best)
                best = ratio;
        }
        std::swap(prev, cur);
    }
    return best;
}

inline double dtw_distance(const Contour& a, const Contour& b) {
    return dtw_distance(std::span<const PixelPoint>(a.points),
                        std::span<const PixelPoint>(b.points));
}

/// Euclidean distance between two landmark points.
inline double landmark_euclidean(const PixelPoint& predicted, const PixelPoint& annotated) {
    return distance(predicted, annotated);
}

/**
 * Velum-region DTW: the trailing ceil(fraction*N) points of each C1, taken
 * from its own pharyngeal-wall end, aligned by dtw_distance. fraction lies in
 * (0, 1]; 1.0 degenerates to global DTW.
 */
inline double vel_rdtw(const Contour& pred_c1, const Contour& gt_c1, double fraction = 0.30) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw InvalidArgumentError("vel_rdtw: fraction must lie in (0, 1]");
    const auto tail = [fraction](const Contour& c) {
        const std::size_t n = c.points.size();
        const auto take =
            static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
        return std::span<const PixelPoint>(c.points).subspan(n - take);
    };
    return dtw_distance(tail(pred_c1), tail(gt_c1));
}

/**
 * Tongue-base-region DTW over the inclusive index range [LL, uppermost
 * tongue point] of each C2, resolved independently per contour (annotated LL
 * preferred, estimation otherwise). Returns nullopt when the region is
 * unresolvable on either side; callers exclude such frames from aggregates
 * and count them.
 */
inline std::optional<double> tb_rdtw(const Contour& pred_c2, const Contour& gt_c2,
                                     const LandmarkSet* pred_annotated,
                                     const LandmarkSet* gt_annotated,
                                     const LandmarkConfig& cfg = {}) {
    const auto slice = [&cfg](const Contour& c,
                              const LandmarkSet* annotated)
        -> std::optional<std::span<const PixelPoint>> {
        const ResolvedC2 r = resolve_c2_landmarks(c, annotated, cfg);
        if (!r.uppermost_index)
            return std::nullopt;
        return std::span<const PixelPoint>(c.points)
            .subspan(r.ll_index, *r.uppermost_index - r.ll_index + 1);
    };
    const auto p = slice(pred_c2, pred_annotated);
    const auto g = slice(gt_c2, gt_annotated);
    if (!p || !g)
        return std::nullopt;
    return dtw_distance(*p, *g);
}

} // namespace atbqc
