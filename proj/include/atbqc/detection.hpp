#pragma once

/**
 * @file detection.hpp
 * @brief Region-specific error detectors for predicted C1 and C2 contours.
 *
 * Each rule thresholds one per-frame statistic. Statistics are exposed
 * separately from the thresholding so grid search can reuse them.
 */

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "atbqc/correction.hpp"
#include "atbqc/dataset.hpp"
#include "atbqc/flags.hpp"
#include "atbqc/landmarks.hpp"

namespace atbqc {

struct DetectorThresholds {
    /// Flag when the VEL-to-video-mean distance exceeds this.
    double mean_vel_dist = 3.5;
    /// Flag when the VEL-to-subject-reference distance exceeds this.
    double vel_to_c3_dist = 8.0;
    /// Flag when the C2 point count falls below this fraction of the
    /// reference mean count.
    double point_count_fraction = 0.65;
    /// Flag when the LL-TB slope falls below this.
    double ll_tb_slope = 0.7;
    /// Flag when the LL-TB distance falls below this.
    double ll_tb_dist = 8.0;
};

/// Thresholds selected on each of the four historical validation folds,
/// usable as ready-made defaults when no selection run is available.
inline constexpr std::array<DetectorThresholds, 4> kReferenceFoldThresholds = {{
    {3.5, 8.0, 0.65, 0.7, 8.0},
    {4.0, 8.0, 0.65, 0.7, 7.0},
    {4.0, 8.0, 0.65, 0.8, 10.0},
    {4.0, 7.5, 0.65, 1.0, 10.0},
}};

struct SubjectReference {
    std::string subject_id;
    /// Mean nearest pharyngeal-wall point seen from the annotated velum.
    PixelPoint c3_ref_point;
};

// ---------------------------------------------------------------------------
// Per-frame statistics
// ---------------------------------------------------------------------------

struct C1FrameStats {
    std::optional<PixelPoint> vel;
    /// Distance from this frame's VEL to the video-mean VEL; NaN when the
    /// VEL is unresolvable or the video has no resolvable VEL at all.
    double mean_deviation = std::numeric_limits<double>::quiet_NaN();
    /// Distance from this frame's VEL to the subject reference; NaN without
    /// a reference or VEL.
    double c3_distance = std::numeric_limits<double>::quiet_NaN();
};

inline std::vector<C1FrameStats> compute_c1_stats(const VideoSequence& video,
                                                  const std::optional<PixelPoint>& reference,
                                                  const LandmarkConfig& cfg = {}) {
    std::vector<C1FrameStats> stats(video.frames.size());
    PixelPoint sum{0.0, 0.0};
    std::size_t resolved = 0;
    for (std::size_t f = 0; f < video.frames.size(); ++f) {
        auto it = video.frames[f].predicted.find(ContourKind::C1);
        if (it == video.frames[f].predicted.end())
            continue;
        try {
            const DipResult vel = extract_vel(it->second, cfg);
            stats[f].vel = vel.point;
            sum = sum + vel.point;
            ++resolved;
        } catch (const DegenerateContourError&) {
            // Left unresolved; the combined detector flags it.
        }
    }
    if (resolved == 0)
        return stats;
    const PixelPoint mean = sum * (1.0 / static_cast<double>(resolved));
    for (auto& s : stats) {
        if (!s.vel)
            continue;
        s.mean_deviation = distance(*s.vel, mean);
        if (reference)
            s.c3_distance = distance(*s.vel, *reference);
    }
    return stats;
}

struct C2FrameStats {
    std::size_t point_count = 0;
    /// |row(TB)-row(LL)| / max(|col(TB)-col(LL)|, floor); empty when the
    /// tongue-base dip is unresolvable.
    std::optional<double> slope;
    std::optional<double> ll_tb_distance;
    bool tb_unresolvable = false;
};

inline C2FrameStats compute_c2_frame_stats(const FrameRecord& frame,
                                           const LandmarkConfig& cfg = {}) {
    C2FrameStats s;
    auto it = frame.predicted.find(ContourKind::C2);
    if (it == frame.predicted.end()) {
        s.tb_unresolvable = true;
        return s;
    }
    s.point_count = it->second.points.size();
    const LandmarkSet* annotated =
        frame.annotated_landmarks ? &*frame.annotated_landmarks : nullptr;
    try {
        const ResolvedC2 r = resolve_c2_landmarks(it->second, annotated, cfg);
        if (!r.tb) {
            s.tb_unresolvable = true;
            return s;
        }
        const double dr = std::abs(r.tb->point.row - r.ll.row);
        const double dc = std::abs(r.tb->point.col - r.ll.col);
        s.slope = dr / std::max(dc, kSlopeDenominatorFloor);
        s.ll_tb_distance = distance(r.tb->point, r.ll);
    } catch (const Error&) {
        s.tb_unresolvable = true;
    }
    return s;
}

inline std::vector<C2FrameStats> compute_c2_stats(const VideoSequence& video,
                                                  const LandmarkConfig& cfg = {}) {
    std::vector<C2FrameStats> stats;
    stats.reserve(video.frames.size());
    for (const auto& frame : video.frames)
        stats.push_back(compute_c2_frame_stats(frame, cfg));
    return stats;
}

// ---------------------------------------------------------------------------
// Individual rules
// ---------------------------------------------------------------------------

/// Flags frames whose VEL deviates from the video-mean VEL by more than
/// threshold. A single-frame video yields no flags (the mean is the frame
/// itself); callers should surface a warning for that case.
inline std::vector<bool> detect_c1_mean_velum(const VideoSequence& video, double threshold,
                                              const LandmarkConfig& cfg = {}) {
    const auto stats = compute_c1_stats(video, std::nullopt, cfg);
    std::vector<bool> flags(stats.size(), false);
    if (video.frames.size() < 2)
        return flags;
    for (std::size_t f = 0; f < stats.size(); ++f)
        flags[f] = std::isfinite(stats[f].mean_deviation) && stats[f].mean_deviation > threshold;
    return flags;
}

/// Flags frames whose VEL sits further than threshold from the subject's
/// pharyngeal-wall reference point.
inline std::vector<bool> detect_c1_vel_to_c3(const VideoSequence& video,
                                             const SubjectReference& reference,
                                             double threshold,
                                             const LandmarkConfig& cfg = {}) {
    const auto stats = compute_c1_stats(video, reference.c3_ref_point, cfg);
    std::vector<bool> flags(stats.size(), false);
    for (std::size_t f = 0; f < stats.size(); ++f)
        flags[f] = std::isfinite(stats[f].c3_distance) && stats[f].c3_distance > threshold;
    return flags;
}

/// Flags frames whose predicted C2 has fewer than fraction * reference_mean
/// points. reference_mean is the mean count over a clean reference set.
inline std::vector<bool> detect_c2_point_count(const VideoSequence& video,
                                               double reference_mean, double fraction) {
    if (!(reference_mean > 0.0))
        throw ConfigError("detect_c2_point_count: reference mean must be positive");
    std::vector<bool> flags(video.frames.size(), false);
    for (std::size_t f = 0; f < video.frames.size(); ++f) {
        auto it = video.frames[f].predicted.find(ContourKind::C2);
        const std::size_t count = it == video.frames[f].predicted.end()
                                      ? 0
                                      : it->second.points.size();
        flags[f] = static_cast<double>(count) < fraction * reference_mean;
    }
    return flags;
}

/// Flags a frame whose LL-TB slope is below threshold.
inline bool detect_c2_slope(const FrameRecord& frame, double threshold,
                            const LandmarkConfig& cfg = {}) {
    const C2FrameStats s = compute_c2_frame_stats(frame, cfg);
    return s.slope.has_value() && *s.slope < threshold;
}

/// Flags a frame whose LL-TB distance is below threshold.
inline bool detect_c2_distance(const FrameRecord& frame, double threshold,
                               const LandmarkConfig& cfg = {}) {
    const C2FrameStats s = compute_c2_frame_stats(frame, cfg);
    return s.ll_tb_distance.has_value() && *s.ll_tb_distance < threshold;
}

// ---------------------------------------------------------------------------
// Combined detection
// ---------------------------------------------------------------------------

/**
 * ORs all rules over one video and records which rules fired per frame.
 * C2 kinds: the point-count rule marks a frame-level error and dominates;
 * slope, distance and an unresolvable tongue base mark tongue-base errors.
 * C1 kinds are left unset here; fill_c1_kinds assigns them from the
 * interpolation-based classification. Without a subject reference the
 * VEL-to-C3 rule is skipped.
 */
inline std::vector<ErrorFlags> detect_combined(const VideoSequence& video,
                                               const std::optional<SubjectReference>& reference,
                                               const DetectorThresholds& t,
                                               double c2_reference_mean_count,
                                               const LandmarkConfig& cfg = {}) {
    const std::optional<PixelPoint> ref_point =
        reference ? std::optional<PixelPoint>(reference->c3_ref_point) : std::nullopt;
    const auto c1 = compute_c1_stats(video, ref_point, cfg);
    const auto c2 = compute_c2_stats(video, cfg);
    const auto count_flags =
        detect_c2_point_count(video, c2_reference_mean_count, t.point_count_fraction);

    std::vector<ErrorFlags> flags(video.frames.size());
    const bool single_frame = video.frames.size() < 2;
    for (std::size_t f = 0; f < flags.size(); ++f) {
        ErrorFlags& out = flags[f];
        if (!single_frame && std::isfinite(c1[f].mean_deviation) &&
            c1[f].mean_deviation > t.mean_vel_dist) {
            out.c1_error = true;
            out.triggering_rules.insert(rules::kC1MeanVelum);
        }
        if (std::isfinite(c1[f].c3_distance) && c1[f].c3_distance > t.vel_to_c3_dist) {
            out.c1_error = true;
            out.triggering_rules.insert(rules::kC1VelToC3);
        }
        if (!c1[f].vel && video.frames[f].predicted.count(ContourKind::C1)) {
            out.c1_error = true;
            out.triggering_rules.insert(rules::kC1VelUnresolvable);
        }

        if (count_flags[f]) {
            out.c2_error = true;
            out.c2_kind = C2ErrorKind::Frame;
            out.triggering_rules.insert(rules::kC2PointCount);
        }
        if (c2[f].slope && *c2[f].slope < t.ll_tb_slope) {
            out.c2_error = true;
            out.triggering_rules.insert(rules::kC2Slope);
        }
        if (c2[f].ll_tb_distance && *c2[f].ll_tb_distance < t.ll_tb_dist) {
            out.c2_error = true;
            out.triggering_rules.insert(rules::kC2Distance);
        }
        if (c2[f].tb_unresolvable && video.frames[f].predicted.count(ContourKind::C2)) {
            out.c2_error = true;
            out.triggering_rules.insert(rules::kC2TbUnresolvable);
        }
        if (out.c2_error && !out.c2_kind)
            out.c2_kind = C2ErrorKind::Tb;
    }
    return flags;
}

/**
 * Full per-video detection: combined rules followed by C1 kind assignment,
 * so every returned flag satisfies validate_flags.
 */
inline std::vector<ErrorFlags> detect_video(const VideoSequence& video,
                                            const std::optional<SubjectReference>& reference,
                                            const DetectorThresholds& thresholds,
                                            double c2_reference_mean_count,
                                            const LandmarkConfig& lcfg = {},
                                            const CorrectionConfig& ccfg = {}) {
    auto flags = detect_combined(video, reference, thresholds, c2_reference_mean_count, lcfg);
    fill_c1_kinds(video, flags, ccfg);
    return flags;
}

// ---------------------------------------------------------------------------
// Subject reference
// ---------------------------------------------------------------------------

/**
 * Mean over annotated frames of the annotated-C3 point nearest to the
 * annotated VEL. The VEL comes from the frame's annotated landmark set, or
 * failing that from extraction on the annotated C1. Frames missing both an
 * annotated C3 and a resolvable VEL are skipped; zero usable frames is a
 * configuration error.
 */
inline PixelPoint compute_subject_reference(const std::vector<const FrameRecord*>& frames,
                                            const LandmarkConfig& cfg = {}) {
    PixelPoint sum{0.0, 0.0};
    std::size_t used = 0;
    for (const FrameRecord* frame : frames) {
        auto c3 = frame->annotated.find(ContourKind::C3);
        if (c3 == frame->annotated.end())
            continue;
        std::optional<PixelPoint> vel;
        if (frame->annotated_landmarks) {
            if (const LandmarkEntry* e = frame->annotated_landmarks->find(LandmarkName::VEL))
                vel = e->point;
        }
        if (!vel) {
            auto c1 = frame->annotated.find(ContourKind::C1);
            if (c1 == frame->annotated.end())
                continue;
            try {
                vel = extract_vel(c1->second, cfg).point;
            } catch (const DegenerateContourError&) {
                continue;
            }
        }
        sum = sum + c3->second.points[nearest_point_index(c3->second, *vel)];
        ++used;
    }
    if (used == 0)
        throw ConfigError("compute_subject_reference: no annotated frame with C3 and VEL");
    return sum * (1.0 / static_cast<double>(used));
}

} // namespace atbqc
