#pragma once

/**
 * @file correction.hpp
 * @brief Frame correction: temporal interpolation, incomplete-C1 completion,
 *        Otsu-based tongue-base relocation and local contour warping.
 */

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "atbqc/dataset.hpp"
#include "atbqc/flags.hpp"
#include "atbqc/geometry.hpp"
#include "atbqc/landmarks.hpp"

namespace atbqc {

struct CorrectionConfig {
    int tb_patch_rows = 15;
    int tb_patch_cols = 20;
    int warp_window = 10;
    /// Arc-length ratio below which a flagged C1 counts as incomplete.
    double incomplete_length_fraction = 0.8;
};

inline void validate_correction_config(const CorrectionConfig& cfg) {
    if (cfg.tb_patch_rows < 2 || cfg.tb_patch_cols < 2)
        throw ConfigError("tb patch dimensions must be at least 2");
    if (cfg.warp_window < 1)
        throw ConfigError("warp_window must be at least 1");
    if (!(cfg.incomplete_length_fraction > 0.0) || !(cfg.incomplete_length_fraction < 1.0))
        throw ConfigError("incomplete_length_fraction must lie in (0, 1)");
}

/// Max mean prediction-to-interpolation distance for the incomplete class.
inline constexpr double kPrefixAgreementPx = 2.0;

/// Denominator floor for the LL-TB slope.
inline constexpr double kSlopeDenominatorFloor = 1e-9;

// ---------------------------------------------------------------------------
// Temporal interpolation
// ---------------------------------------------------------------------------

/**
 * Linear temporal interpolation of the predicted contour of one kind at
 * frame f from the nearest unflagged anchor frames p < f < q. Both anchors
 * are resampled to the larger of their point counts; the output point i is
 * ((q-f)*prev_i + (f-p)*next_i) / (q-p). With an anchor on one side only the
 * anchor contour is returned unchanged. flagged[i] marks frames unusable as
 * anchors; a video with no unflagged frame is uncorrectable.
 */
inline Contour interpolate_contour(const VideoSequence& video, std::size_t frame,
                                   ContourKind kind, const std::vector<bool>& flagged) {
    if (frame >= video.frames.size() || flagged.size() != video.frames.size())
        throw InvalidArgumentError("interpolate_contour: frame/flag size mismatch");

    const auto contour_at = [&](std::size_t i) -> const Contour& {
        auto it = video.frames[i].predicted.find(kind);
        if (it == video.frames[i].predicted.end())
            throw InvalidArgumentError("interpolate_contour: anchor frame lacks contour " +
                                       to_string(kind));
        return it->second;
    };

    std::optional<std::size_t> p, q;
    for (std::size_t i = frame; i-- > 0;) {
        if (!flagged[i]) { p = i; break; }
    }
    for (std::size_t i = frame + 1; i < video.frames.size(); ++i) {
        if (!flagged[i]) { q = i; break; }
    }
    if (!p && !q)
        throw UncorrectableVideoError("video " + video.video_id +
                                      ": no unflagged anchor frame for " + to_string(kind));
    if (!p || !q)
        return contour_at(p ? *p : *q);

    const Contour& prev = contour_at(*p);
    const Contour& next = contour_at(*q);
    const std::size_t n = std::max(prev.points.size(), next.points.size());
    const Contour rp = resample_contour(prev, n);
    const Contour rq = resample_contour(next, n);

    const double fp = static_cast<double>(frame) - static_cast<double>(*p);
    const double qf = static_cast<double>(*q) - static_cast<double>(frame);
    const double qp = static_cast<double>(*q) - static_cast<double>(*p);

    Contour out;
    out.kind = rp.kind;
    out.closed = rp.closed;
    out.points.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.points[i].row = (qf * rp.points[i].row + fp * rq.points[i].row) / qp;
        out.points[i].col = (qf * rp.points[i].col + fp * rq.points[i].col) / qp;
    }
    return out;
}

// ---------------------------------------------------------------------------
// C1 classification and completion
// ---------------------------------------------------------------------------

/**
 * A flagged C1 is incomplete when it is substantially shorter than its
 * temporal interpolation (arc ratio below incomplete_length_fraction) while
 * still tracking it closely (mean distance from each predicted point to its
 * nearest interpolated point under kPrefixAgreementPx). Anything else is a
 * frame-level error.
 */
inline C1ErrorKind classify_c1_error(const Contour& pred, const Contour& interpolated,
                                     const CorrectionConfig& cfg = {}) {
    const double arc_pred = arc_length(pred);
    const double arc_interp = arc_length(interpolated);
    if (arc_pred >= cfg.incomplete_length_fraction * arc_interp)
        return C1ErrorKind::Frame;
    double sum = 0.0;
    for (const auto& p : pred.points)
        sum += distance(p, interpolated.points[nearest_point_index(interpolated, p)]);
    const double mean = sum / static_cast<double>(pred.points.size());
    return mean < kPrefixAgreementPx ? C1ErrorKind::Incomplete : C1ErrorKind::Frame;
}

/**
 * Completes an incomplete C1 by appending the interpolated tail. j is the
 * interpolated index nearest to the last predicted point; points j+1..end of
 * the interpolation are appended, leaving the existing prefix bit-identical.
 * When j is already the last interpolated index the input is returned
 * unchanged.
 */
inline Contour complete_c1(const Contour& pred, const Contour& interpolated) {
    const std::size_t j = nearest_point_index(interpolated, pred.points.back());
    Contour out = pred;
    for (std::size_t i = j + 1; i < interpolated.points.size(); ++i) {
        if (interpolated.points[i] == out.points.back())
            continue;
        out.points.push_back(interpolated.points[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Otsu thresholding
// ---------------------------------------------------------------------------

struct OtsuResult {
    int level = 0;
    /// Set when the histogram occupies a single intensity bin.
    bool degenerate = false;
};

/// Histogram totals above this would overflow the exact 128-bit criterion
/// comparison. Patch histograms are far below it.
inline constexpr std::uint64_t kMaxOtsuTotal = 700000;

namespace detail {

// Between-class variance ordering without floating point: for split k the
// criterion is A^2 / B with A = S0*N - S*N0 and B = N0*(N - N0); (N^2 scales
// all splits equally). Splits leaving a class empty score zero.
struct OtsuScore {
    unsigned __int128 a2 = 0;  // A^2
    std::uint64_t b = 0;       // B, zero marks an empty-class split

    bool better_than(const OtsuScore& other) const {
        if (b == 0) return false;
        if (other.b == 0) return true;
        return a2 * other.b > other.a2 * b;
    }
};

inline OtsuScore otsu_score(std::uint64_t n0, std::uint64_t s0, std::uint64_t n,
                            std::uint64_t s) {
    OtsuScore sc;
    if (n0 == 0 || n0 == n)
        return sc;
    const auto lhs = static_cast<__int128>(s0) * static_cast<__int128>(n);
    const auto rhs = static_cast<__int128>(s) * static_cast<__int128>(n0);
    const __int128 a = lhs > rhs ? lhs - rhs : rhs - lhs;
    sc.a2 = static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(a);
    sc.b = n0 * (n - n0);
    return sc;
}

} // namespace detail

/**
 * Otsu's threshold over a 256-bin intensity histogram: the level k maximizing
 * the between-class variance w0*w1*(mu0-mu1)^2, ties resolved to the smallest
 * k. Class 0 is every intensity <= k. A histogram occupying one bin returns
 * that bin with the degenerate marker. Comparisons are exact, so the selected
 * level is identical across algebraically equivalent implementations.
 */
inline OtsuResult otsu_threshold(const std::array<std::uint64_t, 256>& histogram) {
    std::uint64_t n = 0;
    std::uint64_t s = 0;
    int occupied = 0;
    int sole = 0;
    for (int k = 0; k < 256; ++k) {
        if (histogram[static_cast<std::size_t>(k)] > 0) {
            ++occupied;
            sole = k;
        }
        n += histogram[static_cast<std::size_t>(k)];
        s += histogram[static_cast<std::size_t>(k)] * static_cast<std::uint64_t>(k);
    }
    if (n == 0)
        throw EmptyInputError("otsu_threshold: empty histogram");
    if (n > kMaxOtsuTotal)
        throw InvalidArgumentError("otsu_threshold: histogram total exceeds exact-comparison bound");
    if (occupied == 1)
        return {sole, true};

    int best_k = 0;
    detail::OtsuScore best;
    std::uint64_t n0 = 0;
    std::uint64_t s0 = 0;
    for (int k = 0; k < 256; ++k) {
        n0 += histogram[static_cast<std::size_t>(k)];
        s0 += histogram[static_cast<std::size_t>(k)] * static_cast<std::uint64_t>(k);
        const detail::OtsuScore sc = detail::otsu_score(n0, s0, n, s);
        if (sc.better_than(best)) {
            best = sc;
            best_k = k;
        }
    }
    return {best_k, false};
}

// ---------------------------------------------------------------------------
// Tongue-base relocation and warping
// ---------------------------------------------------------------------------

struct TbCorrection {
    PixelPoint point;
    bool corrected = false;
};

/**
 * Relocates the tongue base inside a tb_patch_rows x tb_patch_cols patch
 * centered at the rounded predicted TB (clipped at frame borders). The patch
 * histogram is Otsu-thresholded; among class-0 (air) pixels whose centers lie
 * inside the closed C2 the lowest one wins (max row, then smallest col). With
 * a degenerate patch or no candidate the prediction is kept and corrected
 * stays false.
 */
inline TbCorrection correct_tb(const Raster& raster, const PixelPoint& pred_tb,
                               const Contour& c2, const CorrectionConfig& cfg = {}) {
    validate_correction_config(cfg);
    const int center_r = static_cast<int>(std::lround(pred_tb.row));
    const int center_c = static_cast<int>(std::lround(pred_tb.col));
    // The ideal patch shrinks at frame borders; it is never shifted.
    const int ideal_r0 = center_r - (cfg.tb_patch_rows - 1) / 2;
    const int ideal_c0 = center_c - (cfg.tb_patch_cols - 1) / 2;
    const int r0 = std::max(0, ideal_r0);
    const int r1 = std::min(raster.height - 1, ideal_r0 + cfg.tb_patch_rows - 1);
    const int c0 = std::max(0, ideal_c0);
    const int c1 = std::min(raster.width - 1, ideal_c0 + cfg.tb_patch_cols - 1);
    if (r0 > r1 || c0 > c1)
        return {pred_tb, false};

    std::array<std::uint64_t, 256> histogram{};
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c)
            ++histogram[raster.at(r, c)];

    const OtsuResult otsu = otsu_threshold(histogram);
    if (otsu.degenerate)
        return {pred_tb, false};

    bool found = false;
    int best_r = 0;
    int best_c = 0;
    for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
            if (raster.at(r, c) > otsu.level)
                continue;
            const PixelPoint center{static_cast<double>(r), static_cast<double>(c)};
            if (!point_in_closed_contour(c2, center))
                continue;
            if (!found || r > best_r || (r == best_r && c < best_c)) {
                found = true;
                best_r = r;
                best_c = c;
            }
        }
    }
    if (!found)
        return {pred_tb, false};
    return {{static_cast<double>(best_r), static_cast<double>(best_c)}, true};
}

/**
 * Moves the point at tb_index exactly to new_tb and drags neighbours within
 * warp_window index steps along the same offset scaled by 1 - k/(window+1).
 * Indices beyond the window, or past the contour ends, are untouched; there
 * is no wraparound.
 */
inline Contour warp_contour(const Contour& c2, std::size_t tb_index, const PixelPoint& new_tb,
                            int window) {
    if (tb_index >= c2.points.size())
        throw InvalidArgumentError("warp_contour: tb_index out of range");
    if (window < 0)
        throw InvalidArgumentError("warp_contour: window must be non-negative");

    const PixelPoint d = new_tb - c2.points[tb_index];
    Contour out = c2;
    out.points[tb_index] = new_tb;
    for (int k = 1; k <= window; ++k) {
        const double factor =
            1.0 - static_cast<double>(k) / static_cast<double>(window + 1);
        const auto lo = static_cast<std::ptrdiff_t>(tb_index) - k;
        const auto hi = static_cast<std::size_t>(tb_index) + static_cast<std::size_t>(k);
        if (lo >= 0)
            out.points[static_cast<std::size_t>(lo)] =
                c2.points[static_cast<std::size_t>(lo)] + d * factor;
        if (hi < c2.points.size())
            out.points[hi] = c2.points[hi] + d * factor;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Whole-video correction
// ---------------------------------------------------------------------------

struct CorrectionLogEntry {
    std::string video_id;
    int frame_index = 0;
    std::string contour;
    std::string action;
    std::string detail;
};

struct VideoCorrection {
    VideoSequence video;
    std::vector<ErrorFlags> flags;
    std::vector<CorrectionLogEntry> log;
};

namespace detail {

inline std::vector<bool> c1_flag_vector(const std::vector<ErrorFlags>& flags) {
    std::vector<bool> v(flags.size());
    for (std::size_t i = 0; i < flags.size(); ++i) v[i] = flags[i].c1_error;
    return v;
}

inline std::vector<bool> c2_flag_vector(const std::vector<ErrorFlags>& flags) {
    std::vector<bool> v(flags.size());
    for (std::size_t i = 0; i < flags.size(); ++i) v[i] = flags[i].c2_error;
    return v;
}

inline std::string format_point(const PixelPoint& p) {
    return "(" + std::to_string(p.row) + "," + std::to_string(p.col) + ")";
}

} // namespace detail

/**
 * Assigns the incomplete/frame kind to every C1-flagged frame that lacks one,
 * by classifying the prediction against its temporal interpolation. When the
 * video has no unflagged C1 anchor at all the kind falls back to frame.
 */
inline void fill_c1_kinds(const VideoSequence& video, std::vector<ErrorFlags>& flags,
                          const CorrectionConfig& cfg = {}) {
    const std::vector<bool> flagged = detail::c1_flag_vector(flags);
    for (std::size_t f = 0; f < flags.size(); ++f) {
        if (!flags[f].c1_error || flags[f].c1_kind)
            continue;
        auto it = video.frames[f].predicted.find(ContourKind::C1);
        if (it == video.frames[f].predicted.end()) {
            flags[f].c1_kind = C1ErrorKind::Frame;
            continue;
        }
        try {
            const Contour interp = interpolate_contour(video, f, ContourKind::C1, flagged);
            flags[f].c1_kind = classify_c1_error(it->second, interp, cfg);
        } catch (const UncorrectableVideoError&) {
            flags[f].c1_kind = C1ErrorKind::Frame;
        }
    }
}

/**
 * Applies the full correction pass to one video:
 *   1. C1-flagged frames are interpolated; incomplete ones keep their prefix
 *      and gain the interpolated tail, frame-kind ones are replaced.
 *   2. C2 frame-kind frames are replaced by their interpolation.
 *   3. Every C2-flagged frame (including ones interpolated in step 2) gets
 *      the Otsu tongue-base relocation followed by the local warp.
 * Frames with no flags are left bit-identical. Interpolation anchors are the
 * frames unflagged in the input. Every action, skip and fallback is logged.
 */
inline VideoCorrection correct_video(const VideoSequence& video,
                                     const std::vector<ErrorFlags>& flags,
                                     const CorrectionConfig& cfg = {},
                                     const LandmarkConfig& lcfg = {}) {
    if (flags.size() != video.frames.size())
        throw InvalidArgumentError("correct_video: flag count does not match frame count");
    validate_correction_config(cfg);

    VideoCorrection out;
    out.video = video;
    out.flags = flags;
    fill_c1_kinds(video, out.flags, cfg);

    const std::vector<bool> c1_flagged = detail::c1_flag_vector(out.flags);
    const std::vector<bool> c2_flagged = detail::c2_flag_vector(out.flags);
    auto log = [&](std::size_t f, const char* contour, std::string action,
                   std::string detail = {}) {
        out.log.push_back({video.video_id, video.frames[f].frame_index, contour,
                           std::move(action), std::move(detail)});
    };

    for (std::size_t f = 0; f < out.flags.size(); ++f) {
        if (!out.flags[f].c1_error)
            continue;
        auto it = out.video.frames[f].predicted.find(ContourKind::C1);
        if (it == out.video.frames[f].predicted.end()) {
            log(f, "C1", "skip-missing-contour");
            continue;
        }
        try {
            const Contour interp = interpolate_contour(video, f, ContourKind::C1, c1_flagged);
            if (out.flags[f].c1_kind == C1ErrorKind::Incomplete) {
                Contour completed = complete_c1(it->second, interp);
                if (completed.points.size() == it->second.points.size()) {
                    log(f, "C1", "complete-noop", "tail already covered");
                } else {
                    const std::size_t added = completed.points.size() - it->second.points.size();
                    it->second = std::move(completed);
                    log(f, "C1", "complete", std::to_string(added) + " points appended");
                }
            } else {
                it->second = interp;
                log(f, "C1", "interpolate");
            }
        } catch (const UncorrectableVideoError&) {
            log(f, "C1", "uncorrectable", "no unflagged anchor");
        }
    }

    for (std::size_t f = 0; f < out.flags.size(); ++f) {
        if (!out.flags[f].c2_error || out.flags[f].c2_kind != C2ErrorKind::Frame)
            continue;
        auto it = out.video.frames[f].predicted.find(ContourKind::C2);
        if (it == out.video.frames[f].predicted.end()) {
            log(f, "C2", "skip-missing-contour");
            continue;
        }
        try {
            it->second = interpolate_contour(video, f, ContourKind::C2, c2_flagged);
            log(f, "C2", "interpolate");
        } catch (const UncorrectableVideoError&) {
            log(f, "C2", "uncorrectable", "no unflagged anchor");
        }
    }

    for (std::size_t f = 0; f < out.flags.size(); ++f) {
        if (!out.flags[f].c2_error)
            continue;
        auto& frame = out.video.frames[f];
        auto it = frame.predicted.find(ContourKind::C2);
        if (it == frame.predicted.end())
            continue;
        if (!frame.raster) {
            log(f, "C2", "skip-no-raster");
            continue;
        }
        const LandmarkSet* annotated =
            frame.annotated_landmarks ? &*frame.annotated_landmarks : nullptr;
        ResolvedC2 resolved;
        try {
            resolved = resolve_c2_landmarks(it->second, annotated, lcfg);
        } catch (const Error&) {
            log(f, "C2", "tb-unresolvable", "landmark resolution failed");
            continue;
        }
        std::size_t prior_index;
        PixelPoint prior_point;
        if (resolved.tb) {
            prior_index = resolved.tb->index;
            prior_point = resolved.tb->point;
        } else if (resolved.uppermost_index) {
            // Dip missing on a flagged frame; aim at the middle of the
            // LL-to-uppermost stretch instead.
            prior_index = (resolved.ll_index + *resolved.uppermost_index) / 2;
            prior_point = it->second.points[prior_index];
        } else {
            log(f, "C2", "tb-unresolvable", "no tongue region");
            continue;
        }
        const TbCorrection tc = correct_tb(*frame.raster, prior_point, it->second, cfg);
        if (!tc.corrected) {
            log(f, "C2", "tb-uncorrected", "no air pixel inside contour");
            continue;
        }
        it->second = warp_contour(it->second, prior_index, tc.point, cfg.warp_window);
        log(f, "C2", "tb-correct",
            detail::format_point(prior_point) + " -> " + detail::format_point(tc.point));
    }

    return out;
}

} // namespace atbqc
