#pragma once

/**
 * @file synthetic.hpp
 * @brief Synthetic vocal-tract benchmark generator.
 *
 * Each video animates one subject's mid-sagittal template: an upper contour
 * from the upper lip across the hard palate down to the velum tip (C1), a
 * lower contour from the jawline over the lower lip, through the lip-tongue
 * groove and across the tongue dorsum to the epiglottis region (C2), and a
 * near-vertical pharyngeal wall (C3). Annotated contours and landmarks are
 * always the clean articulated shapes; predicted contours equal them exactly
 * except on frames selected for error injection:
 *
 *   - C1 incomplete: the trailing part of C1 is cut off, losing the velum.
 *   - C1 frame: the whole C1 is displaced rigidly.
 *   - C2 frame: the trailing part of C2 is cut off.
 *   - C2 tongue base: the groove is flattened by a tapered row lift peaking
 *     exactly at the tongue base, so the predicted TB sits a fixed number of
 *     rows above the true one.
 *
 * Rasters are painted from the clean shapes (tissue bright, air dark), so a
 * flattened groove leaves recoverable dark pixels between the predicted
 * boundary and the true one. Generation is deterministic: one seed plus the
 * parameter set fixes every byte of the dataset.
 */

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "atbqc/dataset.hpp"
#include "atbqc/detection.hpp"
#include "atbqc/errors.hpp"
#include "atbqc/flags.hpp"
#include "atbqc/geometry.hpp"
#include "atbqc/landmarks.hpp"
#include "atbqc/rng.hpp"

namespace atbqc {

/// Per-frame injection probabilities; expected counts are rounded to fixed
/// per-video counts so every video carries each configured error type.
struct SynthRates {
    double c1_incomplete = 0.01535;
    double c1_frame = 0.01535;
    double c2_frame = 0.0482;
    double c2_tb = 0.6573;
};

struct SynthMagnitudes {
    PixelPoint c1_frame_offset{14.0, -6.0};  ///< rigid C1 displacement
    double c1_keep_fraction = 0.55;          ///< kept prefix of incomplete C1
    double c2_keep_fraction = 0.40;          ///< kept prefix of truncated C2
    double tb_row_lift = 7.0;                ///< rows the predicted TB rises
};

struct SynthParams {
    int frame_height = kDefaultFrameSize;
    int frame_width = kDefaultFrameSize;
    int frames_per_video = 60;
    int videos_per_subject = 1;
    std::vector<std::string> subjects = {"F1", "F2", "F3", "F4", "F5",
                                         "M1", "M2", "M3", "M4", "M5"};
    double fps = kDefaultFps;

    // Clean-frame articulation must keep every clean detection statistic
    // clear of the default threshold grids (mean velum deviation below 1,
    // velum-to-wall distance below 4), so threshold selection cannot pick a
    // value that flags clean frames of unseen subjects.
    double global_amplitude = 0.35;  ///< whole-head translation per coordinate
    double local_amplitude = 0.15;   ///< independent per-key articulation
    double subject_jitter = 2.0;     ///< template translation across subjects
    double c1_late_fraction = 0.25;  ///< trailing video span hosting C1 errors

    SynthRates rates;
    SynthMagnitudes magnitudes;

    std::uint64_t seed = 20260814;
    bool paint_rasters = true;
};

inline void validate_synth_params(const SynthParams& p) {
    // The template geometry spans roughly rows 12..59 and cols 7..59.
    if (p.frame_height < kDefaultFrameSize || p.frame_width < kDefaultFrameSize)
        throw ConfigError("synth: frame dimensions below the template size");
    if (p.frames_per_video < 8)
        throw ConfigError("synth: need at least 8 frames per video");
    if (p.videos_per_subject < 1 || p.subjects.empty())
        throw ConfigError("synth: need at least one video and one subject");
    for (const auto& s : p.subjects)
        if (s.empty())
            throw ConfigError("synth: empty subject id");
    if (p.global_amplitude < 0.0 || p.global_amplitude > 1.0 || p.local_amplitude < 0.0 ||
        p.local_amplitude > 1.0 || p.subject_jitter < 0.0 || p.subject_jitter > 2.0)
        throw ConfigError("synth: motion amplitudes outside supported range");
    if (!(p.c1_late_fraction > 0.0) || p.c1_late_fraction > 1.0)
        throw ConfigError("synth: c1_late_fraction must lie in (0, 1]");
    const auto rate_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
    if (!rate_ok(p.rates.c1_incomplete) || !rate_ok(p.rates.c1_frame) ||
        !rate_ok(p.rates.c2_frame) || !rate_ok(p.rates.c2_tb))
        throw ConfigError("synth: rates must lie in [0, 1]");
    if (p.rates.c1_incomplete + p.rates.c1_frame > 1.0 ||
        p.rates.c2_frame + p.rates.c2_tb > 1.0)
        throw ConfigError("synth: per-contour rates must sum to at most 1");
    const auto keep_ok = [](double k) { return k > 0.0 && k < 1.0; };
    if (!keep_ok(p.magnitudes.c1_keep_fraction) || !keep_ok(p.magnitudes.c2_keep_fraction))
        throw ConfigError("synth: keep fractions must lie in (0, 1)");
    if (!(p.magnitudes.tb_row_lift > 0.0))
        throw ConfigError("synth: tb_row_lift must be positive");
}

namespace synth_detail {

// Template key points in (row, col). C1 runs upper lip -> palate -> velum
// tip -> pharyngeal end; C2 runs jawline -> lower lip -> groove (the
// tongue-base dip) -> dorsum -> epiglottis end.
inline constexpr std::array<PixelPoint, 9> kC1Keys{{{24.0, 10.0},
                                                    {19.0, 16.0},
                                                    {16.5, 26.0},
                                                    {16.0, 34.0},
                                                    {17.0, 41.0},
                                                    {19.0, 46.0},
                                                    {28.0, 52.0},
                                                    {22.0, 53.0},
                                                    {15.0, 54.0}}};
inline constexpr std::array<PixelPoint, 15> kC2Keys{{{52.0, 10.0},
                                                     {46.0, 12.0},
                                                     {40.0, 13.5},
                                                     {35.0, 15.0},
                                                     {38.0, 17.5},
                                                     {43.0, 21.0},
                                                     {47.0, 24.0},
                                                     {44.0, 28.0},
                                                     {38.0, 31.0},
                                                     {31.0, 34.0},
                                                     {25.0, 38.0},
                                                     {27.0, 43.0},
                                                     {32.0, 47.0},
                                                     {40.0, 50.0},
                                                     {52.0, 53.0}}};
inline constexpr std::size_t kC1Samples = 44;
inline constexpr std::size_t kC2Samples = 56;
inline constexpr std::size_t kC3Samples = 30;
inline constexpr double kTwoPi = 6.283185307179586;

inline std::vector<PixelPoint> c3_template() {
    std::vector<PixelPoint> pts;
    pts.reserve(kC3Samples);
    for (std::size_t i = 0; i < kC3Samples; ++i) {
        const double row =
            12.0 + 44.0 * static_cast<double>(i) / static_cast<double>(kC3Samples - 1);
        pts.push_back({row, 54.5 + 0.35 * std::sin(0.35 * row)});
    }
    return pts;
}

struct Oscillator {
    double period = 12.0;
    double phase = 0.0;

    double value(int t, double amplitude) const {
        return amplitude * std::sin(kTwoPi * static_cast<double>(t) / period + phase);
    }
};

inline Oscillator draw_oscillator(std::mt19937_64& eng, double min_period,
                                  double period_span) {
    Oscillator o;
    o.period = min_period + period_span * unit_real(eng);
    o.phase = kTwoPi * unit_real(eng);
    return o;
}

/// Per-video motion model: one whole-head translation plus an independent
/// small oscillation per template key.
struct MotionModel {
    Oscillator global_row;
    Oscillator global_col;
    std::vector<Oscillator> c1_row, c1_col, c2_row, c2_col;

    static MotionModel draw(std::mt19937_64& eng) {
        MotionModel m;
        m.global_row = draw_oscillator(eng, 8.0, 12.0);
        m.global_col = draw_oscillator(eng, 8.0, 12.0);
        const auto fill = [&eng](std::vector<Oscillator>& v, std::size_t n) {
            for (std::size_t i = 0; i < n; ++i)
                v.push_back(draw_oscillator(eng, 5.0, 10.0));
        };
        fill(m.c1_row, kC1Keys.size());
        fill(m.c1_col, kC1Keys.size());
        fill(m.c2_row, kC2Keys.size());
        fill(m.c2_col, kC2Keys.size());
        return m;
    }
};

inline Contour articulate(std::span<const PixelPoint> keys, ContourKind kind,
                          const PixelPoint& subject_offset, const PixelPoint& global,
                          const std::vector<Oscillator>* row_osc,
                          const std::vector<Oscillator>* col_osc, int t,
                          double local_amplitude, std::size_t samples) {
    Contour chain;
    chain.kind = kind;
    chain.closed = kind != ContourKind::C3;
    for (std::size_t k = 0; k < keys.size(); ++k) {
        PixelPoint p = keys[k] + subject_offset + global;
        if (row_osc) {
            p.row += (*row_osc)[k].value(t, local_amplitude);
            p.col += (*col_osc)[k].value(t, local_amplitude);
        }
        chain.points.push_back(p);
    }
    return samples == 0 ? chain : resample_contour(chain, samples);
}

inline Contour truncated(const Contour& c, double keep_fraction) {
    Contour out = c;
    const auto keep = std::max<std::size_t>(
        4, static_cast<std::size_t>(keep_fraction * static_cast<double>(c.points.size())));
    out.points.resize(std::min(keep, c.points.size()));
    return out;
}

inline Contour displaced(const Contour& c, const PixelPoint& offset) {
    Contour out = c;
    for (auto& p : out.points)
        p = p + offset;
    return out;
}

/**
 * Flattens the groove by lifting rows between LL and the uppermost tongue
 * point. The lift holds tb_row_lift across a one-sample plateau around the
 * tongue-base dip and tapers linearly to zero at both anchors. The plateau
 * keeps the dip of the lifted contour at the clean dip index, so the
 * predicted TB sits exactly tb_row_lift rows above the clean TB.
 */
inline Contour groove_lifted(const Contour& clean_c2, double tb_row_lift) {
    const ResolvedC2 r = resolve_c2_landmarks(clean_c2, nullptr);
    if (!r.tb || !r.uppermost_index)
        throw ConfigError("synth: clean template lost its tongue-base dip");
    const std::size_t ll = r.ll_index;
    const std::size_t tb = r.tb->index;
    const std::size_t up = *r.uppermost_index;
    if (tb <= ll + 1 || up <= tb + 1)
        throw ConfigError("synth: groove too narrow to flatten");
    Contour out = clean_c2;
    for (std::size_t i = ll + 1; i < up; ++i) {
        double w = 1.0;
        if (i + 1 < tb)
            w = static_cast<double>(i - ll) / static_cast<double>(tb - 1 - ll);
        else if (i > tb + 1)
            w = static_cast<double>(up - i) / static_cast<double>(up - tb - 1);
        out.points[i].row -= tb_row_lift * w;
    }
    return out;
}

inline double polyline_distance(const Contour& c, const PixelPoint& p) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < c.points.size(); ++i)
        best = std::min(best, detail::point_segment_distance(p, c.points[i], c.points[i + 1]));
    return best;
}

inline Raster paint_frame(const Contour& c1, const Contour& c2, const Contour& c3,
                          const SynthParams& p, std::mt19937_64& eng) {
    Raster raster;
    raster.height = p.frame_height;
    raster.width = p.frame_width;
    raster.data.resize(static_cast<std::size_t>(p.frame_height) *
                       static_cast<std::size_t>(p.frame_width));
    for (int r = 0; r < p.frame_height; ++r) {
        for (int c = 0; c < p.frame_width; ++c) {
            const PixelPoint center{static_cast<double>(r), static_cast<double>(c)};
            const bool tissue = point_in_closed_contour(c1, center) ||
                                point_in_closed_contour(c2, center) ||
                                polyline_distance(c3, center) <= 1.0;
            const int noise = static_cast<int>(bounded_int(eng, 21)) - 10;
            const int value = (tissue ? 180 : 30) + noise;
            raster.at(r, c) = static_cast<std::uint8_t>(std::clamp(value, 0, 255));
        }
    }
    return raster;
}

inline LandmarkSet annotate(const Contour& c1, const Contour& c2) {
    LandmarkSet ls;
    ls.entries[LandmarkName::UL] = {c1.points[0], 0, Provenance::Annotated};
    const DipResult vel = extract_vel(c1);
    ls.entries[LandmarkName::VEL] = {vel.point, vel.index, Provenance::Annotated};
    const ResolvedC2 r2 = resolve_c2_landmarks(c2, nullptr);
    ls.entries[LandmarkName::LL] = {r2.ll, r2.ll_index, Provenance::Annotated};
    if (!r2.tb)
        throw ConfigError("synth: clean template lost its tongue-base dip");
    ls.entries[LandmarkName::TB] = {r2.tb->point, r2.tb->index, Provenance::Annotated};
    ls.entries[LandmarkName::GLTB] = {c2.points.back(), c2.points.size() - 1,
                                      Provenance::Annotated};
    return ls;
}

struct InjectionPlan {
    std::set<int> c1_incomplete, c1_frame, c2_frame, c2_tb;
};

inline InjectionPlan draw_injections(const SynthParams& p, std::mt19937_64& eng) {
    const int frames = p.frames_per_video;
    const auto count = [frames](double rate) {
        return static_cast<int>(std::lround(rate * static_cast<double>(frames)));
    };
    const int n_c1i = count(p.rates.c1_incomplete);
    const int n_c1f = count(p.rates.c1_frame);
    const int n_c2f = count(p.rates.c2_frame);
    const int n_c2tb = count(p.rates.c2_tb);

    // C1 errors sit in the trailing span so one-sided interpolation cases
    // (a flagged final frame) occur naturally.
    const int late = std::max(
        n_c1i + n_c1f,
        static_cast<int>(std::lround(p.c1_late_fraction * static_cast<double>(frames))));
    if (late > frames)
        throw ConfigError("synth: c1 error count exceeds the video length");
    std::vector<int> c1_candidates;
    for (int t = frames - late; t < frames; ++t)
        c1_candidates.push_back(t);
    shuffle_in_place(c1_candidates, eng);

    std::vector<int> c2_candidates;
    for (int t = 0; t < frames; ++t)
        c2_candidates.push_back(t);
    if (n_c2f + n_c2tb > frames)
        throw ConfigError("synth: c2 error count exceeds the video length");
    shuffle_in_place(c2_candidates, eng);

    InjectionPlan plan;
    for (int i = 0; i < n_c1i; ++i)
        plan.c1_incomplete.insert(c1_candidates[static_cast<std::size_t>(i)]);
    for (int i = 0; i < n_c1f; ++i)
        plan.c1_frame.insert(c1_candidates[static_cast<std::size_t>(n_c1i + i)]);
    for (int i = 0; i < n_c2f; ++i)
        plan.c2_frame.insert(c2_candidates[static_cast<std::size_t>(i)]);
    for (int i = 0; i < n_c2tb; ++i)
        plan.c2_tb.insert(c2_candidates[static_cast<std::size_t>(n_c2f + i)]);
    return plan;
}

} // namespace synth_detail

/// One generated video plus its injection ground truth.
struct GeneratedVideo {
    VideoSequence video;
    std::vector<ErrorFlags> truth;
};

inline GeneratedVideo generate_video(const SynthParams& p, const std::string& subject_id,
                                     const std::string& video_id,
                                     const PixelPoint& subject_offset) {
    validate_synth_params(p);
    std::mt19937_64 eng(p.seed ^ fnv1a64(subject_id + "/" + video_id));
    const auto motion = synth_detail::MotionModel::draw(eng);
    const auto plan = synth_detail::draw_injections(p, eng);
    const auto c3_keys = synth_detail::c3_template();

    GeneratedVideo out;
    out.video.subject_id = subject_id;
    out.video.video_id = video_id;
    out.video.fps = p.fps;

    for (int t = 0; t < p.frames_per_video; ++t) {
        const PixelPoint global{motion.global_row.value(t, p.global_amplitude),
                                motion.global_col.value(t, p.global_amplitude)};
        const Contour c1 = synth_detail::articulate(
            synth_detail::kC1Keys, ContourKind::C1, subject_offset, global, &motion.c1_row,
            &motion.c1_col, t, p.local_amplitude, synth_detail::kC1Samples);
        const Contour c2 = synth_detail::articulate(
            synth_detail::kC2Keys, ContourKind::C2, subject_offset, global, &motion.c2_row,
            &motion.c2_col, t, p.local_amplitude, synth_detail::kC2Samples);
        const Contour c3 =
            synth_detail::articulate(c3_keys, ContourKind::C3, subject_offset, global,
                                     nullptr, nullptr, t, 0.0, 0);

        FrameRecord frame;
        frame.video_id = video_id;
        frame.frame_index = t;
        frame.annotated[ContourKind::C1] = c1;
        frame.annotated[ContourKind::C2] = c2;
        frame.annotated[ContourKind::C3] = c3;
        frame.annotated_landmarks = synth_detail::annotate(c1, c2);

        ErrorFlags truth;
        Contour pred_c1 = c1;
        if (plan.c1_incomplete.count(t)) {
            pred_c1 = synth_detail::truncated(c1, p.magnitudes.c1_keep_fraction);
            truth.c1_error = true;
            truth.c1_kind = C1ErrorKind::Incomplete;
        } else if (plan.c1_frame.count(t)) {
            pred_c1 = synth_detail::displaced(c1, p.magnitudes.c1_frame_offset);
            truth.c1_error = true;
            truth.c1_kind = C1ErrorKind::Frame;
        }
        Contour pred_c2 = c2;
        if (plan.c2_frame.count(t)) {
            pred_c2 = synth_detail::truncated(c2, p.magnitudes.c2_keep_fraction);
            truth.c2_error = true;
            truth.c2_kind = C2ErrorKind::Frame;
        } else if (plan.c2_tb.count(t)) {
            pred_c2 = synth_detail::groove_lifted(c2, p.magnitudes.tb_row_lift);
            truth.c2_error = true;
            truth.c2_kind = C2ErrorKind::Tb;
        }
        frame.predicted[ContourKind::C1] = std::move(pred_c1);
        frame.predicted[ContourKind::C2] = std::move(pred_c2);
        frame.predicted[ContourKind::C3] = c3;

        if (p.paint_rasters)
            frame.raster = synth_detail::paint_frame(c1, c2, c3, p, eng);

        out.video.frames.push_back(std::move(frame));
        out.truth.push_back(std::move(truth));
    }
    return out;
}

/// Generates the full benchmark: all subjects and videos, manifest with
/// per-subject pharyngeal-wall references, and ground-truth flags.
inline Dataset generate_dataset(const SynthParams& p) {
    validate_synth_params(p);
    Dataset ds;
    ds.manifest.version = kFormatVersion;
    ds.manifest.frame_width = p.frame_width;
    ds.manifest.frame_height = p.frame_height;
    ds.manifest.fps = p.fps;

    for (const auto& subject_id : p.subjects) {
        std::mt19937_64 subject_eng(p.seed ^ fnv1a64("subject/" + subject_id));
        const PixelPoint subject_offset{
            p.subject_jitter * (2.0 * unit_real(subject_eng) - 1.0),
            p.subject_jitter * (2.0 * unit_real(subject_eng) - 1.0)};

        SubjectInfo info;
        info.id = subject_id;
        for (int v = 0; v < p.videos_per_subject; ++v) {
            const std::string video_id = subject_id + "_v" + std::to_string(v);
            info.videos.push_back(video_id);
            GeneratedVideo gen = generate_video(p, subject_id, video_id, subject_offset);
            ds.truth_flags[video_id] = std::move(gen.truth);
            ds.videos.push_back(std::move(gen.video));
        }
        ds.manifest.subjects.push_back(std::move(info));
    }

    for (auto& subject : ds.manifest.subjects) {
        std::vector<const FrameRecord*> frames;
        for (const auto& video : ds.videos)
            if (video.subject_id == subject.id)
                for (const auto& frame : video.frames)
                    frames.push_back(&frame);
        subject.c3_reference = compute_subject_reference(frames);
    }
    return ds;
}

} // namespace atbqc
