#pragma once

/**
 * @file harness.hpp
 * @brief Subject-wise cross-validation: threshold selection, fold evaluation
 *        and report serialization.
 *
 * Each fold draws a fresh validation subset of subjects; the remaining
 * subjects form the test set. Detection thresholds and the reference C2
 * point count are fitted on validation data only, then detection, correction
 * and metrics run on the test subjects. Nothing from a fold's test subjects
 * feeds its threshold selection.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "atbqc/correction.hpp"
#include "atbqc/dataset.hpp"
#include "atbqc/dataset_io.hpp"
#include "atbqc/detection.hpp"
#include "atbqc/errors.hpp"
#include "atbqc/metrics.hpp"
#include "atbqc/rng.hpp"

namespace atbqc {

// ---------------------------------------------------------------------------
// F-score
// ---------------------------------------------------------------------------

struct FScore {
    double value = 0.0;
    /// True when precision + recall is zero (no true positive exists); the
    /// value is reported as 0 in that case.
    bool degenerate = false;
};

inline FScore f_score(std::size_t tp, std::size_t fp, std::size_t fn) {
    if (tp == 0)
        return {0.0, true};
    return {2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn), false};
}

inline FScore f_score(const std::vector<bool>& predicted, const std::vector<bool>& truth) {
    if (predicted.size() != truth.size())
        throw LengthMismatchError("f_score: prediction and truth lengths differ");
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i] && truth[i]) ++tp;
        if (predicted[i] && !truth[i]) ++fp;
        if (!predicted[i] && truth[i]) ++fn;
    }
    return f_score(tp, fp, fn);
}

// ---------------------------------------------------------------------------
// Folds
// ---------------------------------------------------------------------------

struct FoldSpec {
    std::vector<std::string> validation;
    std::vector<std::string> test;
};

/// Draws fold_count folds, each an independent redraw of validation_count
/// validation subjects; the remaining subjects are that fold's test set.
/// Fully determined by the seed and the subject order given.
inline std::vector<FoldSpec> make_folds(const std::vector<std::string>& subjects,
                                        int fold_count, int validation_count,
                                        std::uint64_t seed) {
    if (fold_count < 1)
        throw ConfigError("make_folds: need at least one fold");
    if (validation_count < 1 ||
        static_cast<std::size_t>(validation_count) >= subjects.size())
        throw ConfigError("make_folds: validation subset must leave a non-empty test set");
    std::mt19937_64 eng(seed);
    std::vector<FoldSpec> folds;
    for (int f = 0; f < fold_count; ++f) {
        std::vector<std::string> order = subjects;
        shuffle_in_place(order, eng);
        FoldSpec spec;
        spec.validation.assign(order.begin(), order.begin() + validation_count);
        spec.test.assign(order.begin() + validation_count, order.end());
        std::sort(spec.validation.begin(), spec.validation.end());
        std::sort(spec.test.begin(), spec.test.end());
        folds.push_back(std::move(spec));
    }
    return folds;
}

// ---------------------------------------------------------------------------
// Threshold selection
// ---------------------------------------------------------------------------

enum class ThresholdDirection { FlagIfGreater, FlagIfLess };

struct ThresholdSelection {
    double threshold = 0.0;
    FScore fscore;
};

/// Expands lo:step:hi into explicit grid values without accumulation drift.
inline std::vector<double> grid_range(double lo, double step, double hi) {
    if (!(step > 0.0) || hi < lo)
        throw ConfigError("grid_range: require step > 0 and hi >= lo");
    std::vector<double> out;
    for (std::size_t i = 0;; ++i) {
        const double v = lo + static_cast<double>(i) * step;
        if (v > hi + step * 1e-9)
            break;
        out.push_back(v);
    }
    return out;
}

/**
 * Grid search maximizing the F-score of "value > t" (FlagIfGreater) or
 * "value < t" (FlagIfLess) against per-frame truth. NaN values never flag.
 * Ties keep the smallest threshold for greater-rules and the largest for
 * less-rules (the conservative end of an equal-scoring band). Throws
 * ThresholdUndefinedError when the truth contains no positive frame, or when
 * no grid value flags a single positive (every candidate scores a degenerate
 * F of zero, so the search cannot rank them).
 */
inline ThresholdSelection select_threshold(const std::vector<double>& values,
                                           const std::vector<bool>& truth,
                                           const std::vector<double>& grid,
                                           ThresholdDirection direction) {
    if (values.size() != truth.size())
        throw LengthMismatchError("select_threshold: values and truth lengths differ");
    if (grid.empty())
        throw ConfigError("select_threshold: empty grid");
    if (std::none_of(truth.begin(), truth.end(), [](bool b) { return b; }))
        throw ThresholdUndefinedError("select_threshold: no positive frame in truth");

    ThresholdSelection best;
    bool first = true;
    for (const double t : grid) {
        std::size_t tp = 0;
        std::size_t fp = 0;
        std::size_t fn = 0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const bool flag = direction == ThresholdDirection::FlagIfGreater
                                  ? values[i] > t
                                  : values[i] < t;
            if (flag && truth[i]) ++tp;
            if (flag && !truth[i]) ++fp;
            if (!flag && truth[i]) ++fn;
        }
        const FScore f = f_score(tp, fp, fn);
        const bool replace =
            first || f.value > best.fscore.value ||
            (f.value == best.fscore.value && direction == ThresholdDirection::FlagIfLess);
        if (replace) {
            best = {t, f};
            first = false;
        }
    }
    if (best.fscore.degenerate)
        throw ThresholdUndefinedError("select_threshold: no threshold attains a true positive");
    return best;
}

// ---------------------------------------------------------------------------
// Harness configuration
// ---------------------------------------------------------------------------

struct HarnessConfig {
    int folds = 4;
    int validation_subjects = 3;
    std::uint64_t seed = 7;

    std::vector<double> mean_vel_grid = grid_range(1.0, 0.5, 10.0);
    std::vector<double> vel_c3_grid = grid_range(4.0, 0.5, 14.0);
    std::vector<double> slope_grid = grid_range(0.1, 0.1, 2.0);
    std::vector<double> dist_grid = grid_range(4.0, 0.5, 14.0);
    double point_count_fraction = 0.65;

    /// Fallback thresholds for rules whose selection is undefined on a fold.
    DetectorThresholds defaults;
    LandmarkConfig landmarks;
    CorrectionConfig correction;
};

inline void validate_harness_config(const HarnessConfig& cfg) {
    if (cfg.folds < 1 || cfg.validation_subjects < 1)
        throw ConfigError("harness: folds and validation_subjects must be positive");
    if (cfg.mean_vel_grid.empty() || cfg.vel_c3_grid.empty() || cfg.slope_grid.empty() ||
        cfg.dist_grid.empty())
        throw ConfigError("harness: threshold grids must be non-empty");
    if (!(cfg.point_count_fraction > 0.0) || cfg.point_count_fraction >= 1.0)
        throw ConfigError("harness: point_count_fraction must lie in (0, 1)");
    validate_landmark_config(cfg.landmarks);
    validate_correction_config(cfg.correction);
}

namespace harness_detail {

/// Parses a grid spec: "lo:step:hi", a comma list, or a single number.
inline std::vector<double> parse_grid(const std::string& text, const std::string& key) {
    const auto bad = [&key]() -> ConfigError {
        return ConfigError("harness config: cannot parse grid for '" + key + "'");
    };
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        const auto parts = io_detail::split(text, ':');
        double lo = 0.0;
        double step = 0.0;
        double hi = 0.0;
        if (parts.size() != 3 || !io_detail::parse_double(parts[0], lo) ||
            !io_detail::parse_double(parts[1], step) || !io_detail::parse_double(parts[2], hi))
            throw bad();
        return grid_range(lo, step, hi);
    }
    for (const auto& part : io_detail::split(text, ',')) {
        double v = 0.0;
        if (!io_detail::parse_double(part, v))
            throw bad();
        out.push_back(v);
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace harness_detail

/// Reads key=value lines ('#' starts a comment). Unknown keys are rejected.
inline HarnessConfig parse_harness_config(const std::filesystem::path& path) {
    auto in = io_detail::open_for_read(path);
    HarnessConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.resize(hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
            line.pop_back();
        std::size_t start = 0;
        while (start < line.size() && (line[start] == ' ' || line[start] == '\t'))
            ++start;
        line.erase(0, start);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("harness config: expected key=value at " + path.string() + ":" +
                              std::to_string(line_no));
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        const auto as_long = [&](long& out) {
            if (!io_detail::parse_long(value, out))
                throw ConfigError("harness config: integer expected for '" + key + "'");
        };
        const auto as_double = [&](double& out) {
            if (!io_detail::parse_double(value, out))
                throw ConfigError("harness config: number expected for '" + key + "'");
        };
        if (key == "folds") {
            long v = 0;
            as_long(v);
            cfg.folds = static_cast<int>(v);
        } else if (key == "validation_subjects") {
            long v = 0;
            as_long(v);
            cfg.validation_subjects = static_cast<int>(v);
        } else if (key == "seed") {
            long v = 0;
            as_long(v);
            cfg.seed = static_cast<std::uint64_t>(v);
        } else if (key == "mean_vel_grid") {
            cfg.mean_vel_grid = harness_detail::parse_grid(value, key);
        } else if (key == "vel_c3_grid") {
            cfg.vel_c3_grid = harness_detail::parse_grid(value, key);
        } else if (key == "slope_grid") {
            cfg.slope_grid = harness_detail::parse_grid(value, key);
        } else if (key == "dist_grid") {
            cfg.dist_grid = harness_detail::parse_grid(value, key);
        } else if (key == "point_count_fraction") {
            as_double(cfg.point_count_fraction);
        } else {
            throw ConfigError("harness config: unknown key '" + key + "'");
        }
    }
    validate_harness_config(cfg);
    return cfg;
}

// ---------------------------------------------------------------------------
// Evaluation report types
// ---------------------------------------------------------------------------

struct ThresholdRecord {
    std::string rule;
    double threshold = 0.0;   ///< selected, or the fallback default
    bool selected = false;    ///< false when validation had no positives
    FScore validation_f;
};

struct ScoreRecord {
    std::string rule;  ///< rule id, or "combined-c1" / "combined-c2"
    FScore f;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

struct FlagRecord {
    std::string video_id;
    int frame_index = 0;
    bool c1 = false;
    bool c2 = false;
};

struct FoldReport {
    int fold_index = 0;
    std::vector<std::string> validation_subjects;
    std::vector<std::string> test_subjects;
    double reference_point_count = 0.0;
    DetectorThresholds thresholds;
    std::vector<ThresholdRecord> threshold_records;
    std::vector<ScoreRecord> test_scores;
    std::vector<FlagRecord> detections;
    std::vector<CorrectionLogEntry> corrections;
};

struct FrameMetricRecord {
    int fold = 0;
    std::string video_id;
    int frame_index = 0;
    std::string metric;
    double pre = 0.0;
    double post = 0.0;
};

struct MetricAggregate {
    std::string metric;
    std::size_t count = 0;     ///< frames contributing a (pre, post) pair
    std::size_t excluded = 0;  ///< in-scope frames where either side is undefined
    double pre_mean = 0.0, pre_std = 0.0;
    double post_mean = 0.0, post_std = 0.0;
    double improvement_pct = 0.0;
};

struct EvaluationReport {
    std::vector<FoldReport> folds;
    std::vector<FrameMetricRecord> frame_metrics;
    std::vector<MetricAggregate> aggregates;
};

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace harness_detail {

struct VideoStats {
    std::vector<C1FrameStats> c1;
    std::vector<C2FrameStats> c2;
};

inline std::optional<SubjectReference> subject_reference(const Dataset& ds,
                                                         const std::string& subject_id) {
    const SubjectInfo* info = ds.find_subject(subject_id);
    if (!info || !info->c3_reference)
        return std::nullopt;
    return SubjectReference{subject_id, *info->c3_reference};
}

/// Metric scopes reported by the harness. Regional metrics cover frames the
/// detector flagged on the metric's contour; global DTW covers every frame.
struct MetricScope {
    const char* label;
    MetricName metric;
    ContourKind contour;
    bool regional;
};

inline constexpr std::array<MetricScope, 6> kMetricScopes{{
    {"EVEL", MetricName::Evel, ContourKind::C1, true},
    {"VELrDTW", MetricName::VelRdtw, ContourKind::C1, true},
    {"DTW_C1", MetricName::Dtw, ContourKind::C1, false},
    {"ETB", MetricName::Etb, ContourKind::C2, true},
    {"TBrDTW", MetricName::TbRdtw, ContourKind::C2, true},
    {"DTW_C2", MetricName::Dtw, ContourKind::C2, false},
}};

/// One metric on one (contour, annotation) pair; nullopt when undefined.
inline std::optional<double> metric_value(const MetricScope& scope, const Contour* pred,
                                          const Contour* anno, const LandmarkSet* landmarks,
                                          const LandmarkConfig& cfg) {
    if (!pred || !anno)
        return std::nullopt;
    switch (scope.metric) {
        case MetricName::Dtw:
            return dtw_distance(*pred, *anno);
        case MetricName::Evel: {
            const LandmarkEntry* vel = landmarks ? landmarks->find(LandmarkName::VEL) : nullptr;
            if (!vel)
                return std::nullopt;
            try {
                return landmark_euclidean(extract_vel(*pred, cfg).point, vel->point);
            } catch (const DegenerateContourError&) {
                return std::nullopt;
            }
        }
        case MetricName::VelRdtw:
            return vel_rdtw(*pred, *anno, cfg.velum_region_fraction);
        case MetricName::Etb: {
            const LandmarkEntry* tb = landmarks ? landmarks->find(LandmarkName::TB) : nullptr;
            if (!tb)
                return std::nullopt;
            try {
                const ResolvedC2 r = resolve_c2_landmarks(*pred, landmarks, cfg);
                if (!r.tb)
                    return std::nullopt;
                return landmark_euclidean(r.tb->point, tb->point);
            } catch (const DegenerateContourError&) {
                return std::nullopt;
            }
        }
        case MetricName::TbRdtw:
            try {
                return tb_rdtw(*pred, *anno, landmarks, landmarks, cfg);
            } catch (const DegenerateContourError&) {
                return std::nullopt;
            }
    }
    return std::nullopt;
}

inline const Contour* find_contour(const std::map<ContourKind, Contour>& contours,
                                   ContourKind kind) {
    auto it = contours.find(kind);
    return it == contours.end() ? nullptr : &it->second;
}

struct RuleCounts {
    std::size_t tp = 0, fp = 0, fn = 0;

    void add(bool flag, bool truth) {
        if (flag && truth) ++tp;
        if (flag && !truth) ++fp;
        if (!flag && truth) ++fn;
    }
};

} // namespace harness_detail

/**
 * Runs the full cross-validation over a dataset that carries ground-truth
 * flags. Per fold: thresholds and the C2 reference count are fitted on the
 * validation subjects, then detection, correction and metrics run on the
 * test subjects. Metric aggregates pool all folds' test frames.
 */
inline EvaluationReport evaluate(const Dataset& ds, const HarnessConfig& cfg) {
    validate_harness_config(cfg);
    if (ds.truth_flags.empty())
        throw EmptyInputError("evaluate: dataset has no ground-truth flags");
    std::vector<std::string> subjects;
    for (const auto& s : ds.manifest.subjects)
        subjects.push_back(s.id);
    const auto folds = make_folds(subjects, cfg.folds, cfg.validation_subjects, cfg.seed);

    // Per-frame detection statistics are threshold-independent; compute once.
    std::map<std::string, harness_detail::VideoStats> stats;
    for (const auto& video : ds.videos) {
        const auto ref = harness_detail::subject_reference(ds, video.subject_id);
        std::optional<PixelPoint> ref_point;
        if (ref)
            ref_point = ref->c3_ref_point;
        stats[video.video_id] = {compute_c1_stats(video, ref_point, cfg.landmarks),
                                 compute_c2_stats(video, cfg.landmarks)};
    }

    EvaluationReport report;
    for (std::size_t fold_idx = 0; fold_idx < folds.size(); ++fold_idx) {
        const FoldSpec& spec = folds[fold_idx];
        FoldReport fold;
        fold.fold_index = static_cast<int>(fold_idx);
        fold.validation_subjects = spec.validation;
        fold.test_subjects = spec.test;
        const std::set<std::string> validation_set(spec.validation.begin(),
                                                   spec.validation.end());
        const std::set<std::string> test_set(spec.test.begin(), spec.test.end());

        // Gather validation-side per-frame statistics and truth.
        std::vector<double> dev_vals, c3_vals, slope_vals, dist_vals;
        std::vector<bool> c1_truth, c2_truth;
        double count_sum = 0.0;
        std::size_t count_n = 0;
        constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
        for (const auto& video : ds.videos) {
            if (!validation_set.count(video.subject_id))
                continue;
            const auto& vs = stats.at(video.video_id);
            const auto& truth = ds.truth_flags.at(video.video_id);
            if (truth.size() != video.frames.size())
                throw LengthMismatchError("evaluate: truth flag count differs from video " +
                                          video.video_id);
            for (std::size_t f = 0; f < video.frames.size(); ++f) {
                dev_vals.push_back(vs.c1[f].mean_deviation);
                c3_vals.push_back(vs.c1[f].c3_distance);
                slope_vals.push_back(vs.c2[f].slope ? *vs.c2[f].slope : kNan);
                dist_vals.push_back(vs.c2[f].ll_tb_distance ? *vs.c2[f].ll_tb_distance : kNan);
                c1_truth.push_back(truth[f].c1_error);
                c2_truth.push_back(truth[f].c2_error);
                count_sum += static_cast<double>(vs.c2[f].point_count);
                ++count_n;
            }
        }
        if (count_n == 0)
            throw EmptyInputError("evaluate: fold has no validation frames");
        fold.reference_point_count = count_sum / static_cast<double>(count_n);

        DetectorThresholds th = cfg.defaults;
        th.point_count_fraction = cfg.point_count_fraction;
        const auto select = [&fold](const char* rule, const std::vector<double>& values,
                                    const std::vector<bool>& truth,
                                    const std::vector<double>& grid,
                                    ThresholdDirection dir, double& slot) {
            ThresholdRecord record;
            record.rule = rule;
            try {
                const ThresholdSelection sel = select_threshold(values, truth, grid, dir);
                slot = sel.threshold;
                record.threshold = sel.threshold;
                record.selected = true;
                record.validation_f = sel.fscore;
            } catch (const ThresholdUndefinedError&) {
                record.threshold = slot;  // fallback default kept
                record.selected = false;
                record.validation_f = {0.0, true};
            }
            fold.threshold_records.push_back(std::move(record));
        };
        select(rules::kC1MeanVelum, dev_vals, c1_truth, cfg.mean_vel_grid,
               ThresholdDirection::FlagIfGreater, th.mean_vel_dist);
        select(rules::kC1VelToC3, c3_vals, c1_truth, cfg.vel_c3_grid,
               ThresholdDirection::FlagIfGreater, th.vel_to_c3_dist);
        select(rules::kC2Slope, slope_vals, c2_truth, cfg.slope_grid,
               ThresholdDirection::FlagIfLess, th.ll_tb_slope);
        select(rules::kC2Distance, dist_vals, c2_truth, cfg.dist_grid,
               ThresholdDirection::FlagIfLess, th.ll_tb_dist);
        fold.thresholds = th;

        // Test side: detect, correct, score, measure.
        std::map<std::string, harness_detail::RuleCounts> rule_counts;
        const char* scored_rules[] = {rules::kC1MeanVelum, rules::kC1VelToC3,
                                      rules::kC2PointCount, rules::kC2Slope,
                                      rules::kC2Distance};
        harness_detail::RuleCounts combined_c1, combined_c2;
        for (const auto& video : ds.videos) {
            if (!test_set.count(video.subject_id))
                continue;
            const auto ref = harness_detail::subject_reference(ds, video.subject_id);
            const auto flags = detect_video(video, ref, th, fold.reference_point_count,
                                            cfg.landmarks, cfg.correction);
            const VideoCorrection corrected = correct_video(video, flags, cfg.correction,
                                                            cfg.landmarks);
            fold.corrections.insert(fold.corrections.end(), corrected.log.begin(),
                                    corrected.log.end());
            const auto& truth = ds.truth_flags.at(video.video_id);
            if (truth.size() != video.frames.size())
                throw LengthMismatchError("evaluate: truth flag count differs from video " +
                                          video.video_id);

            for (std::size_t f = 0; f < video.frames.size(); ++f) {
                const ErrorFlags& fl = flags[f];
                if (fl.c1_error || fl.c2_error)
                    fold.detections.push_back({video.video_id, static_cast<int>(f),
                                               fl.c1_error, fl.c2_error});
                combined_c1.add(fl.c1_error, truth[f].c1_error);
                combined_c2.add(fl.c2_error, truth[f].c2_error);
                for (const char* rule : scored_rules) {
                    const std::string_view id(rule);
                    const bool is_c1 =
                        id == rules::kC1MeanVelum || id == rules::kC1VelToC3;
                    rule_counts[rule].add(fl.triggering_rules.count(rule) > 0,
                                          is_c1 ? truth[f].c1_error : truth[f].c2_error);
                }

                const FrameRecord& pre_frame = video.frames[f];
                const FrameRecord& post_frame = corrected.video.frames[f];
                const LandmarkSet* landmarks = pre_frame.annotated_landmarks
                                                   ? &*pre_frame.annotated_landmarks
                                                   : nullptr;
                for (const auto& scope : harness_detail::kMetricScopes) {
                    const bool flagged =
                        scope.contour == ContourKind::C1 ? fl.c1_error : fl.c2_error;
                    if (scope.regional && !flagged)
                        continue;
                    const Contour* anno =
                        harness_detail::find_contour(pre_frame.annotated, scope.contour);
                    const auto pre = harness_detail::metric_value(
                        scope, harness_detail::find_contour(pre_frame.predicted, scope.contour),
                        anno, landmarks, cfg.landmarks);
                    const auto post = harness_detail::metric_value(
                        scope,
                        harness_detail::find_contour(post_frame.predicted, scope.contour),
                        anno, landmarks, cfg.landmarks);
                    auto& agg = report.aggregates;
                    auto agg_it = std::find_if(agg.begin(), agg.end(), [&](const auto& a) {
                        return a.metric == scope.label;
                    });
                    if (agg_it == agg.end()) {
                        agg.push_back({scope.label, 0, 0, 0, 0, 0, 0, 0});
                        agg_it = agg.end() - 1;
                    }
                    if (!pre || !post) {
                        ++agg_it->excluded;
                        continue;
                    }
                    report.frame_metrics.push_back({fold.fold_index, video.video_id,
                                                    static_cast<int>(f), scope.label, *pre,
                                                    *post});
                }
            }
        }
        for (const char* rule : scored_rules) {
            const auto& rc = rule_counts[rule];
            fold.test_scores.push_back({rule, f_score(rc.tp, rc.fp, rc.fn), rc.tp, rc.fp,
                                        rc.fn});
        }
        fold.test_scores.push_back({"combined-c1",
                                    f_score(combined_c1.tp, combined_c1.fp, combined_c1.fn),
                                    combined_c1.tp, combined_c1.fp, combined_c1.fn});
        fold.test_scores.push_back({"combined-c2",
                                    f_score(combined_c2.tp, combined_c2.fp, combined_c2.fn),
                                    combined_c2.tp, combined_c2.fp, combined_c2.fn});
        report.folds.push_back(std::move(fold));
    }

    // Pooled aggregates over every fold's test frames.
    for (auto& agg : report.aggregates) {
        double pre_sum = 0.0, pre_sq = 0.0, post_sum = 0.0, post_sq = 0.0;
        std::size_t n = 0;
        for (const auto& row : report.frame_metrics) {
            if (row.metric != agg.metric)
                continue;
            pre_sum += row.pre;
            pre_sq += row.pre * row.pre;
            post_sum += row.post;
            post_sq += row.post * row.post;
            ++n;
        }
        agg.count = n;
        if (n > 0) {
            const double dn = static_cast<double>(n);
            agg.pre_mean = pre_sum / dn;
            agg.post_mean = post_sum / dn;
            agg.pre_std = std::sqrt(std::max(0.0, pre_sq / dn - agg.pre_mean * agg.pre_mean));
            agg.post_std =
                std::sqrt(std::max(0.0, post_sq / dn - agg.post_mean * agg.post_mean));
            agg.improvement_pct = agg.pre_mean > 0.0
                                      ? (agg.pre_mean - agg.post_mean) / agg.pre_mean * 100.0
                                      : 0.0;
        }
    }
    // Stable row order regardless of which scope appeared first.
    std::sort(report.aggregates.begin(), report.aggregates.end(),
              [](const MetricAggregate& a, const MetricAggregate& b) {
                  const auto rank = [](const std::string& label) {
                      for (std::size_t i = 0; i < harness_detail::kMetricScopes.size(); ++i)
                          if (label == harness_detail::kMetricScopes[i].label)
                              return i;
                      return harness_detail::kMetricScopes.size();
                  };
                  return rank(a.metric) < rank(b.metric);
              });
    return report;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

/// Writes every report table under out_dir. Deterministic: identical reports
/// produce byte-identical files.
inline void write_report(const EvaluationReport& report,
                         const std::filesystem::path& out_dir) {
    namespace iod = io_detail;
    std::filesystem::create_directories(out_dir);

    {
        auto out = iod::open_for_write(out_dir / "folds.csv");
        out << "fold,role,subject\n";
        for (const auto& fold : report.folds) {
            for (const auto& s : fold.validation_subjects)
                out << fold.fold_index << ",validation," << s << "\n";
            for (const auto& s : fold.test_subjects)
                out << fold.fold_index << ",test," << s << "\n";
        }
    }
    {
        auto out = iod::open_for_write(out_dir / "fold_thresholds.csv");
        out << "fold,rule,threshold,selected,validation_f,validation_degenerate\n";
        for (const auto& fold : report.folds) {
            for (const auto& r : fold.threshold_records)
                out << fold.fold_index << "," << r.rule << ","
                    << iod::format_double(r.threshold) << "," << (r.selected ? 1 : 0) << ","
                    << iod::format_double(r.validation_f.value) << ","
                    << (r.validation_f.degenerate ? 1 : 0) << "\n";
            out << fold.fold_index << "," << rules::kC2PointCount << ","
                << iod::format_double(fold.thresholds.point_count_fraction) << ",1,"
                << iod::format_double(0.0) << ",1\n";
        }
    }
    {
        auto out = iod::open_for_write(out_dir / "fold_fscores.csv");
        out << "fold,rule,f_score,degenerate,tp,fp,fn\n";
        for (const auto& fold : report.folds)
            for (const auto& s : fold.test_scores)
                out << fold.fold_index << "," << s.rule << "," << iod::format_double(s.f.value)
                    << "," << (s.f.degenerate ? 1 : 0) << "," << s.tp << "," << s.fp << ","
                    << s.fn << "\n";
    }
    {
        auto out = iod::open_for_write(out_dir / "error_positions.csv");
        out << "fold,video_id,frame_index,c1_flag,c2_flag\n";
        for (const auto& fold : report.folds)
            for (const auto& d : fold.detections)
                out << fold.fold_index << "," << d.video_id << "," << d.frame_index << ","
                    << (d.c1 ? 1 : 0) << "," << (d.c2 ? 1 : 0) << "\n";
    }
    {
        auto out = iod::open_for_write(out_dir / "correction_log.csv");
        out << "fold,video_id,frame_index,contour,action,detail\n";
        for (const auto& fold : report.folds)
            for (const auto& e : fold.corrections)
                out << fold.fold_index << "," << e.video_id << "," << e.frame_index << ","
                    << e.contour << "," << e.action << "," << e.detail << "\n";
    }
    {
        auto out = iod::open_for_write(out_dir / "frame_metrics.csv");
        out << "fold,video_id,frame_index,metric,pre,post\n";
        for (const auto& row : report.frame_metrics)
            out << row.fold << "," << row.video_id << "," << row.frame_index << ","
                << row.metric << "," << iod::format_double(row.pre) << ","
                << iod::format_double(row.post) << "\n";
    }
    {
        auto out = iod::open_for_write(out_dir / "report_metrics.csv");
        out << "metric,count,excluded,pre_mean,pre_std,post_mean,post_std,improvement_pct\n";
        for (const auto& a : report.aggregates)
            out << a.metric << "," << a.count << "," << a.excluded << ","
                << iod::format_double(a.pre_mean) << "," << iod::format_double(a.pre_std)
                << "," << iod::format_double(a.post_mean) << ","
                << iod::format_double(a.post_std) << ","
                << iod::format_double(a.improvement_pct) << "\n";
    }
}

} // namespace atbqc
