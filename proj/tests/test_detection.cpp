#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "atbqc/detection.hpp"
#include "test_support.hpp"

using namespace atbqc;
using testsupport::make_c1;
using testsupport::make_c2;
using testsupport::make_c2_no_dip;
using testsupport::make_contour;
using testsupport::make_video;

namespace {

VideoSequence video_with_vels(const std::vector<PixelPoint>& vels) {
    std::vector<std::map<ContourKind, Contour>> frames;
    for (const auto& vel : vels)
        frames.push_back({{ContourKind::C1, make_c1(vel)}});
    return make_video("v", std::move(frames));
}

VideoSequence video_with_c2(const std::vector<Contour>& c2s) {
    std::vector<std::map<ContourKind, Contour>> frames;
    for (const auto& c2 : c2s)
        frames.push_back({{ContourKind::C2, c2}});
    return make_video("v", std::move(frames));
}

} // namespace

TEST_CASE("mean-velum statistic on a hand-computed video") {
    // Ten frames with VEL (30,40) and one with (30,48). The mean VEL column
    // is 448/11, so the outlier deviates by 80/11 and the rest by 8/11.
    std::vector<PixelPoint> vels(10, PixelPoint{30.0, 40.0});
    vels.push_back({30.0, 48.0});
    const VideoSequence video = video_with_vels(vels);

    const auto stats = compute_c1_stats(video, std::nullopt);
    REQUIRE(stats.size() == 11);
    const double mean_col = 448.0 / 11.0;
    for (std::size_t f = 0; f < 10; ++f) {
        REQUIRE(stats[f].vel == PixelPoint{30.0, 40.0});
        REQUIRE_THAT(stats[f].mean_deviation,
                     Catch::Matchers::WithinAbs(mean_col - 40.0, 1e-9));
    }
    REQUIRE_THAT(stats[10].mean_deviation,
                 Catch::Matchers::WithinAbs(48.0 - mean_col, 1e-9));

    // 8/11 = 0.727 and 80/11 = 7.273 straddle a threshold of 4.
    const auto flags = detect_c1_mean_velum(video, 4.0);
    for (std::size_t f = 0; f < 10; ++f)
        REQUIRE_FALSE(flags[f]);
    REQUIRE(flags[10]);
}

TEST_CASE("mean-velum rule never flags a single-frame video") {
    const VideoSequence video = video_with_vels({{30.0, 40.0}});
    const auto flags = detect_c1_mean_velum(video, 0.0);
    REQUIRE(flags.size() == 1);
    REQUIRE_FALSE(flags[0]);
}

TEST_CASE("vel-to-c3 rule thresholds the reference distance") {
    // VELs at distance 5 and 13 from the reference point (30,45).
    const VideoSequence video = video_with_vels({{30.0, 40.0}, {35.0, 57.0}});
    const SubjectReference ref{"S1", {30.0, 45.0}};

    const auto stats = compute_c1_stats(video, ref.c3_ref_point);
    REQUIRE_THAT(stats[0].c3_distance, Catch::Matchers::WithinAbs(5.0, 1e-12));
    REQUIRE_THAT(stats[1].c3_distance, Catch::Matchers::WithinAbs(13.0, 1e-12));

    const auto flags = detect_c1_vel_to_c3(video, ref, 8.0);
    REQUIRE_FALSE(flags[0]);
    REQUIRE(flags[1]);
}

TEST_CASE("point-count rule flags counts below the reference fraction") {
    Contour full = make_c2({35.0, 15.0}, {47.0, 24.0});        // 12 points
    Contour sparse = resample_contour(full, 7);                // 7 points
    const VideoSequence video = video_with_c2({full, sparse, full});

    // Reference mean 12: threshold 0.65 * 12 = 7.8, so 7 flags and 12 not.
    const auto flags = detect_c2_point_count(video, 12.0, 0.65);
    REQUIRE_FALSE(flags[0]);
    REQUIRE(flags[1]);
    REQUIRE_FALSE(flags[2]);

    REQUIRE_THROWS_AS(detect_c2_point_count(video, 0.0, 0.65), ConfigError);
}

TEST_CASE("slope statistic and rule direction") {
    // LL (35,15), TB (47,24): slope 12/9. LL (35,15), TB (40,24): slope 5/9.
    FrameRecord steep;
    steep.predicted[ContourKind::C2] = make_c2({35.0, 15.0}, {47.0, 24.0});
    FrameRecord flat;
    flat.predicted[ContourKind::C2] = make_c2({35.0, 15.0}, {40.0, 24.0});

    const C2FrameStats ss = compute_c2_frame_stats(steep);
    REQUIRE(ss.slope.has_value());
    REQUIRE_THAT(*ss.slope, Catch::Matchers::WithinAbs(12.0 / 9.0, 1e-12));
    REQUIRE_THAT(*ss.ll_tb_distance, Catch::Matchers::WithinAbs(15.0, 1e-12));

    const C2FrameStats fs = compute_c2_frame_stats(flat);
    REQUIRE_THAT(*fs.slope, Catch::Matchers::WithinAbs(5.0 / 9.0, 1e-12));

    // The rule fires on slopes BELOW the threshold.
    REQUIRE_FALSE(detect_c2_slope(steep, 0.7));
    REQUIRE(detect_c2_slope(flat, 0.7));

    // A vertical lip-groove segment has a huge slope and never fires.
    FrameRecord vertical;
    vertical.predicted[ContourKind::C2] = make_c2({35.0, 15.0}, {47.0, 15.0 + 1e-12});
    const C2FrameStats vs = compute_c2_frame_stats(vertical);
    REQUIRE(*vs.slope > 1e6);
    REQUIRE_FALSE(detect_c2_slope(vertical, 2.0));
}

TEST_CASE("distance rule fires below the threshold") {
    FrameRecord wide;
    wide.predicted[ContourKind::C2] = make_c2({35.0, 15.0}, {47.0, 24.0});  // 15 px
    FrameRecord narrow;
    narrow.predicted[ContourKind::C2] = make_c2({35.0, 15.0}, {38.0, 17.0});  // ~3.6 px

    REQUIRE_FALSE(detect_c2_distance(wide, 8.0));
    REQUIRE(detect_c2_distance(narrow, 8.0));
}

TEST_CASE("unresolvable tongue base is reported through the stats") {
    FrameRecord frame;
    frame.predicted[ContourKind::C2] = make_c2_no_dip();
    const C2FrameStats s = compute_c2_frame_stats(frame);
    REQUIRE(s.tb_unresolvable);
    REQUIRE_FALSE(s.slope.has_value());
    REQUIRE_FALSE(s.ll_tb_distance.has_value());
    REQUIRE_FALSE(detect_c2_slope(frame, 100.0));
    REQUIRE_FALSE(detect_c2_distance(frame, 100.0));
}

TEST_CASE("detect_combined records rules and assigns C2 kinds") {
    // Frame 0 clean; frame 1 flat slope; frame 2 sparse (point count) AND
    // flat slope, where the frame-level kind must dominate.
    const Contour clean = make_c2({35.0, 15.0}, {47.0, 24.0});
    const Contour flat = make_c2({35.0, 15.0}, {40.0, 24.0});
    const Contour sparse = resample_contour(flat, 7);
    VideoSequence video = video_with_c2({clean, flat, sparse, clean});
    for (auto& f : video.frames)
        f.predicted[ContourKind::C1] = make_c1({28.0, 52.0});

    DetectorThresholds t;
    t.mean_vel_dist = 3.5;
    t.ll_tb_slope = 0.7;
    t.ll_tb_dist = 4.0;  // below every LL-TB distance here
    const auto flags = detect_combined(video, std::nullopt, t, 12.0);

    REQUIRE(flags.size() == 4);
    REQUIRE_FALSE(flags[0].c1_error);
    REQUIRE_FALSE(flags[0].c2_error);
    REQUIRE(flags[0].triggering_rules.empty());

    REQUIRE(flags[1].c2_error);
    REQUIRE(flags[1].c2_kind == C2ErrorKind::Tb);
    REQUIRE(flags[1].triggering_rules.count(rules::kC2Slope) == 1);
    REQUIRE(flags[1].triggering_rules.count(rules::kC2PointCount) == 0);

    REQUIRE(flags[2].c2_error);
    REQUIRE(flags[2].c2_kind == C2ErrorKind::Frame);  // point count dominates
    REQUIRE(flags[2].triggering_rules.count(rules::kC2PointCount) == 1);

    REQUIRE_FALSE(flags[3].c2_error);
}

TEST_CASE("detect_combined auto-flags unresolvable landmarks") {
    // Frame 0: C1 with too few points for VEL extraction. Frame 1: C2 with
    // no groove dip. Frame 2: clean.
    VideoSequence video = make_video(
        "v", {{{ContourKind::C1, make_contour({{1, 1}, {2, 2}, {3, 3}}, ContourKind::C1, true)},
               {ContourKind::C2, make_c2({35.0, 15.0}, {47.0, 24.0})}},
              {{ContourKind::C1, make_c1({28.0, 52.0})},
               {ContourKind::C2, make_c2_no_dip()}},
              {{ContourKind::C1, make_c1({28.0, 52.0})},
               {ContourKind::C2, make_c2({35.0, 15.0}, {47.0, 24.0})}}});

    DetectorThresholds t;
    t.ll_tb_slope = 0.1;  // keep the threshold rules quiet
    t.ll_tb_dist = 0.1;
    t.mean_vel_dist = 100.0;
    // Reference count 6 keeps the 5-point no-dip contour above the 0.65
    // point-count cut, isolating the unresolvable-TB path.
    const auto flags = detect_combined(video, std::nullopt, t, 6.0);

    REQUIRE(flags[0].c1_error);
    REQUIRE(flags[0].triggering_rules.count(rules::kC1VelUnresolvable) == 1);
    REQUIRE_FALSE(flags[0].c2_error);

    REQUIRE(flags[1].c2_error);
    REQUIRE(flags[1].c2_kind == C2ErrorKind::Tb);
    REQUIRE(flags[1].triggering_rules.count(rules::kC2TbUnresolvable) == 1);

    REQUIRE_FALSE(flags[2].c1_error);
    REQUIRE_FALSE(flags[2].c2_error);
}

TEST_CASE("detect_video output always satisfies the flag invariant") {
    const Contour clean = make_c2({35.0, 15.0}, {47.0, 24.0});
    const Contour flat = make_c2({35.0, 15.0}, {40.0, 24.0});
    std::vector<std::map<ContourKind, Contour>> frames;
    for (int f = 0; f < 6; ++f)
        frames.push_back({{ContourKind::C1, make_c1({28.0, 52.0})},
                          {ContourKind::C2, f == 4 ? flat : clean}});
    // Frame 2 carries a displaced velum so a C1 kind must be assigned too.
    frames[2][ContourKind::C1] = make_c1({42.0, 44.0});
    VideoSequence video = make_video("v", std::move(frames));

    const auto flags = detect_video(video, std::nullopt, DetectorThresholds{}, 12.0);
    for (const auto& f : flags)
        REQUIRE_NOTHROW(validate_flags(f));
    REQUIRE(flags[2].c1_error);
    REQUIRE(flags[2].c1_kind.has_value());
    REQUIRE(flags[4].c2_error);
    REQUIRE(flags[4].c2_kind == C2ErrorKind::Tb);
}

TEST_CASE("compute_subject_reference averages nearest wall points") {
    // Two annotated frames; C3 runs vertically at col 54. The VEL landmarks
    // sit at rows 28 and 30, so the nearest wall points are (28,54) and
    // (30,54) and the reference is their mean (29,54).
    Contour c3;
    c3.kind = ContourKind::C3;
    for (int r = 24; r <= 34; ++r)
        c3.points.push_back({static_cast<double>(r), 54.0});

    FrameRecord f0;
    f0.annotated[ContourKind::C1] = make_c1({28.0, 52.0});
    f0.annotated[ContourKind::C3] = c3;
    LandmarkSet ls0;
    ls0.entries[LandmarkName::VEL] = {{28.0, 52.0}, 7, Provenance::Annotated};
    f0.annotated_landmarks = ls0;

    FrameRecord f1;
    f1.annotated[ContourKind::C1] = make_c1({30.0, 52.0});
    f1.annotated[ContourKind::C3] = c3;
    LandmarkSet ls1;
    ls1.entries[LandmarkName::VEL] = {{30.0, 52.0}, 7, Provenance::Annotated};
    f1.annotated_landmarks = ls1;

    const PixelPoint ref = compute_subject_reference({&f0, &f1});
    REQUIRE(ref == PixelPoint{29.0, 54.0});

    // Without the landmark set the VEL comes from extraction on annotated C1.
    FrameRecord bare = f0;
    bare.annotated_landmarks.reset();
    const PixelPoint ref2 = compute_subject_reference({&bare});
    REQUIRE(ref2 == PixelPoint{28.0, 54.0});

    FrameRecord no_c3;
    no_c3.annotated[ContourKind::C1] = make_c1({28.0, 52.0});
    REQUIRE_THROWS_AS(compute_subject_reference({&no_c3}), ConfigError);
}

TEST_CASE("reference fold thresholds are pinned") {
    REQUIRE(kReferenceFoldThresholds.size() == 4);
    REQUIRE(kReferenceFoldThresholds[0].mean_vel_dist == 3.5);
    REQUIRE(kReferenceFoldThresholds[0].vel_to_c3_dist == 8.0);
    REQUIRE(kReferenceFoldThresholds[3].ll_tb_slope == 1.0);
    REQUIRE(kReferenceFoldThresholds[3].ll_tb_dist == 10.0);
    for (const auto& t : kReferenceFoldThresholds)
        REQUIRE(t.point_count_fraction == 0.65);
}
