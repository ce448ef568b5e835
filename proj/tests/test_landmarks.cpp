#include <catch2/catch_amalgamated.hpp>

#include "atbqc/landmarks.hpp"
#include "test_support.hpp"

using namespace atbqc;
using testsupport::make_c1;
using testsupport::make_c2;
using testsupport::make_c2_no_dip;
using testsupport::make_contour;

TEST_CASE("find_dip returns the row maximum with low-index ties") {
    const Contour c =
        make_contour({{3, 0}, {7, 1}, {5, 2}, {7, 3}, {1, 4}}, ContourKind::C2, false);
    const DipResult full = find_dip(c, 0, c.points.size());
    REQUIRE(full.index == 1);  // 7 appears at indices 1 and 3; the tie goes low
    REQUIRE(full.point == PixelPoint{7.0, 1.0});

    const DipResult tail = find_dip(c, 2, 5);
    REQUIRE(tail.index == 3);

    REQUIRE_THROWS_AS(find_dip(c, 3, 3), InvalidArgumentError);
    REQUIRE_THROWS_AS(find_dip(c, 0, 6), InvalidArgumentError);
}

TEST_CASE("extract_vel searches only the trailing window") {
    // make_c1 puts the velum dip at index 7 of 10; window = ceil(0.3*10) = 3
    // covers indices 7..9.
    const Contour c1 = make_c1({28.0, 52.0});
    const DipResult vel = extract_vel(c1);
    REQUIRE(vel.index == 7);
    REQUIRE(vel.point == PixelPoint{28.0, 52.0});

    // A deeper dip outside the window must not win.
    Contour decoy = c1;
    decoy.points[3] = {40.0, 34.0};
    REQUIRE(extract_vel(decoy).index == 7);

    Contour tiny = make_contour({{1, 1}, {2, 2}, {3, 3}}, ContourKind::C1, true);
    REQUIRE_THROWS_AS(extract_vel(tiny), DegenerateContourError);

    LandmarkConfig bad;
    bad.velum_region_fraction = 1.5;
    REQUIRE_THROWS_AS(extract_vel(c1, bad), ConfigError);
}

TEST_CASE("extract_ll searches only the leading window") {
    // make_c2 puts the lower lip at index 1; window = ceil(0.25*12) = 3.
    const Contour c2 = make_c2({35.0, 15.0}, {47.0, 24.0});
    const DipResult ll = extract_ll(c2);
    REQUIRE(ll.index == 1);
    REQUIRE(ll.point == PixelPoint{35.0, 15.0});

    // A lower row outside the leading window must not win.
    Contour decoy = c2;
    decoy.points[8] = {1.0, 38.0};
    REQUIRE(extract_ll(decoy).index == 1);

    Contour tiny = make_contour({{1, 1}, {2, 2}}, ContourKind::C2, true);
    REQUIRE_THROWS_AS(extract_ll(tiny), DegenerateContourError);
}

TEST_CASE("uppermost_tongue_index scans strictly after the lower lip") {
    const Contour c2 = make_c2({35.0, 15.0}, {47.0, 24.0});
    const auto upper = uppermost_tongue_index(c2, 1);
    REQUIRE(upper.has_value());
    REQUIRE(*upper == 8);  // row 25 is the minimum after index 1

    // From the last index there is nothing left to scan.
    REQUIRE_FALSE(uppermost_tongue_index(c2, c2.points.size() - 1).has_value());
    REQUIRE_THROWS_AS(uppermost_tongue_index(c2, c2.points.size()), InvalidArgumentError);
}

TEST_CASE("extract_tb finds the groove dip between lip and dorsum") {
    const Contour c2 = make_c2({35.0, 15.0}, {47.0, 24.0});
    const auto tb = extract_tb(c2, 1);
    REQUIRE(tb.has_value());
    REQUIRE(tb->index == 4);
    REQUIRE(tb->point == PixelPoint{47.0, 24.0});
}

TEST_CASE("extract_tb reports no dip when the interior range is empty") {
    const Contour c2 = make_c2_no_dip();
    const DipResult ll = extract_ll(c2);
    REQUIRE(ll.index == 1);
    REQUIRE_FALSE(extract_tb(c2, ll.index).has_value());
}

TEST_CASE("resolve_c2_landmarks prefers the annotated lower lip") {
    const Contour c2 = make_c2({35.0, 15.0}, {47.0, 24.0});

    SECTION("without annotation the estimator runs") {
        const ResolvedC2 r = resolve_c2_landmarks(c2, nullptr);
        REQUIRE(r.ll_provenance == Provenance::Estimated);
        REQUIRE(r.ll_index == 1);
        REQUIRE(r.ll == PixelPoint{35.0, 15.0});
        REQUIRE(r.uppermost_index == 8);
        REQUIRE(r.tb.has_value());
        REQUIRE(r.tb->index == 4);
    }

    SECTION("an annotated LL snaps to the nearest contour point") {
        LandmarkSet annotated;
        annotated.entries[LandmarkName::LL] = {{35.2, 15.1}, 99, Provenance::Annotated};
        const ResolvedC2 r = resolve_c2_landmarks(c2, &annotated);
        REQUIRE(r.ll_provenance == Provenance::Annotated);
        REQUIRE(r.ll == PixelPoint{35.2, 15.1});  // the annotated point itself
        REQUIRE(r.ll_index == 1);                 // snapped on this contour
        REQUIRE(r.tb.has_value());
        REQUIRE(r.tb->index == 4);
    }

    SECTION("an annotated LL near the contour end leaves no tongue region") {
        LandmarkSet annotated;
        annotated.entries[LandmarkName::LL] = {{52.0, 53.0}, 0, Provenance::Annotated};
        const ResolvedC2 r = resolve_c2_landmarks(c2, &annotated);
        REQUIRE(r.ll_index == c2.points.size() - 1);
        REQUIRE_FALSE(r.uppermost_index.has_value());
        REQUIRE_FALSE(r.tb.has_value());
    }
}

TEST_CASE("landmark config validation") {
    LandmarkConfig cfg;
    REQUIRE_NOTHROW(validate_landmark_config(cfg));
    cfg.ll_search_fraction = 0.0;
    REQUIRE_THROWS_AS(validate_landmark_config(cfg), ConfigError);
    cfg = {};
    cfg.velum_region_fraction = 1.0;
    REQUIRE_THROWS_AS(validate_landmark_config(cfg), ConfigError);
}
