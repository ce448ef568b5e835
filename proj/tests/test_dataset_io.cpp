#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "atbqc/dataset_io.hpp"
#include "atbqc/synthetic.hpp"
#include "test_support.hpp"

using namespace atbqc;
using testsupport::read_file;
using testsupport::temp_dir;
using testsupport::write_file;

namespace {

SynthParams small_params() {
    SynthParams p;
    p.subjects = {"F1", "M1"};
    p.frames_per_video = 8;
    p.rates.c1_incomplete = 0.125;
    p.rates.c1_frame = 0.125;
    p.rates.c2_frame = 0.125;
    p.rates.c2_tb = 0.25;
    p.seed = 31;
    return p;
}

} // namespace

TEST_CASE("format_double round-trips awkward values exactly") {
    for (double v : {0.1, 1.0 / 3.0, 23.18, -7.25, 0.0, 1e-12, 68.0}) {
        double back = 0.0;
        REQUIRE(io_detail::parse_double(io_detail::format_double(v), back));
        REQUIRE(back == v);
    }
    double out = 0.0;
    REQUIRE_FALSE(io_detail::parse_double("1.5x", out));
    REQUIRE_FALSE(io_detail::parse_double("", out));
}

TEST_CASE("contour CSV round-trips exactly") {
    const auto dir = temp_dir("io_contour");
    Contour a = testsupport::make_c2({35.0, 15.0}, {47.0, 24.0});
    Contour b = testsupport::make_c1({28.0 + 1.0 / 3.0, 52.1});
    // make_c1 is a C1; store both frames under the C1 file for the test.
    a.kind = ContourKind::C1;

    write_contour_csv({&a, &b}, dir / "pred_c1.csv");
    const auto back = read_contour_csv(dir / "pred_c1.csv", ContourKind::C1, 68, 68);
    REQUIRE(back.size() == 2);
    REQUIRE(back[0].points == a.points);
    REQUIRE(back[1].points == b.points);
    REQUIRE(back[0].kind == ContourKind::C1);
    REQUIRE(back[0].closed);
}

TEST_CASE("contour CSV rejects structural defects with the right kind") {
    const auto dir = temp_dir("io_contour_bad");
    const std::string header = "frame_index,point_index,row,col\n";

    const auto expect_kind = [&](const std::string& body, DatasetError::Kind kind) {
        const auto path = dir / "bad.csv";
        write_file(path, body);
        try {
            read_contour_csv(path, ContourKind::C1, 68, 68);
            FAIL("expected DatasetError");
        } catch (const DatasetError& e) {
            REQUIRE(e.kind() == kind);
        }
    };

    expect_kind("wrong,header\n0,0,1,2\n", DatasetError::Kind::Schema);
    expect_kind(header + "0,0,1,2\n0,1,nonsense,4\n", DatasetError::Kind::MalformedRow);
    expect_kind(header + "0,0,1,2\n0,1,3,4,5\n", DatasetError::Kind::MalformedRow);
    expect_kind(header + "0,0,1,2\n0,1,500,4\n", DatasetError::Kind::OutOfBounds);
    expect_kind(header + "0,0,1,-2\n", DatasetError::Kind::OutOfBounds);
    // Frame numbering gap: frame 2 follows frame 0.
    expect_kind(header + "0,0,1,2\n0,1,3,4\n2,0,1,2\n2,1,3,4\n",
                DatasetError::Kind::NonContiguousFrames);
    // Frames must start at 0.
    expect_kind(header + "1,0,1,2\n1,1,3,4\n", DatasetError::Kind::NonContiguousFrames);
    // Point numbering gap within a frame.
    expect_kind(header + "0,0,1,2\n0,2,3,4\n", DatasetError::Kind::MalformedRow);
    // A one-point frame fails contour validation.
    expect_kind(header + "0,0,1,2\n", DatasetError::Kind::MalformedRow);
    // Consecutive duplicate points fail contour validation.
    expect_kind(header + "0,0,1,2\n0,1,1,2\n", DatasetError::Kind::MalformedRow);
    expect_kind("", DatasetError::Kind::Schema);

    try {
        read_contour_csv(dir / "absent.csv", ContourKind::C1, 68, 68);
        FAIL("expected DatasetError");
    } catch (const DatasetError& e) {
        REQUIRE(e.kind() == DatasetError::Kind::MissingFile);
    }
}

TEST_CASE("contour CSV reports the offending line number") {
    const auto dir = temp_dir("io_contour_line");
    write_file(dir / "bad.csv",
               "frame_index,point_index,row,col\n0,0,1,2\n0,1,3,4\n0,2,bad,4\n");
    try {
        read_contour_csv(dir / "bad.csv", ContourKind::C1, 68, 68);
        FAIL("expected DatasetError");
    } catch (const DatasetError& e) {
        REQUIRE(e.line() == 4);
        REQUIRE(e.file() == (dir / "bad.csv").string());
    }
}

TEST_CASE("landmark CSV round-trips and validates") {
    const auto dir = temp_dir("io_landmarks");
    LandmarkSet ls;
    ls.entries[LandmarkName::VEL] = {{28.5, 52.0}, 7, Provenance::Annotated};
    ls.entries[LandmarkName::LL] = {{35.0, 15.25}, 1, Provenance::Annotated};

    write_landmark_csv({nullptr, &ls}, dir / "lm.csv");
    const auto back = read_landmark_csv(dir / "lm.csv", 2, Provenance::Annotated);
    REQUIRE(back.size() == 2);
    REQUIRE_FALSE(back[0].has_value());
    REQUIRE(back[1].has_value());
    REQUIRE(back[1]->entries.size() == 2);
    REQUIRE(back[1]->find(LandmarkName::VEL)->point == PixelPoint{28.5, 52.0});
    REQUIRE(back[1]->find(LandmarkName::VEL)->contour_index == 7);
    REQUIRE(back[1]->find(LandmarkName::LL)->provenance == Provenance::Annotated);

    write_file(dir / "bad_name.csv",
               "frame_index,name,row,col,contour_index\n0,NOSE,1,2,0\n");
    REQUIRE_THROWS_AS(read_landmark_csv(dir / "bad_name.csv", 2, Provenance::Annotated),
                      DatasetError);
    write_file(dir / "bad_frame.csv",
               "frame_index,name,row,col,contour_index\n9,VEL,1,2,0\n");
    try {
        read_landmark_csv(dir / "bad_frame.csv", 2, Provenance::Annotated);
        FAIL("expected DatasetError");
    } catch (const DatasetError& e) {
        REQUIRE(e.kind() == DatasetError::Kind::OutOfBounds);
    }
}

TEST_CASE("flags CSV round-trips kinds and rules") {
    const auto dir = temp_dir("io_flags");
    FlagTable table;
    table["v0"].resize(3);
    table["v0"][1].c1_error = true;
    table["v0"][1].c1_kind = C1ErrorKind::Incomplete;
    table["v0"][1].triggering_rules = {rules::kC1MeanVelum, rules::kC1VelToC3};
    table["v0"][2].c2_error = true;
    table["v0"][2].c2_kind = C2ErrorKind::Frame;
    table["v0"][2].triggering_rules = {rules::kC2PointCount};
    table["v1"].resize(2);

    write_flags_csv(table, {"v0", "v1"}, dir / "flags.csv");
    const std::map<std::string, std::size_t> counts{{"v0", 3}, {"v1", 2}};
    const FlagTable back = read_flags_csv(dir / "flags.csv", counts);

    REQUIRE(back.at("v0").size() == 3);
    REQUIRE_FALSE(back.at("v0")[0].c1_error);
    REQUIRE(back.at("v0")[1].c1_error);
    REQUIRE(back.at("v0")[1].c1_kind == C1ErrorKind::Incomplete);
    REQUIRE(back.at("v0")[1].triggering_rules ==
            std::set<std::string>{rules::kC1MeanVelum, rules::kC1VelToC3});
    REQUIRE(back.at("v0")[2].c2_kind == C2ErrorKind::Frame);
    REQUIRE(back.at("v1").size() == 2);

    // Unknown video ids are schema errors.
    write_file(dir / "bad_video.csv",
               std::string(kFlagsHeader) + "\nghost,0,0,,0,,\n");
    try {
        read_flags_csv(dir / "bad_video.csv", counts);
        FAIL("expected DatasetError");
    } catch (const DatasetError& e) {
        REQUIRE(e.kind() == DatasetError::Kind::Schema);
    }

    // A set error bit without a kind violates the invariant.
    write_file(dir / "bad_kind.csv", std::string(kFlagsHeader) + "\nv0,0,1,,0,,\n");
    try {
        read_flags_csv(dir / "bad_kind.csv", counts);
        FAIL("expected DatasetError");
    } catch (const DatasetError& e) {
        REQUIRE(e.kind() == DatasetError::Kind::MalformedRow);
    }
}

TEST_CASE("PGM round-trips bytes exactly") {
    const auto dir = temp_dir("io_pgm");
    Raster r;
    r.height = 5;
    r.width = 7;
    for (int i = 0; i < 35; ++i)
        r.data.push_back(static_cast<std::uint8_t>(i * 7 % 256));

    write_pgm(r, dir / "f.pgm");
    const Raster back = read_pgm(dir / "f.pgm");
    REQUIRE(back.height == 5);
    REQUIRE(back.width == 7);
    REQUIRE(back.data == r.data);

    write_file(dir / "bad_magic.pgm", "P2\n2 2\n255\n0 0 0 0\n");
    REQUIRE_THROWS_AS(read_pgm(dir / "bad_magic.pgm"), DatasetError);
    write_file(dir / "short.pgm", "P5\n4 4\n255\nab");
    try {
        read_pgm(dir / "short.pgm");
        FAIL("expected DatasetError");
    } catch (const DatasetError& e) {
        REQUIRE(e.kind() == DatasetError::Kind::Schema);
    }
}

TEST_CASE("manifest round-trips subjects and references") {
    const auto dir = temp_dir("io_manifest");
    DatasetManifest m;
    m.frame_width = 68;
    m.frame_height = 68;
    m.fps = 23.18;
    m.subjects = {{"F1", {"F1_v0", "F1_v1"}, PixelPoint{29.5, 54.25}},
                  {"M1", {"M1_v0"}, std::nullopt}};

    write_manifest(m, dir / "manifest.json");
    const DatasetManifest back = read_manifest(dir / "manifest.json");
    REQUIRE(back.version == kFormatVersion);
    REQUIRE(back.frame_width == 68);
    REQUIRE(back.fps == 23.18);
    REQUIRE(back.subjects.size() == 2);
    REQUIRE(back.subjects[0].videos == std::vector<std::string>{"F1_v0", "F1_v1"});
    REQUIRE(back.subjects[0].c3_reference == PixelPoint{29.5, 54.25});
    REQUIRE_FALSE(back.subjects[1].c3_reference.has_value());

    write_file(dir / "wrong_version.json",
               R"({"version":"atbqc-v9","frame_width":68,"frame_height":68,"subjects":[]})");
    try {
        read_manifest(dir / "wrong_version.json");
        FAIL("expected DatasetError");
    } catch (const DatasetError& e) {
        REQUIRE(e.kind() == DatasetError::Kind::Schema);
    }
    write_file(dir / "not_json.json", "{nope");
    REQUIRE_THROWS_AS(read_manifest(dir / "not_json.json"), DatasetError);
}

TEST_CASE("store and load round-trip a full synthetic dataset") {
    const Dataset ds = generate_dataset(small_params());
    const auto dir = temp_dir("io_roundtrip");
    store_dataset(ds, dir);
    const Dataset back = load_dataset(dir / kManifestFileName);

    REQUIRE(back.videos.size() == ds.videos.size());
    for (std::size_t v = 0; v < ds.videos.size(); ++v) {
        const auto& a = ds.videos[v];
        const auto& b = back.videos[v];
        REQUIRE(a.video_id == b.video_id);
        REQUIRE(a.subject_id == b.subject_id);
        REQUIRE(a.frames.size() == b.frames.size());
        for (std::size_t f = 0; f < a.frames.size(); ++f) {
            for (const auto& [kind, contour] : a.frames[f].predicted) {
                REQUIRE(b.frames[f].predicted.count(kind) == 1);
                REQUIRE(contour.points == b.frames[f].predicted.at(kind).points);
            }
            for (const auto& [kind, contour] : a.frames[f].annotated)
                REQUIRE(contour.points == b.frames[f].annotated.at(kind).points);
            REQUIRE(a.frames[f].annotated_landmarks.has_value() ==
                    b.frames[f].annotated_landmarks.has_value());
            if (a.frames[f].annotated_landmarks) {
                for (const auto& [name, entry] : a.frames[f].annotated_landmarks->entries) {
                    const LandmarkEntry* got = b.frames[f].annotated_landmarks->find(name);
                    REQUIRE(got != nullptr);
                    REQUIRE(got->point == entry.point);
                    REQUIRE(got->contour_index == entry.contour_index);
                }
            }
            REQUIRE(a.frames[f].raster.has_value() == b.frames[f].raster.has_value());
            if (a.frames[f].raster)
                REQUIRE(a.frames[f].raster->data == b.frames[f].raster->data);
        }
    }

    REQUIRE(back.truth_flags.size() == ds.truth_flags.size());
    for (const auto& [video_id, flags] : ds.truth_flags) {
        const auto& got = back.truth_flags.at(video_id);
        REQUIRE(got.size() == flags.size());
        for (std::size_t f = 0; f < flags.size(); ++f) {
            REQUIRE(got[f].c1_error == flags[f].c1_error);
            REQUIRE(got[f].c1_kind == flags[f].c1_kind);
            REQUIRE(got[f].c2_error == flags[f].c2_error);
            REQUIRE(got[f].c2_kind == flags[f].c2_kind);
        }
    }

    REQUIRE(back.manifest.subjects.size() == 2);
    for (const auto& s : back.manifest.subjects)
        REQUIRE(s.c3_reference.has_value());
}

TEST_CASE("store_dataset reruns are byte-identical") {
    const Dataset ds = generate_dataset(small_params());
    const auto dir1 = temp_dir("io_rerun_a");
    const auto dir2 = temp_dir("io_rerun_b");
    store_dataset(ds, dir1);
    store_dataset(ds, dir2);
    REQUIRE(testsupport::trees_identical(dir1, dir2));

    // Loading and re-storing also reproduces the tree byte for byte.
    const Dataset back = load_dataset(dir1 / kManifestFileName);
    const auto dir3 = temp_dir("io_rerun_c");
    store_dataset(back, dir3);
    REQUIRE(testsupport::trees_identical(dir1, dir3));
}

TEST_CASE("load_dataset surfaces missing and inconsistent pieces") {
    const Dataset ds = generate_dataset(small_params());

    SECTION("missing required contour file") {
        const auto dir = temp_dir("io_missing");
        store_dataset(ds, dir);
        std::filesystem::remove(dir / ds.videos[0].video_id / "pred_c2.csv");
        try {
            load_dataset(dir / kManifestFileName);
            FAIL("expected DatasetError");
        } catch (const DatasetError& e) {
            REQUIRE(e.kind() == DatasetError::Kind::MissingFile);
        }
    }

    SECTION("frame-count mismatch across files") {
        const auto dir = temp_dir("io_mismatch");
        store_dataset(ds, dir);
        // Rewrite the annotated C1 with one frame fewer.
        const auto path = dir / ds.videos[0].video_id / "anno_c1.csv";
        const Contour one = testsupport::make_c1({28.0, 52.0});
        write_contour_csv({&one}, path);
        try {
            load_dataset(dir / kManifestFileName);
            FAIL("expected DatasetError");
        } catch (const DatasetError& e) {
            REQUIRE(e.kind() == DatasetError::Kind::Schema);
        }
    }

    SECTION("missing manifest") {
        REQUIRE_THROWS_AS(load_dataset("/nonexistent/manifest.json"), DatasetError);
    }
}

TEST_CASE("correction log serializes one row per action") {
    const auto dir = temp_dir("io_corrlog");
    std::vector<CorrectionLogEntry> log{{"v0", 3, "C1", "complete", "2 points appended"},
                                        {"v0", 5, "C2", "tb-correct", "moved"}};
    write_correction_log(log, dir / "log.csv");
    const std::string text = read_file(dir / "log.csv");
    REQUIRE(text == "video_id,frame_index,contour,action,detail\n"
                    "v0,3,C1,complete,2 points appended\n"
                    "v0,5,C2,tb-correct,moved\n");
}
