#pragma once

// Shared builders for the unit tests: hand-positioned contours with known
// landmark geometry, minimal videos and temp-directory helpers.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "atbqc/dataset.hpp"
#include "atbqc/geometry.hpp"

namespace testsupport {

using atbqc::Contour;
using atbqc::ContourKind;
using atbqc::FrameRecord;
using atbqc::PixelPoint;
using atbqc::VideoSequence;

inline Contour make_contour(std::initializer_list<PixelPoint> pts, ContourKind kind,
                            bool closed) {
    Contour c;
    c.points = pts;
    c.kind = kind;
    c.closed = closed;
    return c;
}

/// Ten-point C1 whose velum dip (row maximum over the last three indices)
/// sits exactly at `vel`; the leading palate stretch is fixed.
inline Contour make_c1(PixelPoint vel) {
    Contour c;
    c.kind = ContourKind::C1;
    c.closed = true;
    c.points = {{24.0, 10.0},
                {19.0, 16.0},
                {16.0, 26.0},
                {16.0, 34.0},
                {17.0, 41.0},
                {19.0, 46.0},
                {21.0, 49.0},
                vel,
                {vel.row - 8.0, vel.col + 1.0},
                {vel.row - 12.0, vel.col + 2.0}};
    return c;
}

/// Twelve-point C2 resolving the lower lip at index 1 (= `ll`) and the
/// tongue-base dip at index 4 (= `tb`); the uppermost tongue point is index 8.
/// Requires ll.row < 36 and 37.5 < tb.row < 52.
inline Contour make_c2(PixelPoint ll, PixelPoint tb) {
    Contour c;
    c.kind = ContourKind::C2;
    c.closed = true;
    c.points = {{52.0, 10.0},
                ll,
                {36.0, ll.col + 1.0},
                {37.0, ll.col + 1.5},
                tb,
                {37.5, 28.0},
                {33.0, 31.0},
                {31.0, 34.0},
                {25.0, 38.0},
                {27.0, 43.0},
                {32.0, 47.0},
                {52.0, 53.0}};
    return c;
}

/// C2 whose tongue-base dip is unresolvable: the uppermost tongue point sits
/// directly after the lower lip, leaving no interior index for the dip.
inline Contour make_c2_no_dip() {
    Contour c;
    c.kind = ContourKind::C2;
    c.closed = true;
    c.points = {{10.0, 5.0}, {2.0, 6.0}, {1.0, 7.0}, {5.0, 8.0}, {9.0, 9.0}};
    return c;
}

inline VideoSequence make_video(const std::string& video_id,
                                std::vector<std::map<ContourKind, Contour>> frames,
                                const std::string& subject_id = "S1") {
    VideoSequence v;
    v.subject_id = subject_id;
    v.video_id = video_id;
    for (std::size_t f = 0; f < frames.size(); ++f) {
        FrameRecord rec;
        rec.video_id = video_id;
        rec.frame_index = static_cast<int>(f);
        rec.predicted = std::move(frames[f]);
        v.frames.push_back(std::move(rec));
    }
    return v;
}

/// Fresh empty directory under the system temp root; wiped if it exists.
inline std::filesystem::path temp_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() / ("atbqc_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

/// Byte compare of two directory trees (same relative file set, same bytes).
inline bool trees_identical(const std::filesystem::path& a, const std::filesystem::path& b) {
    std::vector<std::filesystem::path> rel_a, rel_b;
    for (const auto& e : std::filesystem::recursive_directory_iterator(a))
        if (e.is_regular_file()) rel_a.push_back(std::filesystem::relative(e.path(), a));
    for (const auto& e : std::filesystem::recursive_directory_iterator(b))
        if (e.is_regular_file()) rel_b.push_back(std::filesystem::relative(e.path(), b));
    std::sort(rel_a.begin(), rel_a.end());
    std::sort(rel_b.begin(), rel_b.end());
    if (rel_a != rel_b) return false;
    for (const auto& rel : rel_a)
        if (read_file(a / rel) != read_file(b / rel)) return false;
    return true;
}

inline bool contours_equal(const Contour& a, const Contour& b) {
    return a.kind == b.kind && a.closed == b.closed && a.points == b.points;
}

} // namespace testsupport
