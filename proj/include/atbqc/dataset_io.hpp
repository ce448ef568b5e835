#pragma once

/**
 * @file dataset_io.hpp
 * @brief On-disk dataset layout and loading/storing.
 *
 * Layout, relative to the manifest's directory:
 *   manifest.json
 *   flags.csv                      optional ground-truth or detected flags
 *   <video_id>/pred_c1.csv         predicted contours, one file per kind
 *   <video_id>/pred_c2.csv
 *   <video_id>/pred_c3.csv         optional
 *   <video_id>/anno_c{1,2,3}.csv   optional annotations
 *   <video_id>/landmarks_annotated.csv, landmarks_estimated.csv  optional
 *   <video_id>/frames/frame_%05d.pgm                             optional
 *
 * Contour CSV columns: frame_index,point_index,row,col. Landmark CSV
 * columns: frame_index,name,row,col,contour_index. Flags CSV columns:
 * video_id,frame_index,c1_error,c1_kind,c2_error,c2_kind,rules. All writes
 * are deterministic: identical inputs produce byte-identical trees.
 */

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "atbqc/correction.hpp"
#include "atbqc/dataset.hpp"
#include "atbqc/errors.hpp"
#include "atbqc/flags.hpp"
#include "atbqc/geometry.hpp"

namespace atbqc {

inline constexpr const char* kManifestFileName = "manifest.json";
inline constexpr const char* kFlagsFileName = "flags.csv";
inline constexpr const char* kContourHeader = "frame_index,point_index,row,col";
inline constexpr const char* kLandmarkHeader = "frame_index,name,row,col,contour_index";
inline constexpr const char* kFlagsHeader =
    "video_id,frame_index,c1_error,c1_kind,c2_error,c2_kind,rules";

namespace io_detail {

/// Shortest round-trip decimal form; reparsing restores the exact double.
inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end;
}

inline bool parse_long(const std::string& s, long& out) {
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string contour_file_name(ContourKind kind, bool annotated) {
    std::string name = annotated ? "anno_" : "pred_";
    name += kind == ContourKind::C1 ? "c1" : kind == ContourKind::C2 ? "c2" : "c3";
    return name + ".csv";
}

inline std::string frame_file_name(int frame_index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%05d.pgm", frame_index);
    return buf;
}

inline std::ifstream open_for_read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DatasetError(DatasetError::Kind::MissingFile, path.string(), 0,
                           "cannot open file");
    return in;
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DatasetError(DatasetError::Kind::Io, path.string(), 0, "cannot create file");
    return out;
}

} // namespace io_detail

// ---------------------------------------------------------------------------
// PGM rasters
// ---------------------------------------------------------------------------

inline void write_pgm(const Raster& raster, const std::filesystem::path& path) {
    auto out = io_detail::open_for_write(path);
    out << "P5\n" << raster.width << " " << raster.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(raster.data.data()),
              static_cast<std::streamsize>(raster.data.size()));
}

inline Raster read_pgm(const std::filesystem::path& path) {
    auto in = io_detail::open_for_read(path);
    const auto fail = [&](const std::string& msg) -> DatasetError {
        return {DatasetError::Kind::Schema, path.string(), 0, msg};
    };
    std::string magic;
    in >> magic;
    if (magic != "P5")
        throw fail("not a binary PGM (expected magic P5)");
    const auto next_int = [&]() -> int {
        // Skip whitespace and '#' comment lines between header tokens.
        while (true) {
            const int ch = in.peek();
            if (ch == '#') {
                std::string comment;
                std::getline(in, comment);
            } else if (std::isspace(ch)) {
                in.get();
            } else {
                break;
            }
        }
        int value = 0;
        if (!(in >> value))
            throw fail("malformed PGM header");
        return value;
    };
    Raster raster;
    raster.width = next_int();
    raster.height = next_int();
    const int maxval = next_int();
    if (raster.width <= 0 || raster.height <= 0 || maxval != 255)
        throw fail("unsupported PGM dimensions or maxval");
    in.get();  // single whitespace before pixel data
    raster.data.resize(static_cast<std::size_t>(raster.width) *
                       static_cast<std::size_t>(raster.height));
    in.read(reinterpret_cast<char*>(raster.data.data()),
            static_cast<std::streamsize>(raster.data.size()));
    if (in.gcount() != static_cast<std::streamsize>(raster.data.size()))
        throw fail("truncated PGM pixel data");
    return raster;
}

// ---------------------------------------------------------------------------
// Contour and landmark CSV
// ---------------------------------------------------------------------------

/// Per-frame contours of one kind, written sorted by (frame, point) index.
inline void write_contour_csv(const std::vector<const Contour*>& frames,
                              const std::filesystem::path& path) {
    auto out = io_detail::open_for_write(path);
    out << kContourHeader << "\n";
    for (std::size_t f = 0; f < frames.size(); ++f) {
        if (!frames[f])
            continue;
        const auto& pts = frames[f]->points;
        for (std::size_t i = 0; i < pts.size(); ++i)
            out << f << "," << i << "," << io_detail::format_double(pts[i].row) << ","
                << io_detail::format_double(pts[i].col) << "\n";
    }
}

/**
 * Reads one contour-kind CSV into per-frame contours. Every frame present
 * must hold consecutive point indices from 0; frames must cover 0..N-1 with
 * no gaps. Coordinates are checked against the frame bounds.
 */
inline std::vector<Contour> read_contour_csv(const std::filesystem::path& path,
                                             ContourKind kind, int frame_height,
                                             int frame_width) {
    auto in = io_detail::open_for_read(path);
    const std::string file = path.string();
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || line != kContourHeader)
        throw DatasetError(DatasetError::Kind::Schema, file, 1,
                           std::string("expected header '") + kContourHeader + "'");

    std::vector<Contour> frames;
    long prev_frame = -1;
    long prev_point = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        const auto fields = io_detail::split(line, ',');
        long frame = 0;
        long point = 0;
        double row = 0.0;
        double col = 0.0;
        if (fields.size() != 4 || !io_detail::parse_long(fields[0], frame) ||
            !io_detail::parse_long(fields[1], point) ||
            !io_detail::parse_double(fields[2], row) ||
            !io_detail::parse_double(fields[3], col))
            throw DatasetError(DatasetError::Kind::MalformedRow, file, line_no,
                               "expected frame_index,point_index,row,col");
        if (frame < 0 || point < 0)
            throw DatasetError(DatasetError::Kind::MalformedRow, file, line_no,
                               "negative index");
        if (row < 0.0 || row > frame_height - 1 || col < 0.0 || col > frame_width - 1)
            throw DatasetError(DatasetError::Kind::OutOfBounds, file, line_no,
                               "coordinate outside frame bounds");
        if (frame != prev_frame) {
            if (frame != prev_frame + 1)
                throw DatasetError(DatasetError::Kind::NonContiguousFrames, file, line_no,
                                   "frame indices must be contiguous from 0");
            if (point != 0)
                throw DatasetError(DatasetError::Kind::MalformedRow, file, line_no,
                                   "point indices must start at 0");
            frames.push_back(Contour{{}, kind, kind != ContourKind::C3});
            prev_frame = frame;
            prev_point = -1;
        }
        if (point != prev_point + 1)
            throw DatasetError(DatasetError::Kind::MalformedRow, file, line_no,
                               "point indices must be consecutive");
        prev_point = point;
        frames.back().points.push_back({row, col});
    }
    if (frames.empty())
        throw DatasetError(DatasetError::Kind::Schema, file, 0, "no contour rows");
    for (std::size_t f = 0; f < frames.size(); ++f) {
        try {
            validate_contour(frames[f]);
        } catch (const InvalidContourError& e) {
            throw DatasetError(DatasetError::Kind::MalformedRow, file, 0,
                               "frame " + std::to_string(f) + ": " + e.what());
        }
    }
    return frames;
}

inline void write_landmark_csv(const std::vector<const LandmarkSet*>& frames,
                               const std::filesystem::path& path) {
    auto out = io_detail::open_for_write(path);
    out << kLandmarkHeader << "\n";
    for (std::size_t f = 0; f < frames.size(); ++f) {
        if (!frames[f])
            continue;
        for (const auto& [name, entry] : frames[f]->entries)
            out << f << "," << to_string(name) << ","
                << io_detail::format_double(entry.point.row) << ","
                << io_detail::format_double(entry.point.col) << "," << entry.contour_index
                << "\n";
    }
}

/// Reads one landmark CSV into per-frame sets (empty optional when a frame
/// has no landmarks). frame_count bounds the frame index.
inline std::vector<std::optional<LandmarkSet>> read_landmark_csv(
    const std::filesystem::path& path, std::size_t frame_count, Provenance provenance) {
    auto in = io_detail::open_for_read(path);
    const std::string file = path.string();
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || line != kLandmarkHeader)
        throw DatasetError(DatasetError::Kind::Schema, file, 1,
                           std::string("expected header '") + kLandmarkHeader + "'");
    std::vector<std::optional<LandmarkSet>> frames(frame_count);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        const auto fields = io_detail::split(line, ',');
        long frame = 0;
        long index = 0;
        double row = 0.0;
        double col = 0.0;
        if (fields.size() != 5 || !io_detail::parse_long(fields[0], frame) ||
            !io_detail::parse_double(fields[2], row) ||
            !io_detail::parse_double(fields[3], col) ||
            !io_detail::parse_long(fields[4], index))
            throw DatasetError(DatasetError::Kind::MalformedRow, file, line_no,
                               "expected frame_index,name,row,col,contour_index");
        const auto name = landmark_from_string(fields[1]);
        if (!name)
            throw DatasetError(DatasetError::Kind::MalformedRow, file, line_no,
                               "unknown landmark name '" + fields[1] + "'");
        if (frame < 0 || static_cast<std::size_t>(frame) >= frame_count || index < 0)
            throw DatasetError(DatasetError::Kind::OutOfBounds, file, line_no,
                               "frame or contour index out of range");
        auto& slot = frames[static_cast<std::size_t>(frame)];
        if (!slot)
            slot.emplace();
        slot->entries[*name] =
            LandmarkEntry{{row, col}, static_cast<std::size_t>(index), provenance};
    }
    return frames;
}

// ---------------------------------------------------------------------------
// Flags CSV
// ---------------------------------------------------------------------------

inline void write_flags_csv(const FlagTable& table, const std::vector<std::string>& video_order,
                            const std::filesystem::path& path) {
    auto out = io_detail::open_for_write(path);
    out << kFlagsHeader << "\n";
    for (const auto& video_id : video_order) {
        auto it = table.find(video_id);
        if (it == table.end())
            continue;
        for (std::size_t f = 0; f < it->second.size(); ++f) {
            const ErrorFlags& fl = it->second[f];
            out << video_id << "," << f << "," << (fl.c1_error ? 1 : 0) << ","
                << (fl.c1_kind ? to_string(*fl.c1_kind) : "") << ","
                << (fl.c2_error ? 1 : 0) << ","
                << (fl.c2_kind ? to_string(*fl.c2_kind) : "") << ",";
            bool first = true;
            for (const auto& rule : fl.triggering_rules) {
                if (!first)
                    out << ";";
                out << rule;
                first = false;
            }
            out << "\n";
        }
    }
}

/// frame_counts gives the expected frame count per video id; every row must
/// reference a known video and in-range frame, and each flag row must satisfy
/// the kind-present-iff-error invariant.
inline FlagTable read_flags_csv(const std::filesystem::path& path,
                                const std::map<std::string, std::size_t>& frame_counts) {
    auto in = io_detail::open_for_read(path);
    const std::string file = path.string();
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || line != kFlagsHeader)
        throw DatasetError(DatasetError::Kind::Schema, file, 1,
                           std::string("expected header '") + kFlagsHeader + "'");
    FlagTable table;
    for (const auto& [video_id, count] : frame_counts)
        table[video_id].resize(count);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        const auto fields = io_detail::split(line, ',');
        long frame = 0;
        long c1 = 0;
        long c2 = 0;
        if (fields.size() != 7 || !io_detail::parse_long(fields[1], frame) ||
            !io_detail::parse_long(fields[2], c1) || !io_detail::parse_long(fields[4], c2) ||
            (c1 != 0 && c1 != 1) || (c2 != 0 && c2 != 1))
            throw DatasetError(DatasetError::Kind::MalformedRow, file, line_no,
                               "expected video_id,frame_index,c1_error,c1_kind,"
                               "c2_error,c2_kind,rules");
        auto it = table.find(fields[0]);
        if (it == table.end())
            throw DatasetError(DatasetError::Kind::Schema, file, line_no,
                               "unknown video id '" + fields[0] + "'");
        if (frame < 0 || static_cast<std::size_t>(frame) >= it->second.size())
            throw DatasetError(DatasetError::Kind::OutOfBounds, file, line_no,
                               "frame index out of range");
        ErrorFlags fl;
        fl.c1_error = c1 == 1;
        fl.c2_error = c2 == 1;
        if (!fields[3].empty()) {
            const auto kind = c1_kind_from_string(fields[3]);
            if (!kind)
                throw DatasetError(DatasetError::Kind::MalformedRow, file, line_no,
                                   "unknown c1 kind '" + fields[3] + "'");
            fl.c1_kind = kind;
        }
        if (!fields[5].empty()) {
            const auto kind = c2_kind_from_string(fields[5]);
            if (!kind)
                throw DatasetError(DatasetError::Kind::MalformedRow, file, line_no,
                                   "unknown c2 kind '" + fields[5] + "'");
            fl.c2_kind = kind;
        }
        if (!fields[6].empty())
            for (auto& rule : io_detail::split(fields[6], ';'))
                fl.triggering_rules.insert(rule);
        try {
            validate_flags(fl);
        } catch (const InvalidArgumentError& e) {
            throw DatasetError(DatasetError::Kind::MalformedRow, file, line_no, e.what());
        }
        it->second[static_cast<std::size_t>(frame)] = fl;
    }
    return table;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

inline void write_manifest(const DatasetManifest& manifest,
                           const std::filesystem::path& path) {
    nlohmann::json subjects = nlohmann::json::array();
    for (const auto& s : manifest.subjects) {
        nlohmann::json js{{"id", s.id}, {"videos", s.videos}};
        if (s.c3_reference)
            js["c3_reference"] = {{"row", s.c3_reference->row}, {"col", s.c3_reference->col}};
        subjects.push_back(js);
    }
    const nlohmann::json doc{{"version", manifest.version},
                             {"frame_width", manifest.frame_width},
                             {"frame_height", manifest.frame_height},
                             {"fps", manifest.fps},
                             {"subjects", subjects}};
    auto out = io_detail::open_for_write(path);
    out << doc.dump(2) << "\n";
}

inline DatasetManifest read_manifest(const std::filesystem::path& path) {
    auto in = io_detail::open_for_read(path);
    const std::string file = path.string();
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(DatasetError::Kind::Schema, file, 0, e.what());
    }
    DatasetManifest manifest;
    manifest.root = path.parent_path();
    try {
        manifest.version = doc.at("version").get<std::string>();
        if (manifest.version != kFormatVersion)
            throw DatasetError(DatasetError::Kind::Schema, file, 0,
                               "unsupported format version '" + manifest.version + "'");
        manifest.frame_width = doc.at("frame_width").get<int>();
        manifest.frame_height = doc.at("frame_height").get<int>();
        manifest.fps = doc.value("fps", kDefaultFps);
        for (const auto& js : doc.at("subjects")) {
            SubjectInfo s;
            s.id = js.at("id").get<std::string>();
            s.videos = js.at("videos").get<std::vector<std::string>>();
            if (js.contains("c3_reference"))
                s.c3_reference = PixelPoint{js["c3_reference"].at("row").get<double>(),
                                            js["c3_reference"].at("col").get<double>()};
            manifest.subjects.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(DatasetError::Kind::Schema, file, 0, e.what());
    }
    if (manifest.frame_width < 2 || manifest.frame_height < 2)
        throw DatasetError(DatasetError::Kind::Schema, file, 0, "frame dimensions too small");
    return manifest;
}

// ---------------------------------------------------------------------------
// Whole-dataset load and store
// ---------------------------------------------------------------------------

namespace io_detail {

inline void attach_landmarks(std::vector<FrameRecord>& frames,
                             std::vector<std::optional<LandmarkSet>> sets,
                             Provenance provenance, const std::string& file) {
    for (std::size_t f = 0; f < frames.size(); ++f) {
        if (!sets[f])
            continue;
        // Landmark indices must address the contour they annotate; entries
        // whose anchor contour is absent from the frame are rejected.
        const auto& contours =
            provenance == Provenance::Annotated ? frames[f].annotated : frames[f].predicted;
        for (const auto& [name, entry] : sets[f]->entries) {
            auto it = contours.find(contour_for_landmark(name));
            if (it == contours.end())
                throw DatasetError(DatasetError::Kind::Schema, file, 0,
                                   "frame " + std::to_string(f) + ": landmark " +
                                       to_string(name) + " has no anchor contour");
            if (entry.contour_index >= it->second.points.size() ||
                distance(it->second.points[entry.contour_index], entry.point) > kGeomEpsilon)
                throw DatasetError(DatasetError::Kind::Schema, file, 0,
                                   "frame " + std::to_string(f) + ": landmark " +
                                       to_string(name) +
                                       " does not match its indexed contour point");
        }
        if (provenance == Provenance::Annotated)
            frames[f].annotated_landmarks = std::move(*sets[f]);
        else
            frames[f].estimated_landmarks = std::move(*sets[f]);
    }
}

} // namespace io_detail

/**
 * Loads the dataset described by a manifest. Frame counts are taken from the
 * predicted C1 file of each video; all other per-video files must agree.
 * Missing optional files (C3 predictions, annotations, landmarks, rasters,
 * flags) are skipped silently; every structural defect raises DatasetError
 * with a file and line.
 */
inline Dataset load_dataset(const std::filesystem::path& manifest_path) {
    Dataset ds;
    ds.manifest = read_manifest(manifest_path);
    const std::filesystem::path root = ds.manifest.root;

    for (const auto& subject : ds.manifest.subjects) {
        for (const auto& video_id : subject.videos) {
            const std::filesystem::path dir = root / video_id;
            VideoSequence video;
            video.subject_id = subject.id;
            video.video_id = video_id;
            video.fps = ds.manifest.fps;

            std::size_t frame_count = 0;
            for (const bool annotated : {false, true}) {
                for (const ContourKind kind :
                     {ContourKind::C1, ContourKind::C2, ContourKind::C3}) {
                    const auto path = dir / io_detail::contour_file_name(kind, annotated);
                    const bool required =
                        !annotated && (kind == ContourKind::C1 || kind == ContourKind::C2);
                    if (!std::filesystem::exists(path)) {
                        if (required)
                            throw DatasetError(DatasetError::Kind::MissingFile, path.string(),
                                               0, "required contour file is missing");
                        continue;
                    }
                    auto contours = read_contour_csv(path, kind, ds.manifest.frame_height,
                                                     ds.manifest.frame_width);
                    if (video.frames.empty()) {
                        frame_count = contours.size();
                        video.frames.resize(frame_count);
                        for (std::size_t f = 0; f < frame_count; ++f) {
                            video.frames[f].video_id = video_id;
                            video.frames[f].frame_index = static_cast<int>(f);
                        }
                    } else if (contours.size() != frame_count) {
                        throw DatasetError(DatasetError::Kind::Schema, path.string(), 0,
                                           "frame count differs from other files of " +
                                               video_id);
                    }
                    for (std::size_t f = 0; f < frame_count; ++f) {
                        auto& slot = annotated ? video.frames[f].annotated
                                               : video.frames[f].predicted;
                        slot.emplace(kind, std::move(contours[f]));
                    }
                }
            }

            for (const Provenance provenance : {Provenance::Annotated, Provenance::Estimated}) {
                const auto path = dir / (provenance == Provenance::Annotated
                                             ? "landmarks_annotated.csv"
                                             : "landmarks_estimated.csv");
                if (!std::filesystem::exists(path))
                    continue;
                io_detail::attach_landmarks(
                    video.frames, read_landmark_csv(path, frame_count, provenance),
                    provenance, path.string());
            }

            const std::filesystem::path frames_dir = dir / "frames";
            if (std::filesystem::exists(frames_dir)) {
                for (std::size_t f = 0; f < frame_count; ++f) {
                    const auto path =
                        frames_dir / io_detail::frame_file_name(static_cast<int>(f));
                    Raster raster = read_pgm(path);
                    if (raster.width != ds.manifest.frame_width ||
                        raster.height != ds.manifest.frame_height)
                        throw DatasetError(DatasetError::Kind::Schema, path.string(), 0,
                                           "raster dimensions differ from manifest");
                    video.frames[f].raster = std::move(raster);
                }
            }

            ds.videos.push_back(std::move(video));
        }
    }

    const std::filesystem::path flags_path = root / kFlagsFileName;
    if (std::filesystem::exists(flags_path)) {
        std::map<std::string, std::size_t> counts;
        for (const auto& v : ds.videos)
            counts[v.video_id] = v.frames.size();
        ds.truth_flags = read_flags_csv(flags_path, counts);
    }
    return ds;
}

/// Writes a dataset under out_dir in the layout load_dataset reads.
/// Reruns over identical data produce byte-identical trees.
inline void store_dataset(const Dataset& ds, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    DatasetManifest manifest = ds.manifest;
    manifest.root = out_dir;
    write_manifest(manifest, out_dir / kManifestFileName);

    std::vector<std::string> video_order;
    for (const auto& video : ds.videos) {
        video_order.push_back(video.video_id);
        const std::filesystem::path dir = out_dir / video.video_id;
        std::filesystem::create_directories(dir);

        for (const bool annotated : {false, true}) {
            for (const ContourKind kind : {ContourKind::C1, ContourKind::C2, ContourKind::C3}) {
                std::vector<const Contour*> per_frame(video.frames.size(), nullptr);
                bool any = false;
                for (std::size_t f = 0; f < video.frames.size(); ++f) {
                    const auto& contours =
                        annotated ? video.frames[f].annotated : video.frames[f].predicted;
                    auto it = contours.find(kind);
                    if (it != contours.end()) {
                        per_frame[f] = &it->second;
                        any = true;
                    }
                }
                if (any)
                    write_contour_csv(per_frame,
                                      dir / io_detail::contour_file_name(kind, annotated));
            }
        }

        for (const Provenance provenance : {Provenance::Annotated, Provenance::Estimated}) {
            std::vector<const LandmarkSet*> per_frame(video.frames.size(), nullptr);
            bool any = false;
            for (std::size_t f = 0; f < video.frames.size(); ++f) {
                const auto& slot = provenance == Provenance::Annotated
                                       ? video.frames[f].annotated_landmarks
                                       : video.frames[f].estimated_landmarks;
                if (slot) {
                    per_frame[f] = &*slot;
                    any = true;
                }
            }
            if (any)
                write_landmark_csv(per_frame, dir / (provenance == Provenance::Annotated
                                                         ? "landmarks_annotated.csv"
                                                         : "landmarks_estimated.csv"));
        }

        bool any_raster = false;
        for (const auto& frame : video.frames)
            any_raster = any_raster || frame.raster.has_value();
        if (any_raster) {
            std::filesystem::create_directories(dir / "frames");
            for (std::size_t f = 0; f < video.frames.size(); ++f) {
                if (video.frames[f].raster)
                    write_pgm(*video.frames[f].raster,
                              dir / "frames" / io_detail::frame_file_name(static_cast<int>(f)));
            }
        }
    }

    if (!ds.truth_flags.empty())
        write_flags_csv(ds.truth_flags, video_order, out_dir / kFlagsFileName);
}

inline void write_correction_log(const std::vector<CorrectionLogEntry>& log,
                                 const std::filesystem::path& path) {
    auto out = io_detail::open_for_write(path);
    out << "video_id,frame_index,contour,action,detail\n";
    for (const auto& e : log)
        out << e.video_id << "," << e.frame_index << "," << e.contour << "," << e.action
            << "," << e.detail << "\n";
}

} // namespace atbqc
