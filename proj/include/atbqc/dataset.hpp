#pragma once

/**
 * @file dataset.hpp
 * @brief In-memory dataset model: rasters, frames, videos, manifest.
 */

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "atbqc/flags.hpp"
#include "atbqc/geometry.hpp"

namespace atbqc {

/// On-disk format version tag carried in every manifest.
inline constexpr const char* kFormatVersion = "atbqc-v1";

inline constexpr int kDefaultFrameSize = 68;
inline constexpr double kDefaultFps = 23.18;

/// Grayscale frame raster, row-major, 8-bit.
struct Raster {
    int height = kDefaultFrameSize;
    int width = kDefaultFrameSize;
    std::vector<std::uint8_t> data;

    std::uint8_t at(int r, int c) const {
        return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(width) +
                    static_cast<std::size_t>(c)];
    }
    std::uint8_t& at(int r, int c) {
        return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(width) +
                    static_cast<std::size_t>(c)];
    }
};

struct FrameRecord {
    std::string video_id;
    int frame_index = 0;
    std::optional<Raster> raster;
    std::map<ContourKind, Contour> predicted;
    // Empty map means no annotation for this frame.
    std::map<ContourKind, Contour> annotated;
    std::optional<LandmarkSet> annotated_landmarks;
    std::optional<LandmarkSet> estimated_landmarks;
};

struct VideoSequence {
    std::string subject_id;
    std::string video_id;
    std::vector<FrameRecord> frames;
    double fps = kDefaultFps;
};

struct SubjectInfo {
    std::string id;
    std::vector<std::string> videos;
    /// Mean nearest pharyngeal-wall point, used by the VEL-to-C3 detector.
    std::optional<PixelPoint> c3_reference;
};

struct DatasetManifest {
    std::filesystem::path root;
    int frame_width = kDefaultFrameSize;
    int frame_height = kDefaultFrameSize;
    double fps = kDefaultFps;
    std::vector<SubjectInfo> subjects;
    std::string version = kFormatVersion;
};

/// A loaded dataset. truth_flags is present only when the source carries
/// ground-truth error labels (synthetic data or prior detection output).
struct Dataset {
    DatasetManifest manifest;
    std::vector<VideoSequence> videos;
    FlagTable truth_flags;

    const VideoSequence* find_video(const std::string& video_id) const {
        for (const auto& v : videos)
            if (v.video_id == video_id) return &v;
        return nullptr;
    }
    const SubjectInfo* find_subject(const std::string& subject_id) const {
        for (const auto& s : manifest.subjects)
            if (s.id == subject_id) return &s;
        return nullptr;
    }
};

} // namespace atbqc
