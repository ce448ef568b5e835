// Command-line frontend for the air-tissue boundary quality-control
// pipeline: benchmark synthesis, error detection, contour correction and
// cross-validated evaluation.
//
// Exit codes: 0 success, 1 data or processing error, 2 usage error.

#include <atomic>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "atbqc/correction.hpp"
#include "atbqc/dataset_io.hpp"
#include "atbqc/detection.hpp"
#include "atbqc/harness.hpp"
#include "atbqc/synthetic.hpp"

namespace {

using namespace atbqc;

/// Runs fn(0..count-1) on up to `jobs` threads. Callers collect results into
/// index-addressed slots, so the output order never depends on scheduling.
template <typename Fn>
void parallel_indexed(std::size_t count, int jobs, Fn&& fn) {
    if (jobs <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const auto worker = [&]() {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
            try {
                fn(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error)
                    first_error = std::current_exception();
            }
        }
    };
    const int n = std::min<int>(jobs, static_cast<int>(count));
    pool.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t)
        pool.emplace_back(worker);
    for (auto& th : pool)
        th.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

std::vector<std::string> make_subject_ids(int count) {
    if (count == 10)
        return SynthParams{}.subjects;
    std::vector<std::string> ids;
    for (int i = 1; i <= count; ++i)
        ids.push_back("S" + std::to_string(i));
    return ids;
}

/// Mean predicted C2 point count over the whole dataset; standalone
/// detection has no validation split to derive it from.
double dataset_reference_count(const Dataset& ds) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& video : ds.videos) {
        for (const auto& frame : video.frames) {
            auto it = frame.predicted.find(ContourKind::C2);
            if (it != frame.predicted.end()) {
                sum += static_cast<double>(it->second.points.size());
                ++n;
            }
        }
    }
    if (n == 0)
        throw EmptyInputError("detect: dataset has no predicted C2 contours");
    return sum / static_cast<double>(n);
}

std::optional<SubjectReference> manifest_reference(const Dataset& ds,
                                                   const std::string& subject_id) {
    const SubjectInfo* info = ds.find_subject(subject_id);
    if (!info || !info->c3_reference)
        return std::nullopt;
    return SubjectReference{subject_id, *info->c3_reference};
}

FlagTable load_flag_table(const Dataset& ds, const std::string& flags_path) {
    std::map<std::string, std::size_t> counts;
    for (const auto& video : ds.videos)
        counts[video.video_id] = video.frames.size();
    if (!flags_path.empty())
        return read_flags_csv(flags_path, counts);
    if (ds.truth_flags.empty())
        throw ConfigError("no flags given and the dataset carries no flags.csv");
    return ds.truth_flags;
}

int run_synth(const SynthParams& params, const std::string& out_dir) {
    const Dataset ds = generate_dataset(params);
    store_dataset(ds, out_dir);
    std::cerr << "wrote " << ds.videos.size() << " videos x " << params.frames_per_video
              << " frames to " << out_dir << "\n";
    return 0;
}

int run_detect(const std::string& manifest, const std::string& out_csv,
               const DetectorThresholds& thresholds, int jobs) {
    const Dataset ds = load_dataset(manifest);
    const double reference_count = dataset_reference_count(ds);
    for (const auto& video : ds.videos) {
        if (video.frames.size() < 2)
            std::cerr << "warning: video " << video.video_id
                      << " has a single frame; the mean-velum rule cannot fire\n";
        if (!manifest_reference(ds, video.subject_id))
            std::cerr << "warning: subject " << video.subject_id
                      << " has no pharyngeal-wall reference; that rule is skipped\n";
    }
    FlagTable table;
    std::vector<std::string> order;
    for (const auto& video : ds.videos) {
        order.push_back(video.video_id);
        table[video.video_id] = {};
    }
    parallel_indexed(ds.videos.size(), jobs, [&](std::size_t i) {
        const VideoSequence& video = ds.videos[i];
        table[video.video_id] = detect_video(video, manifest_reference(ds, video.subject_id),
                                             thresholds, reference_count);
    });
    write_flags_csv(table, order, out_csv);
    std::size_t c1 = 0;
    std::size_t c2 = 0;
    for (const auto& [id, flags] : table)
        for (const auto& f : flags) {
            c1 += f.c1_error ? 1 : 0;
            c2 += f.c2_error ? 1 : 0;
        }
    std::cerr << "flagged " << c1 << " C1 frames and " << c2 << " C2 frames; wrote "
              << out_csv << "\n";
    return 0;
}

int run_correct(const std::string& manifest, const std::string& flags_path,
                const std::string& out_dir, int jobs) {
    Dataset ds = load_dataset(manifest);
    const FlagTable flags = load_flag_table(ds, flags_path);
    for (const auto& video : ds.videos)
        if (!flags.count(video.video_id))
            throw ConfigError("correct: no flags for video " + video.video_id);

    std::vector<VideoCorrection> corrected(ds.videos.size());
    parallel_indexed(ds.videos.size(), jobs, [&](std::size_t i) {
        corrected[i] = correct_video(ds.videos[i], flags.at(ds.videos[i].video_id));
    });

    Dataset out = std::move(ds);
    std::vector<CorrectionLogEntry> log;
    for (std::size_t i = 0; i < out.videos.size(); ++i) {
        out.videos[i] = std::move(corrected[i].video);
        log.insert(log.end(), corrected[i].log.begin(), corrected[i].log.end());
    }
    // The stored flags.csv records which flags the corrections applied.
    out.truth_flags = flags;
    store_dataset(out, out_dir);
    write_correction_log(log, std::filesystem::path(out_dir) / "correction_log.csv");
    std::cerr << "corrected " << out.videos.size() << " videos; " << log.size()
              << " log entries; wrote " << out_dir << "\n";
    return 0;
}

int run_evaluate(const std::string& manifest, const std::string& out_dir,
                 const std::string& config_path) {
    const Dataset ds = load_dataset(manifest);
    const HarnessConfig cfg =
        config_path.empty() ? HarnessConfig{} : parse_harness_config(config_path);
    const EvaluationReport report = evaluate(ds, cfg);
    write_report(report, out_dir);
    for (const auto& fold : report.folds)
        for (const auto& s : fold.test_scores)
            if (s.rule == "combined-c1" || s.rule == "combined-c2")
                std::cout << "fold " << fold.fold_index << " " << s.rule << " F="
                          << io_detail::format_double(s.f.value) << " (tp=" << s.tp
                          << " fp=" << s.fp << " fn=" << s.fn << ")\n";
    for (const auto& a : report.aggregates)
        std::cout << a.metric << ": pre " << io_detail::format_double(a.pre_mean) << " post "
                  << io_detail::format_double(a.post_mean) << " improvement "
                  << io_detail::format_double(a.improvement_pct) << "% (n=" << a.count
                  << ", excluded=" << a.excluded << ")\n";
    std::cerr << "wrote report to " << out_dir << "\n";
    return 0;
}

int run_report(const std::string& manifest, const std::string& flags_path,
               const std::string& out_csv) {
    const Dataset ds = load_dataset(manifest);
    const FlagTable flags = load_flag_table(ds, flags_path);
    for (const auto& video : ds.videos) {
        auto it = flags.find(video.video_id);
        if (it == flags.end())
            continue;
        std::string line;
        std::size_t c1 = 0;
        std::size_t c2 = 0;
        for (const auto& f : it->second) {
            const bool e1 = f.c1_error;
            const bool e2 = f.c2_error;
            line += e1 && e2 ? 'X' : e1 ? '1' : e2 ? '2' : '.';
            c1 += e1 ? 1 : 0;
            c2 += e2 ? 1 : 0;
        }
        std::cout << video.video_id << " [" << line << "] c1=" << c1 << " c2=" << c2 << "\n";
    }
    if (!out_csv.empty()) {
        auto out = io_detail::open_for_write(out_csv);
        out << "video_id,frame_index,c1_flag,c2_flag\n";
        for (const auto& video : ds.videos) {
            auto it = flags.find(video.video_id);
            if (it == flags.end())
                continue;
            for (std::size_t f = 0; f < it->second.size(); ++f) {
                const ErrorFlags& fl = it->second[f];
                if (fl.c1_error || fl.c2_error)
                    out << video.video_id << "," << f << "," << (fl.c1_error ? 1 : 0) << ","
                        << (fl.c2_error ? 1 : 0) << "\n";
            }
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Air-tissue boundary quality control for rtMRI contours"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic benchmark dataset");
    SynthParams params;
    std::string synth_out;
    int subject_count = static_cast<int>(params.subjects.size());
    synth->add_option("--out", synth_out, "Output dataset directory")->required();
    synth->add_option("--seed", params.seed, "Generator seed");
    synth->add_option("--frames", params.frames_per_video, "Frames per video");
    synth->add_option("--videos-per-subject", params.videos_per_subject, "Videos per subject");
    synth->add_option("--subject-count", subject_count, "Number of subjects");
    synth->add_option("--c1-incomplete-rate", params.rates.c1_incomplete,
                      "Incomplete-C1 injection rate");
    synth->add_option("--c1-frame-rate", params.rates.c1_frame, "C1 frame-error rate");
    synth->add_option("--c2-frame-rate", params.rates.c2_frame, "C2 frame-error rate");
    synth->add_option("--c2-tb-rate", params.rates.c2_tb, "Tongue-base error rate");
    synth->add_flag_callback(
        "--no-rasters", [&params]() { params.paint_rasters = false; },
        "Skip writing PGM frames");

    // detect
    auto* detect = app.add_subcommand("detect", "Flag erroneous frames");
    std::string detect_data, detect_out;
    DetectorThresholds thresholds;
    int detect_jobs = 1;
    detect->add_option("--data", detect_data, "Dataset manifest.json")->required();
    detect->add_option("--out", detect_out, "Output flags CSV")->required();
    detect->add_option("--mean-vel-dist", thresholds.mean_vel_dist,
                       "Mean-velum deviation threshold");
    detect->add_option("--vel-c3-dist", thresholds.vel_to_c3_dist,
                       "Velum-to-wall distance threshold");
    detect->add_option("--point-count-fraction", thresholds.point_count_fraction,
                       "C2 point-count fraction threshold");
    detect->add_option("--ll-tb-slope", thresholds.ll_tb_slope, "LL-TB slope threshold");
    detect->add_option("--ll-tb-dist", thresholds.ll_tb_dist, "LL-TB distance threshold");
    detect->add_option("--jobs", detect_jobs, "Worker threads");

    // correct
    auto* correct = app.add_subcommand("correct", "Correct flagged frames");
    std::string correct_data, correct_flags, correct_out;
    int correct_jobs = 1;
    correct->add_option("--data", correct_data, "Dataset manifest.json")->required();
    correct->add_option("--flags", correct_flags,
                        "Flags CSV (default: the dataset's flags.csv)");
    correct->add_option("--out", correct_out, "Output dataset directory")->required();
    correct->add_option("--jobs", correct_jobs, "Worker threads");

    // evaluate
    auto* evaluate_cmd =
        app.add_subcommand("evaluate", "Cross-validated threshold selection and metrics");
    std::string eval_data, eval_out, eval_config;
    evaluate_cmd->add_option("--data", eval_data, "Dataset manifest.json")->required();
    evaluate_cmd->add_option("--out", eval_out, "Output report directory")->required();
    evaluate_cmd->add_option("--config", eval_config, "Harness key=value config file");

    // report
    auto* report_cmd = app.add_subcommand("report", "Render flags as per-video line plots");
    std::string report_data, report_flags, report_out;
    report_cmd->add_option("--data", report_data, "Dataset manifest.json")->required();
    report_cmd->add_option("--flags", report_flags,
                           "Flags CSV (default: the dataset's flags.csv)");
    report_cmd->add_option("--out", report_out, "Optional error-positions CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) {
            params.subjects = make_subject_ids(subject_count);
            return run_synth(params, synth_out);
        }
        if (detect->parsed())
            return run_detect(detect_data, detect_out, thresholds, detect_jobs);
        if (correct->parsed())
            return run_correct(correct_data, correct_flags, correct_out, correct_jobs);
        if (evaluate_cmd->parsed())
            return run_evaluate(eval_data, eval_out, eval_config);
        if (report_cmd->parsed())
            return run_report(report_data, report_flags, report_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
