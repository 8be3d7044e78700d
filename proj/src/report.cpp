#include "svseg/report.hpp"

#include <cstdio>

#include "svseg/error.hpp"

namespace svseg {

namespace {

std::string fixed(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::vector<std::pair<std::string, std::string>> config_echo(const PipelineConfig& c) {
    auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
    return {
        {"det_threshold", exact(c.det_threshold)},
        {"pairwise", flag(c.use_pairwise)},
        {"higher_order", flag(c.use_higher_order)},
        {"sample_weights", flag(c.use_sample_weights)},
        {"negatives", flag(c.use_negatives)},
        {"negative_omega", "1.0"},
        {"max_per_video", std::to_string(c.max_per_video)},
        {"negative_fraction", exact(c.negative_fraction)},
        {"iterations", std::to_string(c.iterations)},
        {"early_stop_points", exact(c.early_stop_points)},
        {"seed", std::to_string(c.seed)},
        {"shot_turnover", exact(c.shot_turnover)},
        {"keyframe_churn", std::to_string(c.keyframe_churn)},
        {"epochs", std::to_string(c.train.epochs)},
        {"lr0", exact(c.train.lr0)},
        {"decay_every", std::to_string(c.train.decay_every)},
        {"decay_factor", exact(c.train.decay_factor)},
        {"batch_size", std::to_string(c.train.batch_size)},
        {"max_pixels", std::to_string(c.train.max_pixels)},
    };
}

void validate_report(const RunReport& report) {
    if (report.iterations.empty())
        throw InvalidArgument("report has no iterations");
    for (std::size_t i = 1; i < report.iterations.size(); ++i)
        if (report.iterations[i].iteration <= report.iterations[i - 1].iteration)
            throw InvalidArgument("report iterations are not strictly increasing");
}

std::string format_curves(const RunReport& report) {
    validate_report(report);
    std::string out = std::string(kCurvesHeader) + '\n';
    for (const auto& it : report.iterations)
        out += std::to_string(it.iteration) + ',' + fixed(it.eval_iou) + ',' + fixed(it.mean_omega) + ',' +
               std::to_string(it.corpus_size) + '\n';
    return out;
}

void emit_curves(const RunReport& report, const std::filesystem::path& path) {
    write_text_file(path, format_curves(report));
}

std::string format_report(const RunReport& report) {
    validate_report(report);
    std::string out;
    for (const auto& [k, v] : report.config)
        out += "config." + k + '=' + v + '\n';
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(report.suite_hash));
    out += std::string("suite_hash=") + hash + '\n';
    out += "iterations_run=" + std::to_string(report.iterations.size()) + '\n';
    for (const auto& it : report.iterations) {
        const std::string p = "iter." + std::to_string(it.iteration) + '.';
        out += p + "eval_iou=" + exact(it.eval_iou) + '\n';
        out += p + "corpus_size=" + std::to_string(it.corpus_size) + '\n';
        out += p + "negative_count=" + std::to_string(it.negative_count) + '\n';
        out += p + "mean_omega=" + exact(it.mean_omega) + '\n';
        out += p + "solves=" + std::to_string(it.solves) + '\n';
        out += p + "max_certificate_gap=" + exact(it.max_certificate_gap) + '\n';
        out += p + "loss=";
        for (std::size_t i = 0; i < it.loss_curve.size(); ++i)
            out += (i ? "," : "") + exact(it.loss_curve[i]);
        out += '\n';
        for (const auto& v : it.videos) {
            out += p + "video." + v.name + ".selected=";
            bool first = true;
            for (std::size_t i = 0; i < v.frames.size(); ++i)
                if (v.selected[i]) {
                    out += (first ? "" : ",") + std::to_string(v.frames[i]);
                    first = false;
                }
            out += '\n';
            out += p + "video." + v.name + ".omega=";
            for (std::size_t i = 0; i < v.frames.size(); ++i)
                out += (i ? "," : "") + std::to_string(v.frames[i]) + ':' + exact(v.omegas[i]);
            out += '\n';
        }
    }
    return out;
}

void emit_report(const RunReport& report, const std::filesystem::path& path) {
    write_text_file(path, format_report(report));
}

BinaryMask mask_boundary(const BinaryMask& mask) {
    const int w = mask.width(), h = mask.height();
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!mask(x, y))
                continue;
            const bool edge = x == 0 || y == 0 || x == w - 1 || y == h - 1 || !mask(x - 1, y) ||
                              !mask(x + 1, y) || !mask(x, y - 1) || !mask(x, y + 1);
            out(x, y) = edge ? 1 : 0;
        }
    return out;
}

RgbImage overlay(const RgbImage& frame, const BinaryMask& mask) {
    if (!frame.same_shape(mask))
        throw InvalidArgument("overlay: frame and mask sizes differ");
    RgbImage out = frame;
    const BinaryMask edge = mask_boundary(mask);
    for (std::size_t p = 0; p < edge.size(); ++p)
        if (edge[p])
            out[p] = kOverlayColor;
    return out;
}

void emit_overlay(const RgbImage& frame, const BinaryMask& mask, const std::filesystem::path& path) {
    write_ppm(path, overlay(frame, mask));
}

std::string format_energy_breakdown(const EnergyBreakdown& e) {
    return "unary=" + exact(e.unary) + "\npairwise=" + exact(e.pairwise) + "\nhigher_order=" +
           exact(e.higher_order) + "\ntotal=" + exact(e.total()) + '\n';
}

} // namespace svseg
