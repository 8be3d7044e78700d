#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "svseg/energy.hpp"
#include "svseg/pipeline.hpp"

namespace svseg {

struct RunReport {
    std::vector<IterationReport> iterations; // strictly increasing iteration numbers
    std::vector<std::pair<std::string, std::string>> config;
    std::uint64_t suite_hash = 0;
};

/// Key/value echo of every setting that influences a run.
std::vector<std::pair<std::string, std::string>> config_echo(const PipelineConfig& config);

/// Checks the iteration ordering; throws InvalidArgument otherwise.
void validate_report(const RunReport& report);

inline constexpr const char* kCurvesHeader = "iteration,eval_iou,mean_omega,corpus_size";

std::string format_curves(const RunReport& report);
void emit_curves(const RunReport& report, const std::filesystem::path& path);

/// Line-based key=value text: config, suite hash, then one block per iteration.
std::string format_report(const RunReport& report);
void emit_report(const RunReport& report, const std::filesystem::path& path);

inline constexpr Rgb kOverlayColor{255, 0, 0};

/// Mask pixels 4-adjacent to background or to the frame edge.
BinaryMask mask_boundary(const BinaryMask& mask);
RgbImage overlay(const RgbImage& frame, const BinaryMask& mask);
void emit_overlay(const RgbImage& frame, const BinaryMask& mask, const std::filesystem::path& path);

std::string format_energy_breakdown(const EnergyBreakdown& e);

} // namespace svseg
