#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "msense/harness/csv.hpp"

namespace msense::harness {

enum class Metric { Train, Test, Both };

/// SVG document with one panel per metric. Each series is drawn as a solid
/// mean curve with dotted companions at mean +- std/2. Panels are <g> groups
/// with ids "train" and "test"; curve paths carry class "mean" or "band".
std::string render_svg(const std::vector<SeriesData>& series, bool y_log, Metric metric);

/// Reads every CSV before writing, so a bad input leaves no output file.
void render_plot(const std::vector<std::filesystem::path>& csv_paths,
                 const std::filesystem::path& output_svg, bool y_log,
                 Metric metric = Metric::Both);

}  // namespace msense::harness
