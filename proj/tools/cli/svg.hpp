#pragma once

// Static SVG figures: ternary scatter, reallocation curves with shaded
// interval bands, and per-profile boxplots.

#include <array>
#include <string>
#include <vector>

namespace hac24::cli {

std::string xml_escape(const std::string& s);

/// Points are 3-part compositions (closed); vertices carry `labels`.
/// `groups` (optional, same length) colors the points.
std::string ternary_svg(const std::vector<std::array<double, 3>>& points, const std::array<std::string, 3>& labels,
                        const std::vector<int>& groups = {});

struct CurveSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> lo;
    std::vector<double> hi;
};

std::string curve_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                      const std::vector<CurveSeries>& series);

struct BoxStats {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double whisker_lo = 0.0;  // most extreme points within 1.5 IQR
    double whisker_hi = 0.0;
    std::size_t n = 0;
};

BoxStats box_stats(std::vector<double> values);

/// values[panel][group]: one panel per indicator, groups left to right.
std::string boxplot_svg(const std::vector<std::string>& panels, const std::vector<std::string>& groups,
                        const std::vector<std::vector<std::vector<double>>>& values, const std::string& y_label);

}  // namespace hac24::cli
