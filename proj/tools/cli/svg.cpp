#include "cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "hac24/errors.hpp"
#include "hac24/ingest.hpp"

namespace hac24::cli {

namespace {

const char* const kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"};

const char* color(std::size_t i) { return kPalette[i % (sizeof kPalette / sizeof kPalette[0])]; }

// Fixed precision keeps files small and diffs stable.
std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s = buf;
    if (s == "-0.00") s = "0.00";
    return s;
}

std::string header(double w, double h) {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) +
           "\" height=\"" + num(h) + "\" viewBox=\"0 0 " + num(w) + " " + num(h) +
           "\" font-family=\"sans-serif\" font-size=\"12\">\n";
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void pad() {
        if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
        if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
        const double m = 0.05 * (hi - lo);
        lo -= m;
        hi += m;
    }
};

// Roughly five round tick values covering [lo, hi].
std::vector<double> ticks(double lo, double hi) {
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    }
    std::vector<double> out;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) out.push_back(std::abs(t) < 1e-12 ? 0.0 : t);
    return out;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string ternary_svg(const std::vector<std::array<double, 3>>& points, const std::array<std::string, 3>& labels,
                        const std::vector<int>& groups) {
    if (!groups.empty() && groups.size() != points.size()) throw DataError("one group per ternary point is needed");
    const double side = 420.0, left = 60.0, base = 440.0;
    const double h = side * std::sqrt(3.0) / 2.0;
    auto px = [&](double u) { return left + side * u; };
    auto py = [&](double v) { return base - side * v; };
    std::ostringstream o;
    o << header(left * 2 + side, base + 50.0);
    o << "<g class=\"frame\" fill=\"none\" stroke=\"#333\">\n";
    o << "<polygon points=\"" << num(px(0)) << ',' << num(py(0)) << ' ' << num(px(1)) << ',' << num(py(0)) << ' '
      << num(px(0.5)) << ',' << num(base - h) << "\"/>\n";
    // gridlines at 20% steps of each part
    for (int g = 1; g < 5; ++g) {
        const double t = g / 5.0;
        const double s3 = std::sqrt(3.0) / 2.0;
        // part2 = t: horizontal line
        o << "<line class=\"grid\" stroke=\"#ccc\" x1=\"" << num(px(t / 2)) << "\" y1=\"" << num(py(t * s3)) << "\" x2=\""
          << num(px(1 - t / 2)) << "\" y2=\"" << num(py(t * s3)) << "\"/>\n";
        // part1 = t
        o << "<line class=\"grid\" stroke=\"#ccc\" x1=\"" << num(px(t)) << "\" y1=\"" << num(py(0)) << "\" x2=\""
          << num(px(t + (1 - t) / 2)) << "\" y2=\"" << num(py((1 - t) * s3)) << "\"/>\n";
        // part0 = t
        o << "<line class=\"grid\" stroke=\"#ccc\" x1=\"" << num(px(1 - t)) << "\" y1=\"" << num(py(0)) << "\" x2=\""
          << num(px((1 - t) / 2)) << "\" y2=\"" << num(py((1 - t) * s3)) << "\"/>\n";
    }
    o << "</g>\n";
    o << "<g class=\"vertices\" text-anchor=\"middle\">\n";
    o << "<text class=\"vertex\" x=\"" << num(px(0)) << "\" y=\"" << num(py(0) + 20) << "\">" << xml_escape(labels[0])
      << "</text>\n";
    o << "<text class=\"vertex\" x=\"" << num(px(1)) << "\" y=\"" << num(py(0) + 20) << "\">" << xml_escape(labels[1])
      << "</text>\n";
    o << "<text class=\"vertex\" x=\"" << num(px(0.5)) << "\" y=\"" << num(base - h - 10) << "\">"
      << xml_escape(labels[2]) << "</text>\n";
    o << "</g>\n<g class=\"points\" fill-opacity=\"0.5\">\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        const double s = p[0] + p[1] + p[2];
        if (!(s > 0.0)) throw DataError("ternary point with a non-positive total");
        const double u = (p[1] + 0.5 * p[2]) / s;
        const double v = (std::sqrt(3.0) / 2.0) * p[2] / s;
        o << "<circle cx=\"" << num(px(u)) << "\" cy=\"" << num(py(v)) << "\" r=\"2\" fill=\""
          << (groups.empty() ? "#1b9e77" : color(static_cast<std::size_t>(groups[i]))) << "\"/>\n";
    }
    o << "</g>\n</svg>\n";
    return o.str();
}

std::string curve_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                      const std::vector<CurveSeries>& series) {
    const double w = 640.0, h = 420.0, ml = 70.0, mr = 150.0, mt = 40.0, mb = 55.0;
    Range xr, yr;
    for (const auto& s : series) {
        if (s.y.size() != s.x.size() || s.lo.size() != s.x.size() || s.hi.size() != s.x.size()) {
            throw DataError("curve series '" + s.label + "' has mismatched lengths");
        }
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xr.add(s.x[i]);
            yr.add(s.lo[i]);
            yr.add(s.hi[i]);
            yr.add(s.y[i]);
        }
    }
    yr.add(0.0);
    xr.pad();
    yr.pad();
    auto px = [&](double x) { return ml + (w - ml - mr) * (x - xr.lo) / (xr.hi - xr.lo); };
    auto py = [&](double y) { return h - mb - (h - mt - mb) * (y - yr.lo) / (yr.hi - yr.lo); };

    std::ostringstream o;
    o << header(w, h);
    o << "<text class=\"title\" x=\"" << num(w / 2) << "\" y=\"20\" text-anchor=\"middle\">" << xml_escape(title)
      << "</text>\n";
    o << "<g class=\"axes\" stroke=\"#333\">\n";
    o << "<line x1=\"" << num(ml) << "\" y1=\"" << num(h - mb) << "\" x2=\"" << num(w - mr) << "\" y2=\"" << num(h - mb)
      << "\"/>\n";
    o << "<line x1=\"" << num(ml) << "\" y1=\"" << num(mt) << "\" x2=\"" << num(ml) << "\" y2=\"" << num(h - mb)
      << "\"/>\n";
    o << "<line class=\"zero\" stroke-dasharray=\"4 3\" x1=\"" << num(ml) << "\" y1=\"" << num(py(0)) << "\" x2=\""
      << num(w - mr) << "\" y2=\"" << num(py(0)) << "\"/>\n";
    o << "</g>\n<g class=\"ticks\" font-size=\"10\">\n";
    for (double t : ticks(xr.lo, xr.hi)) {
        o << "<text x=\"" << num(px(t)) << "\" y=\"" << num(h - mb + 14) << "\" text-anchor=\"middle\">"
          << tick_label(t) << "</text>\n";
    }
    for (double t : ticks(yr.lo, yr.hi)) {
        o << "<text x=\"" << num(ml - 6) << "\" y=\"" << num(py(t) + 3) << "\" text-anchor=\"end\">" << tick_label(t)
          << "</text>\n";
    }
    o << "</g>\n";
    o << "<text class=\"xlabel\" x=\"" << num(ml + (w - ml - mr) / 2) << "\" y=\"" << num(h - 15)
      << "\" text-anchor=\"middle\">" << xml_escape(x_label) << "</text>\n";
    o << "<text class=\"ylabel\" transform=\"translate(18," << num(mt + (h - mt - mb) / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(y_label) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        o << "<g class=\"series\" data-label=\"" << xml_escape(s.label) << "\">\n";
        o << "<polygon class=\"ci-band\" fill=\"" << color(k) << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) o << (i ? " " : "") << num(px(s.x[i])) << ',' << num(py(s.hi[i]));
        for (std::size_t i = s.x.size(); i-- > 0;) o << ' ' << num(px(s.x[i])) << ',' << num(py(s.lo[i]));
        o << "\"/>\n";
        o << "<polyline class=\"curve\" fill=\"none\" stroke=\"" << color(k) << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) o << (i ? " " : "") << num(px(s.x[i])) << ',' << num(py(s.y[i]));
        o << "\"/>\n";
        const double ly = mt + 18.0 * static_cast<double>(k);
        o << "<line class=\"legend\" stroke=\"" << color(k) << "\" stroke-width=\"2\" x1=\"" << num(w - mr + 12)
          << "\" y1=\"" << num(ly) << "\" x2=\"" << num(w - mr + 32) << "\" y2=\"" << num(ly) << "\"/>\n";
        o << "<text x=\"" << num(w - mr + 36) << "\" y=\"" << num(ly + 4) << "\">" << xml_escape(s.label) << "</text>\n";
        o << "</g>\n";
    }
    o << "</svg>\n";
    return o.str();
}

BoxStats box_stats(std::vector<double> values) {
    BoxStats b;
    b.n = values.size();
    if (values.empty()) return b;
    std::sort(values.begin(), values.end());
    b.q1 = quantile(values, 0.25);
    b.median = quantile(values, 0.5);
    b.q3 = quantile(values, 0.75);
    const double iqr = b.q3 - b.q1;
    b.whisker_lo = b.q1;
    b.whisker_hi = b.q3;
    for (double v : values) {
        if (v >= b.q1 - 1.5 * iqr) {
            b.whisker_lo = std::min(b.q1, v);
            break;
        }
    }
    for (auto it = values.rbegin(); it != values.rend(); ++it) {
        if (*it <= b.q3 + 1.5 * iqr) {
            b.whisker_hi = std::max(b.q3, *it);
            break;
        }
    }
    return b;
}

std::string boxplot_svg(const std::vector<std::string>& panels, const std::vector<std::string>& groups,
                        const std::vector<std::vector<std::vector<double>>>& values, const std::string& y_label) {
    if (values.size() != panels.size()) throw DataError("one value set per panel is needed");
    const double pw = 240.0, ph = 300.0, ml = 60.0, mt = 40.0, mb = 50.0;
    const double w = ml + pw * static_cast<double>(panels.size()) + 20.0, h = mt + ph + mb;
    std::ostringstream o;
    o << header(w, h);
    for (std::size_t p = 0; p < panels.size(); ++p) {
        if (values[p].size() != groups.size()) throw DataError("one value set per group is needed");
        Range yr;
        std::vector<BoxStats> stats;
        for (const auto& g : values[p]) {
            stats.push_back(box_stats(g));
            for (double v : g) yr.add(v);
        }
        yr.pad();
        const double x0 = ml + pw * static_cast<double>(p);
        auto py = [&](double y) { return mt + ph - ph * (y - yr.lo) / (yr.hi - yr.lo); };
        o << "<g class=\"panel\" data-indicator=\"" << xml_escape(panels[p]) << "\">\n";
        o << "<text x=\"" << num(x0 + pw / 2) << "\" y=\"" << num(mt - 12) << "\" text-anchor=\"middle\">"
          << xml_escape(panels[p]) << "</text>\n";
        o << "<rect fill=\"none\" stroke=\"#333\" x=\"" << num(x0 + 5) << "\" y=\"" << num(mt) << "\" width=\""
          << num(pw - 10) << "\" height=\"" << num(ph) << "\"/>\n";
        for (double t : ticks(yr.lo, yr.hi)) {
            o << "<text font-size=\"10\" x=\"" << num(x0 + 2) << "\" y=\"" << num(py(t) + 3)
              << "\" text-anchor=\"end\">" << tick_label(t) << "</text>\n";
        }
        const double slot = (pw - 10) / static_cast<double>(std::max<std::size_t>(1, groups.size()));
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const BoxStats& b = stats[g];
            const double cx = x0 + 5 + slot * (static_cast<double>(g) + 0.5);
            const double bw = slot * 0.5;
            o << "<g class=\"box\" data-group=\"" << xml_escape(groups[g]) << "\" data-n=\"" << b.n << "\">\n";
            if (b.n > 0) {
                o << "<line stroke=\"#333\" x1=\"" << num(cx) << "\" y1=\"" << num(py(b.whisker_lo)) << "\" x2=\""
                  << num(cx) << "\" y2=\"" << num(py(b.whisker_hi)) << "\"/>\n";
                o << "<rect fill=\"" << color(g) << "\" fill-opacity=\"0.6\" stroke=\"#333\" x=\"" << num(cx - bw / 2)
                  << "\" y=\"" << num(py(b.q3)) << "\" width=\"" << num(bw) << "\" height=\""
                  << num(py(b.q1) - py(b.q3)) << "\"/>\n";
                o << "<line class=\"median\" stroke=\"#000\" stroke-width=\"2\" x1=\"" << num(cx - bw / 2) << "\" y1=\""
                  << num(py(b.median)) << "\" x2=\"" << num(cx + bw / 2) << "\" y2=\"" << num(py(b.median))
                  << "\"/>\n";
            }
            o << "<text font-size=\"10\" x=\"" << num(cx) << "\" y=\"" << num(mt + ph + 14)
              << "\" text-anchor=\"middle\">" << xml_escape(groups[g]) << "</text>\n</g>\n";
        }
        o << "</g>\n";
    }
    o << "<text class=\"ylabel\" transform=\"translate(16," << num(mt + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << xml_escape(y_label) << "</text>\n";
    o << "</svg>\n";
    return o.str();
}

}  // namespace hac24::cli
