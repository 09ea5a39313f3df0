#pragma once

#include <array>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

#include "slax/dataset.hpp"
#include "slax/error.hpp"
#include "slax/slo.hpp"

namespace slax {

inline constexpr std::array<double, 5> kContourLevels{0.01, 0.1, 0.5, 0.9, 0.99};

namespace detail {

inline std::string format_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

inline const char* band_color(double p) {
    if (p > 0.99) return "#1a7f37";
    if (p > 0.9) return "#6fbf73";
    if (p > 0.5) return "#d9c544";
    if (p > 0.1) return "#e8923c";
    if (p > 0.01) return "#d14b3c";
    return "#8c8c8c";
}

inline const char* band_label(int band) {
    switch (band) {
    case 0: return "&gt; 0.99";
    case 1: return "0.9 - 0.99";
    case 2: return "0.5 - 0.9";
    case 3: return "0.1 - 0.5";
    case 4: return "0.01 - 0.1";
    default: return "&lt;= 0.01";
    }
}

inline const char* band_color_by_index(int band) {
    switch (band) {
    case 0: return "#1a7f37";
    case 1: return "#6fbf73";
    case 2: return "#d9c544";
    case 3: return "#e8923c";
    case 4: return "#d14b3c";
    default: return "#8c8c8c";
    }
}

} // namespace detail

// Probability at every node of a resolution x resolution grid over the
// configured intervals, delay-major.
template <class Model>
void write_contour_csv(std::ostream& out, const Model& model, const FeatureSpec& spec,
                       int resolution) {
    spec.validate();
    if (resolution < 2) throw invalid_argument("write_contour_csv: resolution must be >= 2");
    out << "delay_ms,throughput_gbps,prob\n";
    const double dd = (spec.delay_hi_ms - spec.delay_lo_ms) / static_cast<double>(resolution - 1);
    const double dt =
        (spec.throughput_hi_gbps - spec.throughput_lo_gbps) / static_cast<double>(resolution - 1);
    for (int i = 0; i < resolution; ++i)
        for (int j = 0; j < resolution; ++j) {
            const SloVector s{spec.delay_lo_ms + dd * i, spec.throughput_lo_gbps + dt * j};
            out << detail::format_double(s.delay_ms) << ',' << detail::format_double(s.throughput_gbps)
                << ',' << detail::format_double(model.probability(s)) << '\n';
        }
}

// Filled iso-probability bands: each grid cell is colored by the band of
// the probability at its center. Delay on the horizontal axis, throughput
// on the vertical axis pointing up.
template <class Model>
void write_contour_svg(std::ostream& out, const Model& model, const FeatureSpec& spec,
                       int resolution, const std::string& title = "acceptance probability") {
    spec.validate();
    if (resolution < 2) throw invalid_argument("write_contour_svg: resolution must be >= 2");
    const int width = 720, height = 540;
    const int ml = 70, mr = 170, mt = 40, mb = 60;
    const double pw = width - ml - mr, ph = height - mt - mb;
    const int cells = resolution - 1;
    const double dd = (spec.delay_hi_ms - spec.delay_lo_ms) / cells;
    const double dt = (spec.throughput_hi_gbps - spec.throughput_lo_gbps) / cells;

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << ml << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">"
        << title << "</text>\n";

    for (int i = 0; i < cells; ++i)
        for (int j = 0; j < cells; ++j) {
            const SloVector center{spec.delay_lo_ms + dd * (i + 0.5),
                                   spec.throughput_lo_gbps + dt * (j + 0.5)};
            const double p = model.probability(center);
            const double x = ml + pw * i / cells;
            const double y = mt + ph - ph * (j + 1) / cells;
            out << "<rect x=\"" << detail::format_coord(x) << "\" y=\"" << detail::format_coord(y)
                << "\" width=\"" << detail::format_coord(pw / cells + 0.5) << "\" height=\""
                << detail::format_coord(ph / cells + 0.5) << "\" fill=\"" << detail::band_color(p)
                << "\"/>\n";
        }

    out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << detail::format_coord(pw)
        << "\" height=\"" << detail::format_coord(ph)
        << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
    const int ticks = 5;
    for (int t = 0; t < ticks; ++t) {
        const double f = static_cast<double>(t) / (ticks - 1);
        const double x = ml + pw * f;
        const double y = mt + ph - ph * f;
        out << "<line x1=\"" << detail::format_coord(x) << "\" y1=\"" << mt + ph << "\" x2=\""
            << detail::format_coord(x) << "\" y2=\"" << detail::format_coord(mt + ph + 5)
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << detail::format_coord(x) << "\" y=\""
            << detail::format_coord(mt + ph + 20)
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
            << detail::format_coord(spec.delay_lo_ms + (spec.delay_hi_ms - spec.delay_lo_ms) * f)
            << "</text>\n";
        out << "<line x1=\"" << detail::format_coord(static_cast<double>(ml) - 5) << "\" y1=\""
            << detail::format_coord(y) << "\" x2=\"" << ml << "\" y2=\"" << detail::format_coord(y)
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << detail::format_coord(static_cast<double>(ml) - 8) << "\" y=\""
            << detail::format_coord(y + 4)
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
            << detail::format_coord(spec.throughput_lo_gbps +
                                    (spec.throughput_hi_gbps - spec.throughput_lo_gbps) * f)
            << "</text>\n";
    }
    out << "<text x=\"" << detail::format_coord(ml + pw / 2) << "\" y=\"" << height - 15
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">delay (ms)</text>\n";
    out << "<text x=\"18\" y=\"" << detail::format_coord(mt + ph / 2)
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << detail::format_coord(mt + ph / 2) << ")\">throughput (Gbps)</text>\n";

    const double lx = width - mr + 20;
    for (int band = 0; band < 6; ++band) {
        const double ly = mt + 20 + band * 26;
        out << "<rect x=\"" << detail::format_coord(lx) << "\" y=\"" << detail::format_coord(ly)
            << "\" width=\"18\" height=\"18\" fill=\"" << detail::band_color_by_index(band)
            << "\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
        out << "<text x=\"" << detail::format_coord(lx + 26) << "\" y=\""
            << detail::format_coord(ly + 14)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << detail::band_label(band)
            << "</text>\n";
    }
    out << "</svg>\n";
}

template <class Model>
void export_contour(const Model& model, const FeatureSpec& spec, int resolution,
                    const std::string& csv_path, const std::string& svg_path,
                    const std::string& title = "acceptance probability") {
    std::ofstream csv(csv_path);
    if (!csv) throw io_error("cannot open for writing: " + csv_path);
    write_contour_csv(csv, model, spec, resolution);
    if (!csv) throw io_error("write failed: " + csv_path);
    std::ofstream svg(svg_path);
    if (!svg) throw io_error("cannot open for writing: " + svg_path);
    write_contour_svg(svg, model, spec, resolution, title);
    if (!svg) throw io_error("write failed: " + svg_path);
}

} // namespace slax
