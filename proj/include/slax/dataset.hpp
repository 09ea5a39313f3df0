#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "slax/error.hpp"
#include "slax/slo.hpp"

namespace slax {

// One observed admission decision. Labels are 0/1 as generated; the PO
// relabeling step may replace them with probabilities in [0,1].
struct Sample {
    SloVector x;
    double y = 0.0;
};

struct Dataset {
    std::vector<Sample> samples;
    FeatureSpec spec;
    std::uint64_t seed = 0; // seed that reproduces `samples` exactly

    std::size_t size() const { return samples.size(); }

    bool labels_binary() const {
        for (const Sample& s : samples)
            if (s.y != 0.0 && s.y != 1.0) return false;
        return true;
    }
};

namespace detail {

inline std::vector<double> binary_labels_of(const Dataset& d, const char* who) {
    if (!d.labels_binary()) throw invalid_argument(std::string(who) + ": labels must be binary");
    std::vector<double> labels;
    labels.reserve(d.size());
    for (const Sample& s : d.samples) labels.push_back(s.y);
    return labels;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

inline void write_dataset_csv(const Dataset& d, std::ostream& out) {
    out << "delay_ms,throughput_gbps,label\n";
    for (const Sample& s : d.samples) {
        out << detail::format_double(s.x.delay_ms) << ','
            << detail::format_double(s.x.throughput_gbps) << ',';
        if (s.y == 0.0 || s.y == 1.0)
            out << static_cast<int>(s.y);
        else
            out << detail::format_double(s.y);
        out << '\n';
    }
}

inline Dataset read_dataset_csv(std::istream& in, const FeatureSpec& spec) {
    Dataset d;
    d.spec = spec;
    std::string line;
    if (!std::getline(in, line)) throw io_error("dataset CSV: empty stream");
    if (line != "delay_ms,throughput_gbps,label" && line != "delay_ms,throughput_gbps,label\r")
        throw io_error("dataset CSV: unexpected header '" + line + "'");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        Sample s;
        char trailing = 0;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf %c", &s.x.delay_ms, &s.x.throughput_gbps, &s.y,
                        &trailing) != 3)
            throw io_error("dataset CSV: malformed row at line " + std::to_string(lineno));
        if (!finite(s.x) || !std::isfinite(s.y) || s.y < 0.0 || s.y > 1.0)
            throw io_error("dataset CSV: invalid values at line " + std::to_string(lineno));
        d.samples.push_back(s);
    }
    return d;
}

inline void save_dataset_csv(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for write: " + path);
    write_dataset_csv(d, out);
    if (!out) throw io_error("write failed: " + path);
}

inline Dataset load_dataset_csv(const std::string& path, const FeatureSpec& spec) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open: " + path);
    return read_dataset_csv(in, spec);
}

} // namespace slax
