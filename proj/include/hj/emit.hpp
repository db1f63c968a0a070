#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace hj {

/// All numeric output goes through this: 12 significant digits, locale
/// independent, negative zero normalized. Goldens compared at 1e-6 need the
/// headroom, and repro runs must be byte-identical.
inline std::string format_double(double v) {
    if (v == 0.0) v = 0.0;  // collapse -0
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::string format_point(const std::vector<double>& x, char sep = ',') {
    std::string out;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) out.push_back(sep);
        out += format_double(x[i]);
    }
    return out;
}

/// One `key=value` record per line, LF endings.
inline void emit_kv(std::ostream& os, const std::string& key, const std::string& value) {
    os << key << "=" << value << "\n";
}

inline void emit_kv(std::ostream& os, const std::string& key, double value) {
    emit_kv(os, key, format_double(value));
}

struct CsvWriter {
    std::ostream& os;
    explicit CsvWriter(std::ostream& stream, const std::vector<std::string>& header)
        : os(stream) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) os << ',';
            os << header[i];
        }
        os << '\n';
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os << ',';
            os << cells[i];
        }
        os << '\n';
    }
};

}  // namespace hj
