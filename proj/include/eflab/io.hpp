#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace eflab::io {

// Deterministic CSV writing: fixed %.17g formatting, '\n' endings, no
// timestamps. Byte-identical across runs of the same config and seed.
std::string format_double(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(const std::vector<double>& vals);
    void add_row_mixed(const std::vector<std::string>& vals) { rows.push_back(vals); }
    std::string body() const;
};

void write_text(const std::filesystem::path& p, const std::string& text);
std::string read_text(const std::filesystem::path& p);

uint64_t fnv1a_hash(const std::string& data);
std::string hash_hex(const std::string& data);

// Minimal decay plot: points and fitted line of -h log N against h.
std::string decay_plot_svg(const std::vector<double>& h,
                           const std::vector<double>& y, double rate,
                           double intercept, const std::string& title);

// (x, y) polyline plot on log-log axes for slope diagnostics.
std::string loglog_plot_svg(const std::vector<double>& x,
                            const std::vector<double>& y, double slope,
                            const std::string& title);

}  // namespace eflab::io
