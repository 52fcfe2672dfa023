#include "eflab/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace eflab::io {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void CsvTable::add_row(const std::vector<double>& vals) {
    std::vector<std::string> r;
    r.reserve(vals.size());
    for (double v : vals) r.push_back(format_double(v));
    rows.push_back(std::move(r));
}

std::string CsvTable::body() const {
    std::ostringstream os;
    for (size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    for (const auto& r : rows) {
        for (size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
        os << '\n';
    }
    return os.str();
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + p.string());
    f << text;
}

std::string read_text(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + p.string());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

uint64_t fnv1a_hash(const std::string& data) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(const std::string& data) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a_hash(data)));
    return buf;
}

namespace {

struct Frame {
    double x0, x1, y0, y1;      // data range
    double px0 = 70, px1 = 560, py0 = 330, py1 = 40;  // pixel box (y inverted)
    double X(double x) const { return px0 + (x - x0) / (x1 - x0) * (px1 - px0); }
    double Y(double y) const { return py0 + (y - y0) / (y1 - y0) * (py1 - py0); }
};

void expand(double& lo, double& hi) {
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.08 * (hi - lo);
    lo -= pad;
    hi += pad;
}

std::string svg_header(const std::string& title) {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"380\" "
          "viewBox=\"0 0 600 380\">\n"
       << "<rect width=\"600\" height=\"380\" fill=\"white\"/>\n"
       << "<text x=\"300\" y=\"22\" text-anchor=\"middle\" font-size=\"14\" "
          "font-family=\"sans-serif\">"
       << title << "</text>\n";
    return os.str();
}

std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel) {
    std::ostringstream os;
    os << "<line x1=\"" << f.px0 << "\" y1=\"" << f.py0 << "\" x2=\"" << f.px1
       << "\" y2=\"" << f.py0 << "\" stroke=\"black\"/>\n"
       << "<line x1=\"" << f.px0 << "\" y1=\"" << f.py0 << "\" x2=\"" << f.px0
       << "\" y2=\"" << f.py1 << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << 0.5 * (f.px0 + f.px1) << "\" y=\"365\" text-anchor=\"middle\" "
          "font-size=\"12\" font-family=\"sans-serif\">"
       << xlabel << "</text>\n"
       << "<text x=\"18\" y=\"" << 0.5 * (f.py0 + f.py1)
       << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" "
          "transform=\"rotate(-90 18 "
       << 0.5 * (f.py0 + f.py1) << ")\">" << ylabel << "</text>\n";
    // numeric ticks at the corners
    os << "<text x=\"" << f.px0 << "\" y=\"345\" font-size=\"10\" "
          "font-family=\"sans-serif\">"
       << format_double(f.x0) << "</text>\n"
       << "<text x=\"" << f.px1 - 40 << "\" y=\"345\" font-size=\"10\" "
          "font-family=\"sans-serif\">"
       << format_double(f.x1) << "</text>\n"
       << "<text x=\"" << f.px0 + 4 << "\" y=\"" << f.py0 - 4
       << "\" font-size=\"10\" font-family=\"sans-serif\">" << format_double(f.y0)
       << "</text>\n"
       << "<text x=\"" << f.px0 + 4 << "\" y=\"" << f.py1 + 12
       << "\" font-size=\"10\" font-family=\"sans-serif\">" << format_double(f.y1)
       << "</text>\n";
    return os.str();
}

}  // namespace

std::string decay_plot_svg(const std::vector<double>& h, const std::vector<double>& y,
                           double rate, double intercept, const std::string& title) {
    Frame f{};
    f.x0 = 0.0;
    f.x1 = h.empty() ? 1.0 : *std::max_element(h.begin(), h.end());
    f.y0 = y.empty() ? 0.0 : *std::min_element(y.begin(), y.end());
    f.y1 = y.empty() ? 1.0 : *std::max_element(y.begin(), y.end());
    f.y0 = std::min(f.y0, rate);
    f.y1 = std::max(f.y1, rate);
    expand(f.x0, f.x1);
    expand(f.y0, f.y1);

    std::ostringstream os;
    os << svg_header(title) << axes(f, "h", "-h log N(h)");
    // fitted line r + c h
    os << "<line x1=\"" << f.X(0.0) << "\" y1=\"" << f.Y(rate) << "\" x2=\""
       << f.X(f.x1) << "\" y2=\"" << f.Y(rate + intercept * f.x1)
       << "\" stroke=\"#888\" stroke-dasharray=\"5,4\"/>\n";
    for (size_t i = 0; i < h.size(); ++i) {
        os << "<circle cx=\"" << f.X(h[i]) << "\" cy=\"" << f.Y(y[i])
           << "\" r=\"4\" fill=\"#1f77b4\"/>\n";
    }
    os << "<text x=\"" << f.px0 + 10 << "\" y=\"" << f.py1 + 28
       << "\" font-size=\"12\" font-family=\"sans-serif\">rate = " << format_double(rate)
       << "</text>\n</svg>\n";
    return os.str();
}

std::string loglog_plot_svg(const std::vector<double>& x, const std::vector<double>& y,
                            double slope, const std::string& title) {
    std::vector<double> lx, ly;
    for (size_t i = 0; i < x.size(); ++i) {
        lx.push_back(std::log10(x[i]));
        ly.push_back(std::log10(std::max(y[i], 1e-300)));
    }
    Frame f{};
    f.x0 = *std::min_element(lx.begin(), lx.end());
    f.x1 = *std::max_element(lx.begin(), lx.end());
    f.y0 = *std::min_element(ly.begin(), ly.end());
    f.y1 = *std::max_element(ly.begin(), ly.end());
    expand(f.x0, f.x1);
    expand(f.y0, f.y1);
    std::ostringstream os;
    os << svg_header(title) << axes(f, "log10 h", "log10 value");
    for (size_t i = 0; i + 1 < lx.size(); ++i) {
        os << "<line x1=\"" << f.X(lx[i]) << "\" y1=\"" << f.Y(ly[i]) << "\" x2=\""
           << f.X(lx[i + 1]) << "\" y2=\"" << f.Y(ly[i + 1])
           << "\" stroke=\"#1f77b4\"/>\n";
    }
    for (size_t i = 0; i < lx.size(); ++i)
        os << "<circle cx=\"" << f.X(lx[i]) << "\" cy=\"" << f.Y(ly[i])
           << "\" r=\"4\" fill=\"#1f77b4\"/>\n";
    os << "<text x=\"" << f.px0 + 10 << "\" y=\"" << f.py1 + 28
       << "\" font-size=\"12\" font-family=\"sans-serif\">slope = "
       << format_double(slope) << "</text>\n</svg>\n";
    return os.str();
}

}  // namespace eflab::io
