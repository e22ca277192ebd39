#pragma once

// CSV chains and standalone SVG plots.

#include <gapshrink/errors.hpp>
#include <gapshrink/samples.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace gapshrink {

inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_text(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out)
        throw std::runtime_error("write failed for " + path.string());
}

/// Headered CSV, one row per retained draw.
inline void write_chain_csv(const std::filesystem::path &path, const PosteriorSamples &s) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    for (std::size_t c = 0; c < s.names().size(); ++c)
        out << (c ? "," : "") << s.names()[c];
    out << '\n';
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        for (Eigen::Index c = 0; c < s.cols(); ++c)
            out << (c ? "," : "") << format_double(s.draws()(r, c));
        out << '\n';
    }
    if (!out)
        throw std::runtime_error("write failed for " + path.string());
}

namespace svg {

struct Interval {
    std::string label;
    double lo, q25, mid, q75, hi;
    double truth = std::numeric_limits<double>::quiet_NaN();
};

inline std::string escape(const std::string &s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

inline std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

class Canvas {
  public:
    Canvas(double w, double h, double xmin, double xmax, double ymin, double ymax)
        : w_(w), h_(h), x0_(xmin), x1_(xmax), y0_(ymin), y1_(ymax) {
        if (!(x1_ > x0_)) x1_ = x0_ + 1.0;
        if (!(y1_ > y0_)) y1_ = y0_ + 1.0;
        out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
             << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
             << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    }
    double px(double x) const { return kLeft + (x - x0_) / (x1_ - x0_) * (w_ - kLeft - kRight); }
    double py(double y) const { return h_ - kBottom - (y - y0_) / (y1_ - y0_) * (h_ - kTop - kBottom); }

    void line(double xa, double ya, double xb, double yb, const char *color, double width = 1.0,
              const char *dash = nullptr) {
        out_ << "<line x1=\"" << num(px(xa)) << "\" y1=\"" << num(py(ya)) << "\" x2=\"" << num(px(xb))
             << "\" y2=\"" << num(py(yb)) << "\" stroke=\"" << color << "\" stroke-width=\"" << width << "\"";
        if (dash)
            out_ << " stroke-dasharray=\"" << dash << "\"";
        out_ << "/>\n";
    }
    void rect(double xa, double ya, double xb, double yb, const char *fill) {
        out_ << "<rect x=\"" << num(std::min(px(xa), px(xb))) << "\" y=\"" << num(std::min(py(ya), py(yb)))
             << "\" width=\"" << num(std::abs(px(xb) - px(xa))) << "\" height=\""
             << num(std::abs(py(yb) - py(ya))) << "\" fill=\"" << fill << "\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
    }
    void circle(double x, double y, double r, const char *fill) {
        out_ << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"" << r
             << "\" fill=\"" << fill << "\"/>\n";
    }
    void text(double x, double y, const std::string &s, const char *anchor = "middle", double rotate = 0.0) {
        out_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"" << anchor << "\"";
        if (rotate != 0.0)
            out_ << " transform=\"rotate(" << rotate << " " << num(x) << " " << num(y) << ")\"";
        out_ << ">" << escape(s) << "</text>\n";
    }
    void axes(const std::string &title, const std::string &ylabel) {
        line(x0_, y0_, x1_, y0_, "black");
        line(x0_, y0_, x0_, y1_, "black");
        for (int i = 0; i <= 4; ++i) {
            double y = y0_ + (y1_ - y0_) * i / 4.0;
            line(x0_, y, x1_, y, "#dddddd", 0.5);
            text(kLeft - 4, py(y) + 4, num(y), "end");
        }
        text(w_ / 2, kTop - 8, title);
        text(14, h_ / 2, ylabel, "middle", -90);
    }
    std::string finish() {
        out_ << "</svg>\n";
        return out_.str();
    }
    double height() const { return h_; }

  private:
    static constexpr double kLeft = 60, kRight = 20, kTop = 30, kBottom = 50;
    double w_, h_, x0_, x1_, y0_, y1_;
    std::ostringstream out_;
};

/// Box-and-whisker per item (2.5/25/50/75/97.5%) with optional truth marks.
inline std::string intervals(const std::string &title, const std::vector<Interval> &items) {
    double lo = 0.0, hi = 0.0;
    for (const auto &it : items) {
        lo = std::min({lo, it.lo, std::isnan(it.truth) ? lo : it.truth});
        hi = std::max({hi, it.hi, std::isnan(it.truth) ? hi : it.truth});
    }
    const double pad = 0.05 * (hi - lo + 1e-9);
    const double n = static_cast<double>(items.size());
    Canvas c(std::max(300.0, 40.0 * n + 80.0), 360, 0.0, n, lo - pad, hi + pad);
    c.axes(title, "value");
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto &it = items[i];
        const double x = static_cast<double>(i) + 0.5;
        c.line(x, it.lo, x, it.hi, "black");
        c.rect(x - 0.3, it.q25, x + 0.3, it.q75, "#9ecae1");
        c.line(x - 0.3, it.mid, x + 0.3, it.mid, "black", 2.0);
        if (!std::isnan(it.truth))
            c.circle(x, it.truth, 3.0, "#d62728");
        c.text(c.px(x), c.height() - 30, it.label);
    }
    return c.finish();
}

struct Series {
    std::string label;
    std::vector<double> y;
    const char *color = "#1f77b4";
};

/// Line chart over x = 0, 1, ...; an optional horizontal reference line.
inline std::string lines(const std::string &title, const std::string &ylabel,
                         const std::vector<Series> &series, double reference = std::numeric_limits<double>::quiet_NaN()) {
    double lo = 0.0, hi = 1.0;
    std::size_t len = 1;
    for (const auto &s : series) {
        for (double v : s.y) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        len = std::max(len, s.y.size());
    }
    Canvas c(520, 360, 0.0, static_cast<double>(len - 1), lo, hi);
    c.axes(title, ylabel);
    if (!std::isnan(reference))
        c.line(0.0, reference, static_cast<double>(len - 1), reference, "#d62728", 1.0, "4 3");
    double legend_y = 50;
    for (const auto &s : series) {
        for (std::size_t k = 1; k < s.y.size(); ++k)
            c.line(static_cast<double>(k - 1), s.y[k - 1], static_cast<double>(k), s.y[k], s.color, 1.5);
        c.text(510, legend_y, s.label, "end");
        legend_y += 14;
    }
    for (std::size_t k = 0; k < len; k += std::max<std::size_t>(1, len / 10))
        c.text(c.px(static_cast<double>(k)), c.height() - 30, std::to_string(k));
    return c.finish();
}

} // namespace svg
} // namespace gapshrink
