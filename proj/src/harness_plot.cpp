#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "vge/harness.hpp"
#include "vge/ioutil.hpp"

namespace vge {

namespace {

std::string f2(double v) {
    char b[32];
    std::snprintf(b, sizeof(b), "%.2f", v);
    return b;
}

std::string tick_label(double v) {
    char b[32];
    std::snprintf(b, sizeof(b), "%.4g", v);
    return b;
}

std::string full_precision(double v) {
    char b[40];
    std::snprintf(b, sizeof(b), "%.17g", v);
    return b;
}

std::string xml_escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        switch (c) {
            case '&': o += "&amp;"; break;
            case '<': o += "&lt;"; break;
            case '>': o += "&gt;"; break;
            default: o += c;
        }
    }
    return o;
}

}  // namespace

void emit_plot(const Series& s, PlotKind kind, const std::string& path,
               const std::string& header_comment) {
    if (s.x.empty() && s.labels.empty()) throw std::invalid_argument("empty plot series");
    if (kind == PlotKind::success_vs_rollouts && s.x.size() != s.y.size())
        throw std::invalid_argument("x/y size mismatch");
    if (kind == PlotKind::rate_bars && s.labels.size() != s.y.size())
        throw std::invalid_argument("labels/y size mismatch");

    // Stable sort by x keeps the plotted polyline monotone in x.
    std::vector<std::size_t> order(s.y.size());
    std::iota(order.begin(), order.end(), std::size_t(0));
    if (kind == PlotKind::success_vs_rollouts)
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return s.x[a] < s.x[b]; });

    const double w = 640, h = 420;
    const double ml = 70, mr = 20, mt = 40, mb = 50;
    const double pw = w - ml - mr, ph = h - mt - mb;

    double xmin = 0, xmax = 1;
    if (kind == PlotKind::success_vs_rollouts) {
        xmin = s.x[order.front()];
        xmax = s.x[order.back()];
        if (xmin == xmax) {
            xmin -= 1;
            xmax += 1;
        }
    }
    double ymin = *std::min_element(s.y.begin(), s.y.end());
    double ymax = *std::max_element(s.y.begin(), s.y.end());
    ymin = std::min(ymin, 0.0);
    if (ymin == ymax) ymax = ymin + 1;
    const double ypad = 0.05 * (ymax - ymin);
    ymax += ypad;

    auto px = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double v) { return mt + ph - (v - ymin) / (ymax - ymin) * ph; };

    std::ostringstream o;
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    if (!header_comment.empty()) o << "<!-- " << xml_escape(header_comment) << " -->\n";
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << int(w) << "\" height=\"" << int(h)
      << "\" viewBox=\"0 0 " << int(w) << " " << int(h) << "\">\n";
    o << "<rect width=\"" << int(w) << "\" height=\"" << int(h) << "\" fill=\"white\"/>\n";
    o << "<text x=\"" << f2(w / 2) << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\" "
         "text-anchor=\"middle\">"
      << xml_escape(s.title) << "</text>\n";

    // axes
    o << "<line x1=\"" << f2(ml) << "\" y1=\"" << f2(mt + ph) << "\" x2=\"" << f2(ml + pw)
      << "\" y2=\"" << f2(mt + ph) << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << f2(ml) << "\" y1=\"" << f2(mt) << "\" x2=\"" << f2(ml) << "\" y2=\""
      << f2(mt + ph) << "\" stroke=\"black\"/>\n";

    // y ticks and grid
    for (int i = 0; i <= 5; ++i) {
        const double v = ymin + (ymax - ymin) * i / 5.0;
        const double yy = py(v);
        o << "<line x1=\"" << f2(ml - 4) << "\" y1=\"" << f2(yy) << "\" x2=\"" << f2(ml)
          << "\" y2=\"" << f2(yy) << "\" stroke=\"black\"/>\n";
        o << "<line x1=\"" << f2(ml) << "\" y1=\"" << f2(yy) << "\" x2=\"" << f2(ml + pw)
          << "\" y2=\"" << f2(yy) << "\" stroke=\"#dddddd\"/>\n";
        o << "<text x=\"" << f2(ml - 8) << "\" y=\"" << f2(yy + 4)
          << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << tick_label(v)
          << "</text>\n";
    }

    if (kind == PlotKind::success_vs_rollouts) {
        for (int i = 0; i <= 5; ++i) {
            const double v = xmin + (xmax - xmin) * i / 5.0;
            const double xx = px(v);
            o << "<line x1=\"" << f2(xx) << "\" y1=\"" << f2(mt + ph) << "\" x2=\"" << f2(xx)
              << "\" y2=\"" << f2(mt + ph + 4) << "\" stroke=\"black\"/>\n";
            o << "<text x=\"" << f2(xx) << "\" y=\"" << f2(mt + ph + 18)
              << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
              << tick_label(v) << "</text>\n";
        }
        std::string pts;
        for (std::size_t k : order) {
            pts += f2(px(s.x[k])) + "," + f2(py(s.y[k])) + " ";
        }
        o << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"" << pts
          << "\"/>\n";
        for (std::size_t k : order)
            o << "<circle cx=\"" << f2(px(s.x[k])) << "\" cy=\"" << f2(py(s.y[k]))
              << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
    } else {
        const std::size_t n = s.y.size();
        const double bw = pw / double(n) * 0.6;
        for (std::size_t i = 0; i < n; ++i) {
            const double cx = ml + pw * (double(i) + 0.5) / double(n);
            const double top = py(s.y[i]);
            o << "<rect x=\"" << f2(cx - bw / 2) << "\" y=\"" << f2(top) << "\" width=\"" << f2(bw)
              << "\" height=\"" << f2(mt + ph - top) << "\" fill=\"#1f77b4\"/>\n";
            o << "<text x=\"" << f2(cx) << "\" y=\"" << f2(mt + ph + 18)
              << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
              << xml_escape(s.labels[i]) << "</text>\n";
            o << "<text x=\"" << f2(cx) << "\" y=\"" << f2(top - 5)
              << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
              << tick_label(s.y[i]) << "</text>\n";
        }
    }

    o << "<text x=\"" << f2(ml + pw / 2) << "\" y=\"" << f2(h - 12)
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">"
      << xml_escape(s.x_label) << "</text>\n";
    o << "<text x=\"16\" y=\"" << f2(mt + ph / 2)
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 16 "
      << f2(mt + ph / 2) << ")\">" << xml_escape(s.y_label) << "</text>\n";
    o << "</svg>\n";

    write_file_atomic(path, o.str());

    // Sidecar CSV: the exact plotted series.
    std::ostringstream csv;
    if (!header_comment.empty()) csv << "# " << header_comment << "\n";
    if (kind == PlotKind::success_vs_rollouts) {
        csv << s.x_label << "," << s.y_label << "\n";
        for (std::size_t k : order)
            csv << full_precision(s.x[k]) << "," << full_precision(s.y[k]) << "\n";
    } else {
        csv << "label," << s.y_label << "\n";
        for (std::size_t i = 0; i < s.y.size(); ++i)
            csv << s.labels[i] << "," << full_precision(s.y[i]) << "\n";
    }
    write_file_atomic(path + ".csv", csv.str());
}

}  // namespace vge
