#include "oneshot/metrics.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

namespace oneshot {

namespace {

std::string fmt(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string fmt_pct(double v) {
    char buf[32];
    int n = std::snprintf(buf, sizeof(buf), "%.4f", 100.0 * v);
    return std::string(buf, static_cast<std::size_t>(n));
}

std::string series_name(const SummaryLabels& l) { return l.backend + "/" + l.stencil; }

}  // namespace

ErrorSummary summarize(std::vector<double> errors, const SummaryLabels& labels,
                       std::size_t n_failed) {
    ErrorSummary s;
    s.labels = labels;
    s.n_failed = n_failed;
    s.count = errors.size();
    s.errors = std::move(errors);
    if (s.count == 0) {
        if (n_failed == 0) throw ConfigError("summary needs at least one completed or failed case");
        return s;
    }

    double sum = 0.0;
    bool positive = true;
    for (double e : s.errors) {
        if (!(e >= 0.0) || !std::isfinite(e)) throw ConfigError("errors must be finite and nonnegative");
        sum += e;
        positive = positive && e > 0.0;
    }
    s.mean = sum / static_cast<double>(s.count);

    double sq = 0.0;
    for (double e : s.errors) sq += (e - s.mean) * (e - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(s.count));

    if (positive) {
        double lg = 0.0;
        for (double e : s.errors) lg += std::log(e);
        s.geomean = std::exp(lg / static_cast<double>(s.count));
        // AM-GM; the epsilon absorbs log/exp rounding on near-constant lists.
        assert(s.geomean <= s.mean * (1.0 + 1e-12));
        s.geomean = std::min(s.geomean, s.mean);
    }
    return s;
}

std::string emit_table_csv(const std::vector<ErrorSummary>& summaries) {
    std::ostringstream out;
    out << "equation,backend,stencil,resolution,sigma,count,mean_pct,std_pct,geomean_pct,"
           "seed_lo,seed_hi,n_failed\n";
    for (const auto& s : summaries) {
        const auto& l = s.labels;
        out << l.equation << ',' << l.backend << ',' << l.stencil << ',' << l.resolution << ','
            << fmt(l.sigma) << ',' << s.count << ',';
        if (s.all_failed())
            out << "-,-,-,";
        else
            out << fmt_pct(s.mean) << ',' << fmt_pct(s.stddev) << ','
                << (s.geomean > 0.0 ? fmt_pct(s.geomean) : std::string("-")) << ',';
        out << l.seed_lo << ',' << l.seed_hi << ',' << s.n_failed << '\n';
    }
    return out.str();
}

std::string emit_table_markdown(const std::vector<ErrorSummary>& summaries) {
    // Column order follows first appearance; sigma rows sorted ascending.
    std::vector<std::string> columns;
    std::vector<double> sigmas;
    for (const auto& s : summaries) {
        std::string c = series_name(s.labels);
        if (std::find(columns.begin(), columns.end(), c) == columns.end()) columns.push_back(c);
        if (std::find(sigmas.begin(), sigmas.end(), s.labels.sigma) == sigmas.end())
            sigmas.push_back(s.labels.sigma);
    }
    std::sort(sigmas.begin(), sigmas.end());

    std::map<std::pair<double, std::string>, std::string> cells;
    for (const auto& s : summaries) {
        std::string cell = s.all_failed()
                               ? std::string("-")
                               : fmt_pct(s.mean) + " ± " + fmt_pct(s.stddev) + "%";
        if (s.n_failed > 0 && !s.all_failed())
            cell += " (" + std::to_string(s.n_failed) + " failed)";
        cells[{s.labels.sigma, series_name(s.labels)}] = cell;
    }

    std::ostringstream out;
    out << "| sigma |";
    for (const auto& c : columns) out << ' ' << c << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < columns.size(); ++i) out << "---|";
    out << '\n';
    for (double sg : sigmas) {
        out << "| " << fmt(sg) << " |";
        for (const auto& c : columns) {
            auto it = cells.find({sg, c});
            out << ' ' << (it == cells.end() ? std::string("-") : it->second) << " |";
        }
        out << '\n';
    }
    return out.str();
}

std::vector<Curve> curves_from_summaries(const std::vector<ErrorSummary>& summaries,
                                         bool by_resolution) {
    std::vector<Curve> curves;
    for (const auto& s : summaries) {
        if (s.all_failed()) continue;
        std::string name = series_name(s.labels);
        auto it = std::find_if(curves.begin(), curves.end(),
                               [&](const Curve& c) { return c.name == name; });
        if (it == curves.end()) {
            curves.push_back({name, {}});
            it = curves.end() - 1;
        }
        double x = by_resolution ? static_cast<double>(s.labels.resolution) : s.labels.sigma;
        it->points.push_back({x, s.mean});
    }
    for (auto& c : curves)
        std::sort(c.points.begin(), c.points.end(),
                  [](const CurvePoint& a, const CurvePoint& b) { return a.x < b.x; });
    return curves;
}

std::string emit_curves_svg(const std::vector<Curve>& curves, const std::string& x_label,
                            const std::string& title) {
    constexpr double kW = 640, kH = 420;
    constexpr double kL = 70, kR = 30, kT = 45, kB = 55;  // margins
    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

    double xmin = 0, xmax = 1, ymax = 1;
    bool any = false;
    for (const auto& c : curves)
        for (const auto& p : c.points) {
            double ypct = 100.0 * p.mean;
            if (!any) {
                xmin = xmax = p.x;
                ymax = ypct;
                any = true;
            } else {
                xmin = std::min(xmin, p.x);
                xmax = std::max(xmax, p.x);
                ymax = std::max(ymax, ypct);
            }
        }
    if (xmax <= xmin) xmax = xmin + 1.0;
    if (ymax <= 0.0) ymax = 1.0;
    ymax *= 1.1;

    auto px = [&](double x) { return kL + (x - xmin) / (xmax - xmin) * (kW - kL - kR); };
    auto py = [&](double ypct) { return kH - kB - ypct / ymax * (kH - kT - kB); };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
        << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << title << "</text>\n"
        << "<line x1=\"" << kL << "\" y1=\"" << kH - kB << "\" x2=\"" << kW - kR << "\" y2=\""
        << kH - kB << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << kL << "\" y1=\"" << kT << "\" x2=\"" << kL << "\" y2=\"" << kH - kB
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 14
        << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n"
        << "<text x=\"18\" y=\"" << (kT + kH - kB) / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
        << (kT + kH - kB) / 2 << ")\">mean L2 relative error (%)</text>\n";

    for (int tick = 0; tick <= 4; ++tick) {
        double ypct = ymax * tick / 4.0;
        double y = py(ypct);
        out << "<line x1=\"" << kL - 4 << "\" y1=\"" << y << "\" x2=\"" << kL << "\" y2=\"" << y
            << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << kL - 8 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << fmt_pct(ypct / 100.0) << "</text>\n";
        double x = xmin + (xmax - xmin) * tick / 4.0;
        out << "<line x1=\"" << px(x) << "\" y1=\"" << kH - kB << "\" x2=\"" << px(x) << "\" y2=\""
            << kH - kB + 4 << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << px(x) << "\" y=\"" << kH - kB + 18
            << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(x) << "</text>\n";
    }

    for (std::size_t ci = 0; ci < curves.size(); ++ci) {
        const auto& c = curves[ci];
        const char* color = kColors[ci % (sizeof(kColors) / sizeof(kColors[0]))];
        if (c.points.size() > 1) {
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
            for (const auto& p : c.points) out << px(p.x) << ',' << py(100.0 * p.mean) << ' ';
            out << "\"/>\n";
        }
        for (const auto& p : c.points)
            out << "<circle cx=\"" << px(p.x) << "\" cy=\"" << py(100.0 * p.mean)
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        out << "<text x=\"" << kW - kR - 8 << "\" y=\"" << kT + 16 + 16 * static_cast<double>(ci)
            << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << color << "\">" << c.name
            << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace oneshot
