#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "halluest/estimator.hpp"
#include "halluest/metrics.hpp"
#include "halluest/stats.hpp"

// Static SVG figures: rate heatmap, correlation scatter, and the
// size-by-moderator interaction chart for a fitted mixed model.

namespace halluest::plot {

namespace detail {

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string header(int w, int h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) +
         "\" height=\"" + std::to_string(h) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
}

inline std::string color_ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(255);
  const int g = static_cast<int>(245 - 180 * t);
  const int b = static_cast<int>(235 - 215 * t);
  std::ostringstream os;
  os << "rgb(" << r << ',' << g << ',' << b << ')';
  return os.str();
}

}  // namespace detail

inline std::string heatmap_svg(const std::vector<estimator::RateEstimate>& estimates) {
  std::set<std::string> models;
  std::set<std::string> langs;
  std::map<std::pair<std::string, std::string>, const estimator::RateEstimate*> cell;
  double lo = 1e300, hi = -1e300;
  for (const auto& e : estimates) {
    models.insert(e.model_id);
    langs.insert(e.language);
    cell[{e.language, e.model_id}] = &e;
    lo = std::min(lo, e.mean);
    hi = std::max(hi, e.mean);
  }
  const int cw = 90, ch = 26, left = 70, top = 60;
  const int w = left + cw * static_cast<int>(models.size()) + 20;
  const int h = top + ch * static_cast<int>(langs.size()) + 20;
  std::ostringstream os;
  os << detail::header(w, h);
  os << "<text x=\"" << left << "\" y=\"20\" font-size=\"13\">Estimated hallucination rate (%)</text>\n";
  int c = 0;
  for (const auto& m : models) {
    os << "<text x=\"" << left + c * cw + cw / 2 << "\" y=\"" << top - 8
       << "\" text-anchor=\"middle\">" << detail::escape(m) << "</text>\n";
    ++c;
  }
  int r = 0;
  for (const auto& l : langs) {
    os << "<text x=\"" << left - 6 << "\" y=\"" << top + r * ch + ch / 2 + 4
       << "\" text-anchor=\"end\">" << detail::escape(l) << "</text>\n";
    c = 0;
    for (const auto& m : models) {
      const auto it = cell.find({l, m});
      if (it != cell.end()) {
        const double t = hi > lo ? (it->second->mean - lo) / (hi - lo) : 0.5;
        os << "<rect x=\"" << left + c * cw << "\" y=\"" << top + r * ch << "\" width=\"" << cw
           << "\" height=\"" << ch << "\" fill=\"" << detail::color_ramp(t)
           << "\" stroke=\"white\"/>\n";
        os << "<text x=\"" << left + c * cw + cw / 2 << "\" y=\"" << top + r * ch + ch / 2 + 4
           << "\" text-anchor=\"middle\">" << metrics::format_fixed(it->second->mean, 1) << "±"
           << metrics::format_fixed(it->second->std, 1) << "</text>\n";
      }
      ++c;
    }
    ++r;
  }
  os << "</svg>\n";
  return os.str();
}

namespace detail {

struct Axis {
  double lo, hi;
  double map(double v, double a, double b) const {
    return hi > lo ? a + (v - lo) / (hi - lo) * (b - a) : 0.5 * (a + b);
  }
};

inline Axis axis_of(const std::vector<double>& v) {
  auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  const double pad = (*mx - *mn) * 0.05 + 1e-12;
  return {*mn - pad, *mx + pad};
}

}  // namespace detail

inline std::string scatter_svg(const std::vector<double>& x, const std::vector<double>& y,
                               const std::vector<std::string>& labels, const std::string& x_name,
                               const std::string& y_name, const stats::Correlation& corr) {
  const int w = 520, h = 400, l = 60, r = 20, t = 40, b = 50;
  const auto ax = detail::axis_of(x);
  const auto ay = detail::axis_of(y);
  std::ostringstream os;
  os << detail::header(w, h);
  os << "<text x=\"" << l << "\" y=\"20\" font-size=\"13\">" << detail::escape(y_name) << " vs "
     << detail::escape(x_name) << " (r = " << metrics::format_fixed(corr.r, 2)
     << ", p = " << corr.p_value << ")</text>\n";
  os << "<rect x=\"" << l << "\" y=\"" << t << "\" width=\"" << w - l - r << "\" height=\""
     << h - t - b << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double px = ax.map(x[i], l, w - r);
    const double py = ay.map(y[i], h - b, t);
    os << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"3.5\" fill=\"#1f77b4\"/>\n";
    if (i < labels.size()) {
      os << "<text x=\"" << px + 5 << "\" y=\"" << py - 4 << "\" font-size=\"9\">"
         << detail::escape(labels[i]) << "</text>\n";
    }
  }
  // least-squares line
  const double mx = stats::mean(x), my = stats::mean(y);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double slope = sxx > 0 ? sxy / sxx : 0.0;
  auto line_y = [&](double xv) { return my + slope * (xv - mx); };
  os << "<line x1=\"" << ax.map(ax.lo, l, w - r) << "\" y1=\"" << ay.map(line_y(ax.lo), h - b, t)
     << "\" x2=\"" << ax.map(ax.hi, l, w - r) << "\" y2=\"" << ay.map(line_y(ax.hi), h - b, t)
     << "\" stroke=\"#d62728\"/>\n";
  os << "<text x=\"" << (l + w - r) / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">"
     << detail::escape(x_name) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

/// Predicted response for small (0) and large (1) models across the
/// standardized moderator range [-2, 2], other predictors held at 0.
inline std::string interaction_svg(const stats::ModelFit& fit, const std::string& moderator) {
  const std::string term = "size_class:" + moderator;
  auto coef = [&](const std::string& n) {
    for (std::size_t i = 0; i < fit.names.size(); ++i) {
      if (fit.names[i] == n) return fit.betas[static_cast<Eigen::Index>(i)];
    }
    return 0.0;
  };
  auto predict = [&](double size, double z) {
    return coef("(Intercept)") + coef("size_class") * size + coef(moderator) * z +
           coef(term) * size * z;
  };
  std::vector<double> ys;
  for (double s : {0.0, 1.0}) {
    for (double z : {-2.0, 2.0}) ys.push_back(predict(s, z));
  }
  const auto ay = detail::axis_of(ys);
  const int w = 460, h = 340, l = 60, r = 110, t = 40, b = 50;
  const detail::Axis ax{-2.0, 2.0};
  std::ostringstream os;
  os << detail::header(w, h);
  os << "<text x=\"" << l << "\" y=\"20\" font-size=\"13\">Model size x "
     << detail::escape(moderator) << " (beta = " << metrics::format_fixed(coef(term), 2)
     << ")</text>\n";
  os << "<rect x=\"" << l << "\" y=\"" << t << "\" width=\"" << w - l - r << "\" height=\""
     << h - t - b << "\" fill=\"none\" stroke=\"#444\"/>\n";
  const char* colors[2] = {"#ff7f0e", "#1f77b4"};
  const char* names[2] = {"small", "large"};
  for (int s = 0; s < 2; ++s) {
    const double y0 = predict(s, -2.0), y1 = predict(s, 2.0);
    os << "<line x1=\"" << ax.map(-2.0, l, w - r) << "\" y1=\"" << ay.map(y0, h - b, t)
       << "\" x2=\"" << ax.map(2.0, l, w - r) << "\" y2=\"" << ay.map(y1, h - b, t)
       << "\" stroke=\"" << colors[s] << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << w - r + 6 << "\" y=\"" << ay.map(y1, h - b, t) + 4 << "\" fill=\""
       << colors[s] << "\">" << names[s] << "</text>\n";
  }
  os << "<text x=\"" << (l + w - r) / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">"
     << detail::escape(moderator) << " (z)</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace halluest::plot
