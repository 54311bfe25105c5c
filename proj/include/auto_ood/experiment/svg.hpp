#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "auto_ood/events.hpp"
#include "auto_ood/text.hpp"

namespace auto_ood::experiment {

/// Score trajectory plot: one dot per event (blue ID, red OOD), the fixed
/// m_in line and the running m_out polyline.
inline std::string score_plot_svg(const EventLog& log, double m_in, double m_out_initial,
                                  const std::string& config_hash) {
  constexpr double W = 900, H = 420, L = 60, R = 20, T = 20, B = 40;
  double lo = std::min(m_in, m_out_initial), hi = std::max(m_in, m_out_initial);
  for (const auto& e : log.events) {
    lo = std::min({lo, e.score, e.m_out_after});
    hi = std::max({hi, e.score, e.m_out_after});
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double n = std::max<double>(1.0, static_cast<double>(log.size()) - 1.0);
  auto px = [&](double t) { return L + (W - L - R) * t / n; };
  auto py = [&](double s) { return T + (H - T - B) * (hi - s) / (hi - lo); };
  auto f = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<!-- config-hash: " << config_hash << " -->\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << L - 5 << "\" y=\"" << T + 10 << "\" font-size=\"11\" text-anchor=\"end\">"
     << text::format_double(hi).substr(0, 7) << "</text>\n";
  os << "<text x=\"" << L - 5 << "\" y=\"" << H - B << "\" font-size=\"11\" text-anchor=\"end\">"
     << text::format_double(lo).substr(0, 7) << "</text>\n";
  os << "<text x=\"" << W - R << "\" y=\"" << H - 10 << "\" font-size=\"11\" text-anchor=\"end\">t = "
     << log.size() << "</text>\n";
  for (const auto& e : log.events)
    os << "<circle cx=\"" << f(px(static_cast<double>(e.t))) << "\" cy=\"" << f(py(e.score))
       << "\" r=\"1.5\" fill=\"" << (e.is_ood_truth ? "#d62728" : "#1f77b4") << "\" fill-opacity=\"0.5\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << f(py(m_in)) << "\" x2=\"" << W - R << "\" y2=\"" << f(py(m_in))
     << "\" stroke=\"green\" stroke-dasharray=\"4 3\"/>\n";
  os << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"" << L << ',' << f(py(m_out_initial));
  for (const auto& e : log.events) os << ' ' << f(px(static_cast<double>(e.t))) << ',' << f(py(e.m_out_after));
  os << "\"/>\n";
  os << "<text x=\"" << W - R << "\" y=\"" << T + 10
     << "\" font-size=\"11\" text-anchor=\"end\">blue ID, red OOD, green m_in, black m_out</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace auto_ood::experiment
