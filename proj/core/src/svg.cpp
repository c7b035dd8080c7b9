#include "casnsc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace casnsc::svg {

namespace {

class Canvas {
 public:
  Canvas(const context::Rect& b, double ppm) : b_(b), ppm_(ppm) {}

  double px(double x) const { return (x - b_.min_x) * ppm_; }
  double py(double y) const { return (b_.max_y - y) * ppm_; }
  double width() const { return b_.width() * ppm_; }
  double height() const { return b_.height() * ppm_; }

  template <class It, class Get>
  void polyline(std::ostringstream& os, It first, It last, Get get, const char* style) const {
    if (first == last) return;
    os << "<polyline fill=\"none\" " << style << " points=\"";
    for (auto it = first; it != last; ++it) {
      const traj::Vec2 p = get(*it);
      os << px(p.x) << ',' << py(p.y) << ' ';
    }
    os << "\"/>\n";
  }

 private:
  context::Rect b_;
  double ppm_;
};

traj::Vec2 of_point(const traj::TimedPoint& p) { return {p.x, p.y}; }
traj::Vec2 of_vec(const traj::Vec2& p) { return p; }

}  // namespace

std::string render(const Scene& s, double ppm) {
  const Canvas cv(s.bounds, ppm);
  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cv.width() << "\" height=\""
     << cv.height() << "\" viewBox=\"0 0 " << cv.width() << ' ' << cv.height() << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!s.title.empty()) {
    os << "<title>" << s.title << "</title>\n";
  }

  if (s.map) {
    const double reach = std::hypot(s.bounds.width(), s.bounds.height());
    for (const auto& line : {s.map->curb_left(), s.map->curb_right()}) {
      const traj::Vec2 a{line.point.x - reach * line.direction.x,
                         line.point.y - reach * line.direction.y};
      const traj::Vec2 b{line.point.x + reach * line.direction.x,
                         line.point.y + reach * line.direction.y};
      os << "<line x1=\"" << cv.px(a.x) << "\" y1=\"" << cv.py(a.y) << "\" x2=\"" << cv.px(b.x)
         << "\" y2=\"" << cv.py(b.y) << "\" stroke=\"green\" stroke-width=\"3\"/>\n";
    }
  }

  for (const auto& t : s.training) {
    cv.polyline(os, t.points.begin(), t.points.end(), of_point,
                "stroke=\"#999999\" stroke-opacity=\"0.35\" stroke-width=\"1\"");
  }
  if (s.prediction) {
    double wmax = 0.0;
    for (const auto& h : s.prediction->hypotheses) wmax = std::max(wmax, h.weight);
    for (const auto& h : s.prediction->hypotheses) {
      std::ostringstream style;
      const double op = wmax > 0.0 ? 0.2 + 0.8 * h.weight / wmax : 1.0;
      style << "stroke=\"red\" stroke-width=\"2.5\" stroke-opacity=\"" << op << "\"";
      const std::string st = style.str();
      cv.polyline(os, h.rollout.begin(), h.rollout.end(), of_vec, st.c_str());
    }
  }
  if (s.truth) {
    cv.polyline(os, s.truth->points.begin(), s.truth->points.end(), of_point,
                "stroke=\"black\" stroke-width=\"2\" stroke-dasharray=\"6,4\"");
  }
  if (s.observed) {
    cv.polyline(os, s.observed->points.begin(), s.observed->points.end(), of_point,
                "stroke=\"#ff69b4\" stroke-width=\"3\"");
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace casnsc::svg
