#pragma once

#include <string>
#include <vector>

namespace survanchor::svg {

struct Rgb {
  int r = 0, g = 0, b = 0;
  std::string hex() const;
};

/// Sequential map for values in [0, 1] (viridis stops).
Rgb sequential(double t);
/// Diverging blue-white-red map for values in [-1, 1].
Rgb diverging(double t);

inline constexpr const char* kEmptyFill = "#d9d9d9";

/// Minimal SVG writer. Coordinates are printed with fixed precision so the
/// output is byte-stable across runs.
class Document {
 public:
  Document(double width, double height);

  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& stroke = "none", double stroke_width = 0.0);
  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double width = 1.0, bool dashed = false);
  void circle(double cx, double cy, double r, const std::string& fill,
              double opacity = 1.0);
  /// Closed polygon when `closed`, polyline otherwise.
  void path(const std::vector<std::pair<double, double>>& points, const std::string& stroke,
            const std::string& fill, double width = 1.0, bool closed = false);
  void text(double x, double y, const std::string& content, double size = 11.0,
            const std::string& anchor = "start", double rotate = 0.0);

  std::string str() const;

 private:
  double width_;
  double height_;
  std::string body_;
};

std::string escape(const std::string& text);

}  // namespace survanchor::svg
