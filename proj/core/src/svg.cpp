#include "survanchor/svg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>

namespace survanchor::svg {
namespace {

std::string num(double v) {
  if (std::abs(v) < 5e-4) v = 0.0;
  return fmt::format("{:.3f}", v);
}

Rgb lerp(const Rgb& a, const Rgb& b, double t) {
  auto mix = [t](int x, int y) {
    return static_cast<int>(std::lround(x + (y - x) * t));
  };
  return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

template <std::size_t N>
Rgb interpolate(const std::array<Rgb, N>& stops, double t) {
  if (!std::isfinite(t)) t = 0.0;
  t = std::clamp(t, 0.0, 1.0) * static_cast<double>(N - 1);
  const auto i = std::min(static_cast<std::size_t>(t), N - 2);
  return lerp(stops[i], stops[i + 1], t - static_cast<double>(i));
}

}  // namespace

std::string Rgb::hex() const { return fmt::format("#{:02x}{:02x}{:02x}", r, g, b); }

Rgb sequential(double t) {
  static constexpr std::array<Rgb, 5> stops{
      Rgb{68, 1, 84}, Rgb{59, 82, 139}, Rgb{33, 145, 140}, Rgb{94, 201, 98}, Rgb{253, 231, 37}};
  return interpolate(stops, t);
}

Rgb diverging(double t) {
  static constexpr std::array<Rgb, 3> stops{Rgb{59, 76, 192}, Rgb{247, 247, 247},
                                            Rgb{180, 4, 38}};
  return interpolate(stops, 0.5 * (t + 1.0));
}

std::string escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

Document::Document(double width, double height) : width_(width), height_(height) {}

void Document::rect(double x, double y, double w, double h, const std::string& fill,
                    const std::string& stroke, double stroke_width) {
  body_ += fmt::format(R"(<rect x="{}" y="{}" width="{}" height="{}" fill="{}")", num(x),
                       num(y), num(w), num(h), fill);
  if (stroke != "none") {
    body_ += fmt::format(R"( stroke="{}" stroke-width="{}")", stroke, num(stroke_width));
  }
  body_ += "/>\n";
}

void Document::line(double x1, double y1, double x2, double y2, const std::string& stroke,
                    double width, bool dashed) {
  body_ += fmt::format(R"(<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="{}")",
                       num(x1), num(y1), num(x2), num(y2), stroke, num(width));
  if (dashed) body_ += R"( stroke-dasharray="4 3")";
  body_ += "/>\n";
}

void Document::circle(double cx, double cy, double r, const std::string& fill, double opacity) {
  body_ += fmt::format(R"(<circle cx="{}" cy="{}" r="{}" fill="{}")", num(cx), num(cy), num(r),
                       fill);
  if (opacity < 1.0) body_ += fmt::format(R"( fill-opacity="{}")", num(opacity));
  body_ += "/>\n";
}

void Document::path(const std::vector<std::pair<double, double>>& points,
                    const std::string& stroke, const std::string& fill, double width,
                    bool closed) {
  if (points.empty()) return;
  std::string d;
  for (std::size_t i = 0; i < points.size(); ++i) {
    d += fmt::format("{}{} {}", i == 0 ? "M" : " L", num(points[i].first),
                     num(points[i].second));
  }
  if (closed) d += " Z";
  body_ += fmt::format(R"(<path d="{}" stroke="{}" fill="{}" stroke-width="{}"/>)", d, stroke,
                       fill, num(width));
  body_ += "\n";
}

void Document::text(double x, double y, const std::string& content, double size,
                    const std::string& anchor, double rotate) {
  body_ += fmt::format(R"(<text x="{}" y="{}" font-size="{}" text-anchor="{}")", num(x), num(y),
                       num(size), anchor);
  if (rotate != 0.0) {
    body_ += fmt::format(R"x( transform="rotate({} {} {})")x", num(rotate), num(x), num(y));
  }
  body_ += fmt::format(">{}</text>\n", escape(content));
}

std::string Document::str() const {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\" font-family=\"sans-serif\">\n"
      "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n{}</svg>\n",
      num(width_), num(height_), num(width_), num(height_), num(width_), num(height_), body_);
}

}  // namespace survanchor::svg
