#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "dish/classify.hpp"
#include "dish/orphanage.hpp"
#include "dish/set_cover.hpp"
#include "dish/topology.hpp"

namespace dish {

// SVG picture of a deployment: links, unsafe pairs and their coverage disks,
// orphanage witnesses, and planned altruist positions.
//
// Conventions: 1 SVG user unit = 1 metre; the y axis points up (world y is
// negated on output, so the viewer never needs a flip transform that would
// also mirror the labels); the viewBox is the bounding box of all peers and
// altruists inflated by the radio range.

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
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

}  // namespace detail

inline std::string render_svg(const Topology& t, const UnsafePairSet& u,
                              const OrphanageSet* orphanages = nullptr,
                              const Placement* placement = nullptr) {
  using detail::svg_num;
  using detail::xml_escape;
  const double r = t.radio_range;

  // World-space bounds over everything drawn, then inflate by the range so
  // every coverage disk fits inside the viewBox.
  double lo_x = 0.0, hi_x = 0.0, lo_y = 0.0, hi_y = 0.0;
  bool first = true;
  auto grow = [&](Vec2 p) {
    if (first) {
      lo_x = hi_x = p.x;
      lo_y = hi_y = p.y;
      first = false;
      return;
    }
    lo_x = std::min(lo_x, p.x);
    hi_x = std::max(hi_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_y = std::max(hi_y, p.y);
  };
  for (const auto& p : t.peers) grow(p.pos);
  if (placement)
    for (const auto& a : placement->altruists) grow(a.pos);
  const double pad = r + 1.0;
  lo_x -= pad;
  hi_x += pad;
  lo_y -= pad;
  hi_y += pad;

  // Screen coordinates: x unchanged, y negated (y-up).
  auto sx = [&](double x) { return svg_num(x); };
  auto sy = [&](double y) { return svg_num(-y); };
  const double vw = hi_x - lo_x;
  const double vh = hi_y - lo_y;
  const double width_px = 900.0;
  const double height_px = width_px * vh / vw;
  const double sw = std::max(r / 120.0, 0.02);  // hairline stroke
  const double fs = r / 7.0;                    // label font size
  const double dot = r / 40.0;

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" + svg_num(lo_x) +
       " " + svg_num(-hi_y) + " " + svg_num(vw) + " " + svg_num(vh) +
       "\" width=\"" + svg_num(width_px) + "\" height=\"" +
       svg_num(height_px) + "\">\n";
  s += "<rect x=\"" + svg_num(lo_x) + "\" y=\"" + svg_num(-hi_y) +
       "\" width=\"" + svg_num(vw) + "\" height=\"" + svg_num(vh) +
       "\" fill=\"#fcfcf9\"/>\n";

  // Coverage disks around each unsafe-pair endpoint.
  if (u.size() > 0) {
    s += "<g fill=\"#3b82f6\" fill-opacity=\"0.06\" stroke=\"#3b82f6\" "
         "stroke-opacity=\"0.35\" stroke-width=\"" +
         svg_num(sw) + "\">\n";
    for (const auto& d : covering_disks(t, u)) {
      s += "  <circle cx=\"" + sx(d.center.x) + "\" cy=\"" + sy(d.center.y) +
           "\" r=\"" + svg_num(d.radius) + "\"/>\n";
    }
    s += "</g>\n";
  }

  // Links: plain in grey, unsafe pairs on top in red.
  const AdjacencyGraph g = build_graph(t);
  s += "<g stroke=\"#9ca3af\" stroke-width=\"" + svg_num(sw * 2) + "\">\n";
  for (const Pair& e : g.edges) {
    if (u.contains(e)) continue;
    const Vec2 a = t.pos_of(e.a), b = t.pos_of(e.b);
    s += "  <line x1=\"" + sx(a.x) + "\" y1=\"" + sy(a.y) + "\" x2=\"" +
         sx(b.x) + "\" y2=\"" + sy(b.y) + "\"/>\n";
  }
  s += "</g>\n";
  if (u.size() > 0) {
    s += "<g stroke=\"#dc2626\" stroke-width=\"" + svg_num(sw * 5) + "\">\n";
    for (const auto& c : u.pairs) {
      const Vec2 a = t.pos_of(c.pair.a), b = t.pos_of(c.pair.b);
      s += "  <line x1=\"" + sx(a.x) + "\" y1=\"" + sy(a.y) + "\" x2=\"" +
           sx(b.x) + "\" y2=\"" + sy(b.y) + "\"><title>" +
           xml_escape(t.id_of(c.pair.a)) + "-" + xml_escape(t.id_of(c.pair.b)) +
           ": " + to_string(c.triggering_condition) + "</title></line>\n";
    }
    s += "</g>\n";
  }

  // Orphanage witnesses: one cross per distinct coverage family.
  if (orphanages && orphanages->size() > 0) {
    const double arm = r / 30.0;
    s += "<g stroke=\"#10b981\" stroke-width=\"" + svg_num(sw * 3) + "\">\n";
    for (const auto& h : orphanages->orphanages) {
      const Vec2 w = h.witness.pos;
      s += "  <path d=\"M " + svg_num(w.x - arm) + " " + sy(w.y) + " H " +
           svg_num(w.x + arm) + " M " + sx(w.x) + " " + svg_num(-w.y - arm) +
           " V " + svg_num(-w.y + arm) + "\"><title>covers " +
           std::to_string(h.ups.size()) + " unsafe pair(s)</title></path>\n";
    }
    s += "</g>\n";
  }

  // Peers: dot plus id label, offset to the upper right.
  s += "<g fill=\"#1f2937\" font-family=\"sans-serif\" font-size=\"" +
       svg_num(fs) + "\">\n";
  for (const auto& p : t.peers) {
    s += "  <circle cx=\"" + sx(p.pos.x) + "\" cy=\"" + sy(p.pos.y) +
         "\" r=\"" + svg_num(dot) + "\"/>\n";
    s += "  <text x=\"" + svg_num(p.pos.x + 2 * dot) + "\" y=\"" +
         svg_num(-p.pos.y - 2 * dot) + "\">" + xml_escape(p.id) + "</text>\n";
  }
  s += "</g>\n";

  // Planned altruists: filled diamond, dashed range circle, index label.
  if (placement) {
    const double half = r / 25.0;
    s += "<g font-family=\"sans-serif\" font-size=\"" + svg_num(fs) + "\">\n";
    for (int i = 0; i < static_cast<int>(placement->altruists.size()); ++i) {
      const Vec2 a = placement->altruists[i].pos;
      s += "  <circle cx=\"" + sx(a.x) + "\" cy=\"" + sy(a.y) + "\" r=\"" +
           svg_num(r) + "\" fill=\"none\" stroke=\"#f59e0b\" stroke-width=\"" +
           svg_num(sw * 2) + "\" stroke-dasharray=\"" + svg_num(8 * sw) + " " +
           svg_num(8 * sw) + "\"/>\n";
      s += "  <path fill=\"#f59e0b\" d=\"M " + svg_num(a.x) + " " +
           svg_num(-a.y - half) + " L " + svg_num(a.x + half) + " " + sy(a.y) +
           " L " + svg_num(a.x) + " " + svg_num(-a.y + half) + " L " +
           svg_num(a.x - half) + " " + sy(a.y) + " Z\"/>\n";
      s += "  <text x=\"" + svg_num(a.x + 2 * half) + "\" y=\"" +
           svg_num(-a.y - 2 * half) + "\" fill=\"#b45309\">@a" +
           std::to_string(i) + "</text>\n";
    }
    s += "</g>\n";
  }

  s += "</svg>\n";
  return s;
}

inline void write_svg(const std::string& path, const std::string& svg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  out << svg;
}

}  // namespace dish
