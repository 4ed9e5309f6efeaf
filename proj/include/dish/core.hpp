#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace dish {

// Planar point, meters.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }

  double norm() const { return std::hypot(x, y); }
  Vec2 unit() const {
    double n = norm();
    return {x / n, y / n};
  }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

// Unordered node pair, stored with first < second.
struct Pair {
  int a = -1;
  int b = -1;

  Pair() = default;
  Pair(int u, int v) : a(u < v ? u : v), b(u < v ? v : u) {}

  friend bool operator==(const Pair&, const Pair&) = default;
  friend auto operator<=>(const Pair&, const Pair&) = default;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotAdjacent : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateArrangement : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Infeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LimitExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScriptError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dish
