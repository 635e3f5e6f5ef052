#pragma once

#include <cmath>
#include <compare>
#include <cstddef>
#include <functional>

namespace sango {

/// Continuous 2D point/vector in grid units. Cell (c, r) has its center at (c, r).
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr Vec2& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
constexpr Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
constexpr Vec2 operator*(double s, Vec2 a) { return {a.x * s, a.y * s}; }
constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
// z-component of the 3D cross product.
constexpr double det(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
constexpr double norm_sq(Vec2 a) { return dot(a, a); }
inline double norm(Vec2 a) { return std::sqrt(norm_sq(a)); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

/// Integer grid coordinate. +row points up.
struct Cell {
  int col = 0;
  int row = 0;

  friend constexpr bool operator==(Cell, Cell) = default;
  friend constexpr auto operator<=>(Cell, Cell) = default;
};

constexpr Vec2 to_point(Cell c) { return {static_cast<double>(c.col), static_cast<double>(c.row)}; }

inline Cell nearest_cell(Vec2 p) {
  return {static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y))};
}

constexpr int chebyshev(Cell a, Cell b) {
  const int dc = a.col > b.col ? a.col - b.col : b.col - a.col;
  const int dr = a.row > b.row ? a.row - b.row : b.row - a.row;
  return dc > dr ? dc : dr;
}

}  // namespace sango

template <>
struct std::hash<sango::Cell> {
  std::size_t operator()(const sango::Cell& c) const noexcept {
    return std::hash<long long>{}((static_cast<long long>(c.col) << 32) ^ static_cast<unsigned>(c.row));
  }
};
