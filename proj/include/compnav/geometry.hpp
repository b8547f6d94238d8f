#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>

namespace compnav {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  while (a > kPi) a -= 2.0 * kPi;
  while (a <= -kPi) a += 2.0 * kPi;
  return a;
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }

  double norm() const { return std::sqrt(x * x + y * y); }
  double norm_sq() const { return x * x + y * y; }
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

struct Cell {
  int x = 0;
  int y = 0;

  bool operator==(const Cell& o) const { return x == o.x && y == o.y; }
  bool operator!=(const Cell& o) const { return !(*this == o); }
};

// Row-major ordering; "lowest cell index" ties resolve through this.
inline bool operator<(const Cell& a, const Cell& b) {
  if (a.y != b.y) return a.y < b.y;
  return a.x < b.x;
}

struct CellHash {
  std::size_t operator()(const Cell& c) const {
    return std::hash<std::int64_t>()((static_cast<std::int64_t>(c.y) << 32) ^
                                     static_cast<std::uint32_t>(c.x));
  }
};

inline int chebyshev(const Cell& a, const Cell& b) {
  return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

// Amanatides-Woo traversal of the grid cells crossed by a ray. Visits the
// starting cell at distance 0, then every crossed cell in order with the
// distance at which the ray enters it. Corner crossings visit both adjacent
// cells (no diagonal skips). The visitor returns false to stop the ray.
template <class Visit>
void raycast(const Vec2& origin, double angle, double max_range, double cell_size, Visit&& visit) {
  const double dx = std::cos(angle);
  const double dy = std::sin(angle);

  int cx = static_cast<int>(std::floor(origin.x / cell_size));
  int cy = static_cast<int>(std::floor(origin.y / cell_size));

  if (!visit(Cell{cx, cy}, 0.0)) return;

  const int step_x = dx > 0.0 ? 1 : (dx < 0.0 ? -1 : 0);
  const int step_y = dy > 0.0 ? 1 : (dy < 0.0 ? -1 : 0);

  const double inf = std::numeric_limits<double>::infinity();
  double t_max_x = inf, t_delta_x = inf;
  double t_max_y = inf, t_delta_y = inf;

  if (step_x != 0) {
    const double boundary = (cx + (step_x > 0 ? 1 : 0)) * cell_size;
    t_max_x = (boundary - origin.x) / dx;
    t_delta_x = cell_size / std::abs(dx);
  }
  if (step_y != 0) {
    const double boundary = (cy + (step_y > 0 ? 1 : 0)) * cell_size;
    t_max_y = (boundary - origin.y) / dy;
    t_delta_y = cell_size / std::abs(dy);
  }

  while (true) {
    double t;
    if (t_max_x <= t_max_y) {
      t = t_max_x;
      cx += step_x;
      t_max_x += t_delta_x;
    } else {
      t = t_max_y;
      cy += step_y;
      t_max_y += t_delta_y;
    }
    if (t > max_range) return;
    if (!visit(Cell{cx, cy}, t)) return;
  }
}

// SplitMix64; used wherever reproducibility across runs must not depend on
// standard-library distribution internals.
struct SplitMix64 {
  std::uint64_t state = 0x9e3779b97f4a7c15ULL;

  explicit SplitMix64(std::uint64_t seed = 0) : state(seed + 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

  int range(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  double uniform01() { return (next() >> 11) * (1.0 / 9007199254740992.0); }
};

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  SplitMix64 rng(a ^ (b * 0x9e3779b97f4a7c15ULL));
  rng.next();
  return rng.next();
}

}  // namespace compnav
