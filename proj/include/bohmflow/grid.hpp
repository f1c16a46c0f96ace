#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace bohmflow {

/// One uniformly sampled axis. Points run from `min` to `max` inclusive.
struct Axis {
  double min = 0.0;
  double max = 1.0;
  std::size_t n = 0;

  double spacing() const { return (max - min) / static_cast<double>(n - 1); }
  double coord(std::size_t i) const { return min + static_cast<double>(i) * spacing(); }
  double width() const { return max - min; }
  /// Length of the periodic cell used by the spectral operators (n * spacing).
  double period() const { return static_cast<double>(n) * spacing(); }

  bool operator==(const Axis&) const = default;
};

bool is_power_of_two(std::size_t n);

/// Uniform 1D (line) or 2D (plane) grid. Values on a plane are stored
/// row-major with x running fastest: index = iy * nx + ix.
class Grid {
 public:
  /// Throws Error(InvalidArgument) unless n >= 8, n is a power of two and x_max > x_min.
  static Grid line(double x_min, double x_max, std::size_t n);
  static Grid line(const Axis& x) { return line(x.min, x.max, x.n); }
  static Grid plane(const Axis& x, const Axis& y);

  int rank() const { return y_ ? 2 : 1; }
  std::size_t size() const { return x_.n * (y_ ? y_->n : 1); }
  const Axis& x() const { return x_; }
  /// Only valid for rank 2.
  const Axis& y() const;
  double cell_volume() const;
  /// FFT dimensions, slowest first ({nx} or {ny, nx}).
  std::vector<std::size_t> dims() const;
  std::vector<double> x_coords() const;

  bool operator==(const Grid&) const = default;

 private:
  Grid(Axis x, std::optional<Axis> y) : x_(x), y_(y) {}
  Axis x_;
  std::optional<Axis> y_;
};

}  // namespace bohmflow
