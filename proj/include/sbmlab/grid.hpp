#pragma once

// Spatial grids, test functions from the admissible class, and gridded
// space-time fields with the columnar text format used by every module
// that persists data.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sbmlab/common.hpp"

namespace sbmlab {

struct GridSpec {
  double x_min = -20.0;
  double x_max = 20.0;
  double dx = 0.01;
  double dt = 0.005;
  double t_max = 1.0;
  bool moving_window = false;  // track the front at speed sqrt(2 alpha)

  int cells() const {
    return static_cast<int>(std::lround((x_max - x_min) / dx)) + 1;
  }

  void validate() const {
    if (!(dx > 0.0 && dt > 0.0 && t_max > 0.0))
      throw ValidationError("grid: dx, dt, t_max must be positive");
    if (!(dt <= dx + 1e-15)) throw ValidationError("grid: dt <= dx required (splitting guard)");
    const double ratio = (x_max - x_min) / dx;
    if (std::abs(ratio - std::lround(ratio)) > 1e-6)
      throw ValidationError("grid: (x_max - x_min)/dx must be an integer");
    if (!moving_window && x_max - x_min < 20.0)
      throw ValidationError("grid: fixed window narrower than 20 spatial units");
  }
};

// Nonnegative bounded data f on (-infty, 0]. Step kind is first-class (it is
// automatically in the admissible class); tabulated kind is best-effort.
struct TestFunction {
  enum class Kind { zero, step, table };
  Kind kind = Kind::zero;
  double height = 0.0;  // step
  double a = -1.0;      // step support [a, b], b <= 0
  double b = 0.0;
  std::vector<double> samples;  // table on [table_left, 0]
  double table_left = -1.0;

  static TestFunction zero() { return TestFunction{}; }

  static TestFunction step(double height, double a, double b) {
    TestFunction f;
    f.kind = Kind::step;
    f.height = height;
    f.a = a;
    f.b = b;
    f.validate();
    return f;
  }

  void validate() const {
    switch (kind) {
      case Kind::zero: return;
      case Kind::step:
        if (!(height >= 0.0)) throw ValidationError("test function: step height must be >= 0");
        if (!(a < b && b <= 0.0))
          throw ValidationError("test function: step support needs a < b <= 0");
        return;
      case Kind::table:
        if (samples.size() < 2 || !(table_left < 0.0))
          throw ValidationError("test function: table needs >= 2 samples on [left, 0]");
        for (double s : samples)
          if (!(s >= 0.0)) throw ValidationError("test function: table values must be >= 0");
        return;
    }
  }

  bool is_zero() const { return kind == Kind::zero || (kind == Kind::step && height == 0.0); }

  // f(y) for y <= 0.
  double eval(double y) const {
    switch (kind) {
      case Kind::zero: return 0.0;
      case Kind::step: return (y >= a && y <= b) ? height : 0.0;
      case Kind::table: {
        if (y < table_left || y > 0.0) return 0.0;
        const double pos = (y - table_left) / (0.0 - table_left) * (samples.size() - 1);
        const std::size_t i = std::min(static_cast<std::size_t>(pos), samples.size() - 2);
        const double s = pos - static_cast<double>(i);
        return (1.0 - s) * samples[i] + s * samples[i + 1];
      }
    }
    return 0.0;
  }

  // Initial data in the barrier frame: value at x >= 0 is f(-x).
  double initial(double x) const { return eval(-x); }

  double sup() const {
    switch (kind) {
      case Kind::zero: return 0.0;
      case Kind::step: return height;
      case Kind::table: return *std::max_element(samples.begin(), samples.end());
    }
    return 0.0;
  }

  // Compact support implies the exponential-moment condition of the
  // admissible class; table kind is flagged best-effort.
  bool paper_class() const { return kind != Kind::table; }
};

// Time-indexed snapshots of a gridded field. Snapshots record the window
// offset so moving-window solves expose absolute coordinates.
struct SpaceTimeField {
  GridSpec grid;
  std::string kind;  // u | u_star | v | g_hat | g | v_scaled | k
  std::vector<double> times;
  std::vector<double> offsets;              // window shift (absolute = x_min + offset + i dx)
  std::vector<std::vector<double>> values;  // one row per snapshot
  bool zero_test_function = true;           // monotonicity assertions apply only then

  std::size_t snapshot_count() const { return times.size(); }

  double x_at(std::size_t snap, std::size_t i) const {
    return grid.x_min + offsets[snap] + static_cast<double>(i) * grid.dx;
  }

  double x_left(std::size_t snap) const { return grid.x_min + offsets[snap]; }
  double x_right(std::size_t snap) const {
    return grid.x_min + offsets[snap] + (values[snap].size() - 1) * grid.dx;
  }

  std::size_t snapshot_index(double t, double tol = 1e-9) const {
    for (std::size_t i = 0; i < times.size(); ++i)
      if (std::abs(times[i] - t) <= tol * std::max(1.0, std::abs(t))) return i;
    throw ValidationError("field: no snapshot stored at t = " + std::to_string(t));
  }

  // Linear interpolation in x within one snapshot.
  double sample_at_snapshot(std::size_t snap, double x) const {
    const auto& row = values[snap];
    const double pos = (x - x_left(snap)) / grid.dx;
    if (pos <= 0.0) return row.front();
    if (pos >= static_cast<double>(row.size() - 1)) return row.back();
    const std::size_t i = static_cast<std::size_t>(pos);
    const double s = pos - static_cast<double>(i);
    return (1.0 - s) * row[i] + s * row[i + 1];
  }

  // Bilinear interpolation in (t, x); requires a dense snapshot history.
  double sample(double t, double x) const {
    if (times.empty()) throw ValidationError("field: empty");
    if (t <= times.front()) return sample_at_snapshot(0, x);
    if (t >= times.back()) return sample_at_snapshot(times.size() - 1, x);
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - times.begin());
    const double w = (t - times[j - 1]) / (times[j] - times[j - 1]);
    return (1.0 - w) * sample_at_snapshot(j - 1, x) + w * sample_at_snapshot(j, x);
  }

  void write_columnar(std::ostream& os) const {
    char buf[160];
    os << "# " << kind << "\n";
    std::snprintf(buf, sizeof buf, "# grid: %.17g %.17g %.17g %.17g %.17g\n", grid.x_min,
                  grid.x_max, grid.dx, grid.dt, grid.t_max);
    os << buf;
    for (std::size_t snap = 0; snap < times.size(); ++snap) {
      for (std::size_t i = 0; i < values[snap].size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", times[snap], x_at(snap, i),
                      values[snap][i]);
        os << buf;
      }
    }
  }

  void write_columnar_file(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw ValidationError("field: cannot open " + path);
    write_columnar(os);
  }
};

}  // namespace sbmlab
