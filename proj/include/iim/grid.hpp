// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace iim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  double operator[](int axis) const { return axis == 0 ? x : y; }
  double& operator[](int axis) { return axis == 0 ? x : y; }
  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
};

double norm(Vec2 v);

/// Node-centred uniform lattice with square cells. Node (i, j) sits at
/// origin + (i dx, j dx); with periodic axes the lattice tiles [0, nx dx).
struct Grid2D {
  int nx = 0;
  int ny = 0;
  double dx = 0.0;
  Vec2 origin{};
  bool periodic_x = true;
  bool periodic_y = true;

  /// n x n nodes covering the unit square, dx = 1/n.
  static Grid2D unit_square(int n, bool periodic = true);

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  int i_of(std::size_t idx) const { return static_cast<int>(idx % static_cast<std::size_t>(nx)); }
  int j_of(std::size_t idx) const { return static_cast<int>(idx / static_cast<std::size_t>(nx)); }
  Vec2 position(int i, int j) const { return {origin.x + i * dx, origin.y + j * dx}; }
  Vec2 position(std::size_t idx) const { return position(i_of(idx), j_of(idx)); }
  int extent(int axis) const { return axis == 0 ? nx : ny; }
  bool periodic(int axis) const { return axis == 0 ? periodic_x : periodic_y; }

  /// Node reached from (i, j) by integer offsets, wrapping periodic axes;
  /// empty when the offset leaves a non-periodic lattice.
  std::optional<std::size_t> offset(int i, int j, int di, int dj) const;
  std::optional<std::size_t> offset(std::size_t idx, int axis, int steps) const;
};

enum class PointClass : std::uint8_t { Interior, Affected, Exterior };

/// Node values plus the classification mask used for norms.
struct ScalarField {
  Grid2D grid;
  std::vector<double> values;
  std::vector<PointClass> mask;

  ScalarField() = default;
  ScalarField(const Grid2D& g, std::vector<PointClass> m);
  ScalarField(const Grid2D& g, std::vector<PointClass> m, std::vector<double> v);
};

enum class NormKind { L2, Linf };

/// Plain vector norm over non-exterior nodes (no dx weighting).
double field_norm(const ScalarField& f, NormKind kind);
double masked_norm(std::span<const double> values, std::span<const PointClass> mask, NormKind kind);

/// Subtracts the mean over non-exterior nodes; exterior entries stay zero.
void project_zero_mean(std::span<double> values, std::span<const PointClass> mask);
double masked_mean(std::span<const double> values, std::span<const PointClass> mask);

/// Zeroes every exterior entry.
void zero_exterior(std::span<double> values, std::span<const PointClass> mask);

class LevelSetGeometry;

/// Tags nodes: EXTERIOR outside the domain (phi < 0 when `domain_positive`,
/// always empty for two-sided problems), AFFECTED when any node of the 1D
/// footprint of half-width `stencil_half_width` along either axis lies on the
/// other side, INTERIOR otherwise. Two-sided problems pass
/// `two_sided = true`: both phi signs belong to the domain and a footprint
/// crossing the interface marks the node AFFECTED.
std::vector<PointClass> classify_points(const Grid2D& grid, const LevelSetGeometry* geometry,
                                        int stencil_half_width, bool two_sided = false);

}  // namespace iim
