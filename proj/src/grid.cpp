// SPDX-License-Identifier: Apache-2.0
#include "iim/grid.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "iim/error.hpp"
#include "iim/geometry.hpp"

namespace iim {

double norm(Vec2 v) { return std::hypot(v.x, v.y); }

Grid2D Grid2D::unit_square(int n, bool periodic) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "grid needs at least two nodes per axis");
  return Grid2D{n, n, 1.0 / n, {0.0, 0.0}, periodic, periodic};
}

std::optional<std::size_t> Grid2D::offset(int i, int j, int di, int dj) const {
  int ii = i + di;
  int jj = j + dj;
  if (ii < 0 || ii >= nx) {
    if (!periodic_x) return std::nullopt;
    ii = ((ii % nx) + nx) % nx;
  }
  if (jj < 0 || jj >= ny) {
    if (!periodic_y) return std::nullopt;
    jj = ((jj % ny) + ny) % ny;
  }
  return index(ii, jj);
}

std::optional<std::size_t> Grid2D::offset(std::size_t idx, int axis, int steps) const {
  return axis == 0 ? offset(i_of(idx), j_of(idx), steps, 0) : offset(i_of(idx), j_of(idx), 0, steps);
}

ScalarField::ScalarField(const Grid2D& g, std::vector<PointClass> m)
    : grid(g), values(g.size(), 0.0), mask(std::move(m)) {
  assert(mask.size() == grid.size());
}

ScalarField::ScalarField(const Grid2D& g, std::vector<PointClass> m, std::vector<double> v)
    : grid(g), values(std::move(v)), mask(std::move(m)) {
  assert(mask.size() == grid.size() && values.size() == grid.size());
}

double masked_norm(std::span<const double> values, std::span<const PointClass> mask, NormKind kind) {
  assert(values.size() == mask.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask[i] == PointClass::Exterior) continue;
    if (kind == NormKind::Linf)
      acc = std::max(acc, std::abs(values[i]));
    else
      acc += values[i] * values[i];
  }
  return kind == NormKind::Linf ? acc : std::sqrt(acc);
}

double field_norm(const ScalarField& f, NormKind kind) { return masked_norm(f.values, f.mask, kind); }

double masked_mean(std::span<const double> values, std::span<const PointClass> mask) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask[i] == PointClass::Exterior) continue;
    sum += values[i];
    ++count;
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

void project_zero_mean(std::span<double> values, std::span<const PointClass> mask) {
  const double mean = masked_mean(values, mask);
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] = mask[i] == PointClass::Exterior ? 0.0 : values[i] - mean;
}

void zero_exterior(std::span<double> values, std::span<const PointClass> mask) {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (mask[i] == PointClass::Exterior) values[i] = 0.0;
}

std::vector<PointClass> classify_points(const Grid2D& grid, const LevelSetGeometry* geometry,
                                        int stencil_half_width, bool two_sided) {
  std::vector<PointClass> tags(grid.size(), PointClass::Interior);
  if (geometry == nullptr) return tags;

  std::vector<Side> side(grid.size());
  for (std::size_t idx = 0; idx < grid.size(); ++idx) side[idx] = side_of(geometry->phi(grid.position(idx)));

  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    if (!two_sided && side[idx] == Side::Minus) {
      tags[idx] = PointClass::Exterior;
      continue;
    }
    bool affected = false;
    for (int axis = 0; axis < 2 && !affected; ++axis) {
      for (int s = -stencil_half_width; s <= stencil_half_width && !affected; ++s) {
        if (s == 0) continue;
        const auto nb = grid.offset(idx, axis, s);
        if (nb && side[*nb] != side[idx]) affected = true;
      }
    }
    if (affected) tags[idx] = PointClass::Affected;
  }
  return tags;
}

}  // namespace iim
