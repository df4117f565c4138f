// Copyright 2026 The enaet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "enaet/transforms.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace enaet {

namespace {

using sampling::kCornerOffset;
using sampling::kMagnitudeHi;
using sampling::kMagnitudeLo;
using sampling::kRotationDeg;
using sampling::kScaleHi;
using sampling::kScaleLo;
using sampling::kShearDeg;
using sampling::kTranslation;

constexpr ParamRange kRot{-kRotationDeg, kRotationDeg};
constexpr ParamRange kTrans{-kTranslation, kTranslation};
constexpr ParamRange kScale{kScaleLo, kScaleHi};
constexpr ParamRange kShear{-kShearDeg, kShearDeg};
constexpr ParamRange kCorner{-kCornerOffset, kCornerOffset};
constexpr ParamRange kMag{kMagnitudeLo, kMagnitudeHi};

constexpr std::array<ParamRange, 3> kEuclideanRanges{kRot, kTrans, kTrans};
constexpr std::array<ParamRange, 4> kSimilarityRanges{kScale, kRot, kTrans, kTrans};
constexpr std::array<ParamRange, 6> kAffineRanges{kScale, kScale, kShear, kRot, kTrans, kTrans};
constexpr std::array<ParamRange, 8> kProjectiveRanges{kCorner, kCorner, kCorner, kCorner,
                                                      kCorner, kCorner, kCorner, kCorner};
constexpr std::array<ParamRange, 4> kCcbsRanges{kMag, kMag, kMag, kMag};


const std::array<Eigen::Vector2d, 4>& canonical_corners() {
  static const std::array<Eigen::Vector2d, 4> corners = {
      Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, -1), Eigen::Vector2d(1, 1),
      Eigen::Vector2d(-1, 1)};
  return corners;
}

double radians(double deg) { return deg * std::numbers::pi / 180.0; }
double degrees(double rad) { return rad * 180.0 / std::numbers::pi; }

Eigen::Matrix3d build_affine(double sx, double sy, double shear_deg, double rot_deg, double tx,
                             double ty) {
  Eigen::Matrix2d scale = Eigen::Vector2d(sx, sy).asDiagonal();
  Eigen::Matrix2d shear;
  shear << 1.0, std::tan(radians(shear_deg)), 0.0, 1.0;
  const double c = std::cos(radians(rot_deg));
  const double s = std::sin(radians(rot_deg));
  Eigen::Matrix2d rot;
  rot << c, -s, s, c;

  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m.topLeftCorner<2, 2>() = rot * shear * scale;
  m(0, 2) = tx;
  m(1, 2) = ty;
  return m;
}

void check_in_range(std::span<const ParamRange> ranges, std::span<const double> params,
                    const char* what) {
  if (params.size() != ranges.size())
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(ranges.size()) +
                                " parameters, got " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!std::isfinite(params[i]) || !ranges[i].contains(params[i]))
      throw std::out_of_range(std::string(what) + ": parameter " + std::to_string(i) + " = " +
                              std::to_string(params[i]) + " outside its sampling range");
  }
}

Eigen::Matrix3d normalized(const Eigen::Matrix3d& m) {
  if (!std::isfinite(m(2, 2)) || std::abs(m(2, 2)) < 1e-12)
    throw std::domain_error("homography has vanishing bottom-right entry");
  Eigen::Matrix3d out = m / m(2, 2);
  out(2, 2) = 1.0;
  return out;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double luma(const Image& img, int y, int x) {
  return 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
}

Image blend(const Image& base, const Image& img, double m) {
  Image out = img;
  for (std::size_t i = 0; i < out.pixels.size(); ++i)
    out.pixels[i] = clamp01((1.0 - m) * base.pixels[i] + m * img.pixels[i]);
  return out;
}

std::vector<double> to_unit_interval_check(std::span<const ParamRange> ranges,
                                           std::span<const double> unit) {
  if (unit.size() != ranges.size()) throw std::invalid_argument("wrong number of unit draws");
  std::vector<double> params(unit.size());
  for (std::size_t i = 0; i < unit.size(); ++i) {
    if (!(unit[i] >= 0.0 && unit[i] <= 1.0)) throw std::out_of_range("unit draw outside [0, 1]");
    params[i] = ranges[i].lo + unit[i] * (ranges[i].hi - ranges[i].lo);
  }
  return params;
}

TransformTarget encode(std::span<const ParamRange> ranges, std::span<const double> params) {
  check_in_range(ranges, params, "target_vector");
  TransformTarget t;
  t.values.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double v = 2.0 * (params[i] - ranges[i].lo) / (ranges[i].hi - ranges[i].lo) - 1.0;
    t.values[i] = std::clamp(v, -1.0, 1.0);
  }
  return t;
}

}  // namespace

int degrees_of_freedom(Family f) {
  switch (f) {
    case Family::Projective: return 8;
    case Family::Affine: return 6;
    case Family::Similarity: return 4;
    case Family::Euclidean: return 3;
    case Family::Ccbs: return 4;
  }
  throw std::invalid_argument("unknown family");
}

int degrees_of_freedom(SpatialKind k) { return degrees_of_freedom(to_family(k)); }

Family to_family(SpatialKind k) { return static_cast<Family>(static_cast<int>(k)); }

SpatialKind to_spatial(Family f) {
  if (f == Family::Ccbs) throw std::invalid_argument("CCBS is not a spatial family");
  return static_cast<SpatialKind>(static_cast<int>(f));
}

std::string_view family_name(Family f) {
  switch (f) {
    case Family::Projective: return "proj";
    case Family::Affine: return "affine";
    case Family::Similarity: return "sim";
    case Family::Euclidean: return "euc";
    case Family::Ccbs: return "ccbs";
  }
  return "?";
}

std::optional<Family> parse_family(std::string_view name) {
  for (Family f : kAllFamilies)
    if (family_name(f) == name) return f;
  return std::nullopt;
}

std::span<const ParamRange> param_ranges(Family f) {
  switch (f) {
    case Family::Projective: return kProjectiveRanges;
    case Family::Affine: return kAffineRanges;
    case Family::Similarity: return kSimilarityRanges;
    case Family::Euclidean: return kEuclideanRanges;
    case Family::Ccbs: return kCcbsRanges;
  }
  throw std::invalid_argument("unknown family");
}

std::span<const ParamRange> param_ranges(SpatialKind k) { return param_ranges(to_family(k)); }

Eigen::Vector2d SpatialTransform::apply(const Eigen::Vector2d& p) const {
  const Eigen::Vector3d q = matrix * p.homogeneous();
  return q.hnormalized();
}

std::optional<Eigen::Matrix3d> fit_projective(std::span<const double> corner_offsets) {
  if (corner_offsets.size() != 8) throw std::invalid_argument("fit_projective needs 8 offsets");
  Eigen::Matrix<double, 8, 8> a = Eigen::Matrix<double, 8, 8>::Zero();
  Eigen::Matrix<double, 8, 1> b;
  const auto& src = canonical_corners();
  for (int i = 0; i < 4; ++i) {
    const double x = src[i].x();
    const double y = src[i].y();
    const double u = x + corner_offsets[2 * i];
    const double v = y + corner_offsets[2 * i + 1];
    a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
    a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
    b(2 * i) = u;
    b(2 * i + 1) = v;
  }
  const Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(a);
  if (std::abs(lu.determinant()) < 1e-12) return std::nullopt;
  const Eigen::Matrix<double, 8, 1> h = lu.solve(b);
  Eigen::Matrix3d m;
  m << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
  if (!m.allFinite()) return std::nullopt;
  return m;
}

Eigen::Matrix3d matrix_from_params(SpatialKind kind, std::span<const double> p) {
  check_in_range(param_ranges(kind), p, "matrix_from_params");
  switch (kind) {
    case SpatialKind::Euclidean: return build_affine(1.0, 1.0, 0.0, p[0], p[1], p[2]);
    case SpatialKind::Similarity: return build_affine(p[0], p[0], 0.0, p[1], p[2], p[3]);
    case SpatialKind::Affine: return build_affine(p[0], p[1], p[2], p[3], p[4], p[5]);
    case SpatialKind::Projective: {
      auto m = fit_projective(p);
      if (!m) throw std::domain_error("degenerate corner configuration");
      return *m;
    }
  }
  throw std::invalid_argument("unknown spatial kind");
}

SpatialTransform spatial_from_unit(SpatialKind kind, std::span<const double> unit) {
  SpatialTransform t;
  t.kind = kind;
  t.params = to_unit_interval_check(param_ranges(kind), unit);
  t.matrix = matrix_from_params(kind, t.params);
  return t;
}

SpatialTransform sample_spatial(SpatialKind kind, Rng& rng) {
  const int dof = degrees_of_freedom(kind);
  std::vector<double> unit(static_cast<std::size_t>(dof));
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (double& u : unit) u = rng.uniform();
    if (kind == SpatialKind::Projective) {
      auto params = to_unit_interval_check(param_ranges(kind), unit);
      if (!fit_projective(params)) continue;
    }
    return spatial_from_unit(kind, unit);
  }
  throw std::runtime_error("could not sample a non-degenerate projective transform");
}

PhotometricTransform ccbs_from_unit(std::span<const double> unit) {
  const auto p = to_unit_interval_check(kCcbsRanges, unit);
  return PhotometricTransform{p[0], p[1], p[2], p[3]};
}

PhotometricTransform sample_ccbs(Rng& rng) {
  std::array<double, 4> unit{};
  for (double& u : unit) u = rng.uniform();
  return ccbs_from_unit(unit);
}

bool satisfies(SpatialKind kind, const Eigen::Matrix3d& m, double tol) {
  if (!m.allFinite() || std::abs(m(2, 2) - 1.0) > tol) return false;
  if (kind == SpatialKind::Projective) return true;
  if (std::abs(m(2, 0)) > tol || std::abs(m(2, 1)) > tol) return false;
  if (kind == SpatialKind::Affine) return true;
  if (std::abs(m(0, 0) - m(1, 1)) > tol || std::abs(m(0, 1) + m(1, 0)) > tol) return false;
  const double scale2 = m(0, 0) * m(0, 0) + m(1, 0) * m(1, 0);
  if (scale2 <= tol) return false;
  if (kind == SpatialKind::Similarity) return true;
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  return std::abs(scale2 - 1.0) <= tol && std::abs(det - 1.0) <= tol;
}

SpatialKind classify(const Eigen::Matrix3d& m, double tol) {
  for (SpatialKind k : {SpatialKind::Euclidean, SpatialKind::Similarity, SpatialKind::Affine})
    if (satisfies(k, m, tol)) return k;
  return SpatialKind::Projective;
}

std::vector<double> params_from_matrix(SpatialKind kind, const Eigen::Matrix3d& m) {
  const double rot = degrees(std::atan2(m(1, 0), m(0, 0)));
  switch (kind) {
    case SpatialKind::Euclidean: return {rot, m(0, 2), m(1, 2)};
    case SpatialKind::Similarity: return {std::hypot(m(0, 0), m(1, 0)), rot, m(0, 2), m(1, 2)};
    case SpatialKind::Affine: {
      // A = R * [[sx, tan(shear) * sy], [0, sy]]
      const double c = std::cos(radians(rot));
      const double s = std::sin(radians(rot));
      const double sx = c * m(0, 0) + s * m(1, 0);
      const double u01 = c * m(0, 1) + s * m(1, 1);
      const double sy = -s * m(0, 1) + c * m(1, 1);
      return {sx, sy, degrees(std::atan2(u01, sy)), rot, m(0, 2), m(1, 2)};
    }
    case SpatialKind::Projective: {
      std::vector<double> offsets;
      offsets.reserve(8);
      for (const auto& corner : canonical_corners()) {
        const Eigen::Vector2d mapped = (m * corner.homogeneous()).hnormalized();
        offsets.push_back(mapped.x() - corner.x());
        offsets.push_back(mapped.y() - corner.y());
      }
      return offsets;
    }
  }
  throw std::invalid_argument("unknown spatial kind");
}

namespace {

SpatialTransform from_matrix(const Eigen::Matrix3d& raw) {
  SpatialTransform t;
  t.matrix = normalized(raw);
  t.kind = classify(t.matrix);
  t.params = params_from_matrix(t.kind, t.matrix);
  return t;
}

}  // namespace

SpatialTransform compose(const SpatialTransform& a, const SpatialTransform& b) {
  return from_matrix(a.matrix * b.matrix);
}

SpatialTransform invert(const SpatialTransform& t) {
  const double det = t.matrix.determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-12)
    throw std::domain_error("cannot invert a singular homography");
  return from_matrix(t.matrix.inverse());
}

SpatialTransform identity_transform(SpatialKind kind) {
  SpatialTransform t;
  t.kind = kind;
  t.matrix = Eigen::Matrix3d::Identity();
  t.params = params_from_matrix(kind, t.matrix);
  return t;
}

Image warp(const Image& image, const SpatialTransform& t) {
  const double det = t.matrix.determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-12)
    throw std::domain_error("warp: transform matrix is not invertible");
  const Eigen::Matrix3d inv = t.matrix.inverse();

  const auto snap = [](double v) {
    const double r = std::round(v);
    return std::abs(v - r) < 1e-9 ? r : v;
  };

  Image out(image.height, image.width, image.channels, 0.0);
  for (int i = 0; i < image.height; ++i) {
    const double yn = pixel_to_normalized(i, image.height);
    for (int j = 0; j < image.width; ++j) {
      const double xn = pixel_to_normalized(j, image.width);
      const Eigen::Vector3d src = inv * Eigen::Vector3d(xn, yn, 1.0);
      if (std::abs(src.z()) < 1e-15) continue;
      const double sx = snap(normalized_to_pixel(src.x() / src.z(), image.width));
      const double sy = snap(normalized_to_pixel(src.y() / src.z(), image.height));
      if (!(sx > -1.0 && sx < image.width && sy > -1.0 && sy < image.height)) continue;

      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double fx = sx - x0;
      const double fy = sy - y0;
      const std::array<int, 2> xs{x0, x0 + 1};
      const std::array<int, 2> ys{y0, y0 + 1};
      const std::array<double, 2> wx{1.0 - fx, fx};
      const std::array<double, 2> wy{1.0 - fy, fy};
      for (int c = 0; c < image.channels; ++c) {
        double acc = 0.0;
        for (int a = 0; a < 2; ++a) {
          if (wy[a] == 0.0 || ys[a] < 0 || ys[a] >= image.height) continue;
          for (int b = 0; b < 2; ++b) {
            if (wx[b] == 0.0 || xs[b] < 0 || xs[b] >= image.width) continue;
            acc += wy[a] * wx[b] * image.at(ys[a], xs[b], c);
          }
        }
        out.at(i, j, c) = clamp01(acc);
      }
    }
  }
  return out;
}

Image adjust_color(const Image& image, double magnitude) {
  if (image.channels != 3) return image;
  Image base = image;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const double g = luma(image, y, x);
      for (int c = 0; c < 3; ++c) base.at(y, x, c) = g;
    }
  return blend(base, image, magnitude);
}

Image adjust_contrast(const Image& image, double magnitude) {
  double mean = 0.0;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      mean += image.channels == 3 ? luma(image, y, x) : image.at(y, x, 0);
  mean /= static_cast<double>(image.height) * image.width;
  Image base(image.height, image.width, image.channels, mean);
  return blend(base, image, magnitude);
}

Image adjust_brightness(const Image& image, double magnitude) {
  Image base(image.height, image.width, image.channels, 0.0);
  return blend(base, image, magnitude);
}

Image adjust_sharpness(const Image& image, double magnitude) {
  // 3x3 smoothing kernel [[1,1,1],[1,5,1],[1,1,1]] / 13; border pixels keep
  // their value.
  Image base = image;
  for (int y = 1; y + 1 < image.height; ++y)
    for (int x = 1; x + 1 < image.width; ++x)
      for (int c = 0; c < image.channels; ++c) {
        double acc = 4.0 * image.at(y, x, c);
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) acc += image.at(y + dy, x + dx, c);
        base.at(y, x, c) = acc / 13.0;
      }
  return blend(base, image, magnitude);
}

Image apply_ccbs(const Image& image, const PhotometricTransform& t) {
  Image out = adjust_color(image, t.color);
  out = adjust_contrast(out, t.contrast);
  out = adjust_brightness(out, t.brightness);
  return adjust_sharpness(out, t.sharpness);
}

TransformTarget target_vector(const SpatialTransform& t) {
  return encode(param_ranges(t.kind), t.params);
}

TransformTarget target_vector(const PhotometricTransform& t) {
  const auto p = t.as_array();
  return encode(kCcbsRanges, p);
}

std::vector<double> params_from_target(Family f, const TransformTarget& target) {
  const auto ranges = param_ranges(f);
  if (target.values.size() != ranges.size())
    throw std::invalid_argument("target length does not match family");
  std::vector<double> params(ranges.size());
  for (std::size_t i = 0; i < ranges.size(); ++i)
    params[i] = ranges[i].lo + (target.values[i] + 1.0) * 0.5 * (ranges[i].hi - ranges[i].lo);
  return params;
}

}  // namespace enaet
