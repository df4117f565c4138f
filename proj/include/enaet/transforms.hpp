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

#ifndef ENAET_TRANSFORMS_HPP
#define ENAET_TRANSFORMS_HPP

#include <Eigen/Core>
#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "enaet/image.hpp"
#include "enaet/rng.hpp"

namespace enaet {

/// The five members of the transformation ensemble, in decoder order.
enum class Family { Projective = 0, Affine = 1, Similarity = 2, Euclidean = 3, Ccbs = 4 };
inline constexpr int kNumFamilies = 5;
inline constexpr std::array<Family, kNumFamilies> kAllFamilies = {
    Family::Projective, Family::Affine, Family::Similarity, Family::Euclidean, Family::Ccbs};

enum class SpatialKind { Projective = 0, Affine = 1, Similarity = 2, Euclidean = 3 };

/// 8 / 6 / 4 / 3 for the spatial families, 4 for CCBS.
int degrees_of_freedom(Family f);
int degrees_of_freedom(SpatialKind k);
Family to_family(SpatialKind k);
SpatialKind to_spatial(Family f);  // throws for Ccbs

/// Short names used on the command line: proj, affine, sim, euc, ccbs.
std::string_view family_name(Family f);
std::optional<Family> parse_family(std::string_view name);

struct ParamRange {
  double lo;
  double hi;
  bool contains(double v, double tol = 1e-12) const { return v >= lo - tol && v <= hi + tol; }
};

namespace sampling {
inline constexpr double kRotationDeg = 180.0;
inline constexpr double kTranslation = 0.2;
inline constexpr double kScaleLo = 0.8;
inline constexpr double kScaleHi = 1.2;
inline constexpr double kShearDeg = 30.0;
inline constexpr double kCornerOffset = 0.125;
inline constexpr double kMagnitudeLo = 0.2;
inline constexpr double kMagnitudeHi = 1.8;
}  // namespace sampling

/// Generating parameters per family (angles in degrees, lengths as
/// fractions of the normalized [-1, 1] extent):
///
///   Euclidean  [rotation, tx, ty]
///   Similarity [scale, rotation, tx, ty]
///   Affine     [scale_x, scale_y, shear, rotation, tx, ty]
///   Projective [dx0, dy0, dx1, dy1, dx2, dy2, dx3, dy3]  corner offsets for
///              corners (-1,-1), (1,-1), (1,1), (-1,1)
///   CCBS       [color, contrast, brightness, sharpness]
std::span<const ParamRange> param_ranges(Family f);
std::span<const ParamRange> param_ranges(SpatialKind k);

struct SpatialTransform {
  SpatialKind kind = SpatialKind::Euclidean;
  std::vector<double> params;
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Identity();

  Eigen::Vector2d apply(const Eigen::Vector2d& p) const;
};

struct PhotometricTransform {
  double color = 1.0;
  double contrast = 1.0;
  double brightness = 1.0;
  double sharpness = 1.0;

  std::array<double, 4> as_array() const { return {color, contrast, brightness, sharpness}; }
};

/// Decoder regression target: generating parameters rescaled to [-1, 1].
struct TransformTarget {
  std::vector<double> values;
};

/// Composes scale/aspect, shear, rotation, translation (applied in that
/// order); projective matrices come from the four-corner fit. Throws
/// std::out_of_range for parameters outside the sampling ranges.
Eigen::Matrix3d matrix_from_params(SpatialKind kind, std::span<const double> params);

/// Homography taking the corners (+-1, +-1) to their offset positions.
/// Empty when the displaced quadrilateral is degenerate.
std::optional<Eigen::Matrix3d> fit_projective(std::span<const double> corner_offsets);

/// Maps one uniform [0,1) draw per parameter onto the family's ranges.
SpatialTransform spatial_from_unit(SpatialKind kind, std::span<const double> unit);
SpatialTransform sample_spatial(SpatialKind kind, Rng& rng);

PhotometricTransform ccbs_from_unit(std::span<const double> unit);
PhotometricTransform sample_ccbs(Rng& rng);

/// Structural family membership of a homography.
bool satisfies(SpatialKind kind, const Eigen::Matrix3d& m, double tol = 1e-9);
/// Smallest family whose predicate holds.
SpatialKind classify(const Eigen::Matrix3d& m, double tol = 1e-9);

/// Recovers generating parameters of `kind` from a member matrix. The result
/// may lie outside the sampling ranges (e.g. after composition).
std::vector<double> params_from_matrix(SpatialKind kind, const Eigen::Matrix3d& m);

/// Matrix product a * b (b applied first), renormalized and reclassified.
SpatialTransform compose(const SpatialTransform& a, const SpatialTransform& b);
SpatialTransform invert(const SpatialTransform& t);
SpatialTransform identity_transform(SpatialKind kind = SpatialKind::Euclidean);

/// Inverse-mapping bilinear warp with zero padding. Throws std::domain_error
/// if the matrix is not invertible.
Image warp(const Image& image, const SpatialTransform& t);

Image adjust_color(const Image& image, double magnitude);
Image adjust_contrast(const Image& image, double magnitude);
Image adjust_brightness(const Image& image, double magnitude);
Image adjust_sharpness(const Image& image, double magnitude);
/// color -> contrast -> brightness -> sharpness.
Image apply_ccbs(const Image& image, const PhotometricTransform& t);

TransformTarget target_vector(const SpatialTransform& t);
TransformTarget target_vector(const PhotometricTransform& t);
/// Inverse of target_vector: generating parameters for `f`.
std::vector<double> params_from_target(Family f, const TransformTarget& target);

}  // namespace enaet

#endif  // ENAET_TRANSFORMS_HPP
