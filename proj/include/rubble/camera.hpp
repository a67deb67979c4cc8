#pragma once

#include <numbers>

#include "rubble/geometry.hpp"

namespace rubble {

struct CameraIntrinsics {
  int width = 320;
  int height = 240;
  double horizontal_fov = std::numbers::pi / 2.0;  // radians
  double near = 0.05;                               // m
  double far = 100.0;                               // m

  bool valid() const {
    return width >= 1 && height >= 1 && horizontal_fov > 0.0 &&
           horizontal_fov < std::numbers::pi && near > 0.0 && near < far;
  }
  bool operator==(const CameraIntrinsics&) const = default;
};

/// The camera looks down its local -z axis with +y up and +x to the right.
struct Camera {
  Transform pose;
  CameraIntrinsics intrinsics;
  bool operator==(const Camera&) const = default;
};

/// Rotation that points the camera's -z axis along (target - eye), keeping +y as close to `up`
/// as possible.
Quat look_rotation(const Vec3& eye, const Vec3& target, const Vec3& up = {0.0, 1.0, 0.0});

}  // namespace rubble
