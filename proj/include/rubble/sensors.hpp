#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rubble/camera.hpp"
#include "rubble/geometry.hpp"
#include "rubble/physics.hpp"
#include "rubble/scene.hpp"

namespace rubble {

/// In-memory depth value for pixels whose ray hits nothing within [near, far].
inline constexpr float kDepthMiss = std::numeric_limits<float>::infinity();
/// Quantized depth value for misses in exported depth images.
inline constexpr std::uint16_t kDepthMissCode = 65535;

struct SensorFrame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> color;          // RGB, row-major, top row first
  std::vector<float> depth;                 // meters along the optical axis, or kDepthMiss
  std::vector<std::uint16_t> segmentation;  // semantic labels, 0 = background
  std::vector<std::uint32_t> instance;      // 1 + global fragment index, 0 = background
  Camera camera;
  std::int64_t step_index = 0;
};

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length
};

struct SunState {
  Vec3 direction;  // unit vector pointing toward the sun
  double intensity = 0.0;
};

/// Sun azimuth advances 15 degrees per hour from east at 06:00; elevation follows a sinusoid
/// peaking at 60 degrees at 12:00. Intensity is sin(elevation) clamped at 0.
SunState sun_at(double time_of_day);

/// One convex fragment prepared for ray casting.
struct RenderPrimitive {
  std::vector<HalfSpace> planes;
  Aabb box;
  std::uint16_t label = 0;
  std::uint32_t instance = 0;
  Vec3 albedo;
};

struct RayHit {
  double t = 0.0;
  std::size_t primitive = 0;
  Vec3 normal;
};

/// Immutable snapshot of a world's geometry with a bounding volume hierarchy over fragment AABBs.
class RenderScene {
 public:
  explicit RenderScene(std::vector<RenderPrimitive> primitives);

  /// Snapshot of every fragment: intact ones at their build pose, released ones at their body pose.
  static RenderScene from_world(const WorldState& world);

  /// Nearest primitive entered at t in [t_min, t_max].
  std::optional<RayHit> intersect(const Ray& ray, double t_min, double t_max) const;
  bool occluded(const Ray& ray, double t_max) const;

  const std::vector<RenderPrimitive>& primitives() const { return primitives_; }

 private:
  struct Node {
    Aabb box;
    int left = -1;
    int right = -1;
    int first = 0;
    int count = 0;
  };
  int build(int first, int count);

  std::vector<RenderPrimitive> primitives_;
  std::vector<Node> nodes_;
};

/// Entry distance of a ray into a convex solid given by its outward face planes; nullopt when
/// the ray misses or the solid lies behind the origin.
std::optional<std::pair<double, Vec3>> intersect_convex(const Ray& ray,
                                                        const std::vector<HalfSpace>& planes);

/// Primary ray through the center of pixel (px, py).
Ray primary_ray(const Camera& camera, int px, int py);

Vec3 material_albedo(MaterialKind kind);

SensorFrame render(const RenderScene& scene, const Camera& camera, const EnvironmentConfig& env,
                   std::int64_t step_index = 0);
SensorFrame render(const WorldState& world, const Camera& camera, const EnvironmentConfig& env);

class ExportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::uint16_t quantize_depth(float depth, double near, double far);
float dequantize_depth(std::uint16_t code, double near, double far);

struct FrameFiles {
  std::filesystem::path color;
  std::filesystem::path depth;
  std::filesystem::path segmentation;
  std::filesystem::path metadata;
};

/// Writes color_%06d.ppm (P6), depth_%06d.pgm and seg_%06d.pgm (16-bit P5) and meta_%06d.json.
FrameFiles export_frame(const SensorFrame& frame, const std::filesystem::path& directory, int index);

struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};
struct Image16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> pixels;
};

Image8 read_ppm(const std::filesystem::path& path);
Image16 read_pgm16(const std::filesystem::path& path);

/// Reads an exported frame back. Depth is dequantized, so it matches the original within
/// (far - near) / 65534 / 2.
SensorFrame read_frame(const std::filesystem::path& directory, int index);

}  // namespace rubble
