#include "rubble/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>

#include <nlohmann/json.hpp>

#include "rubble/scene_json.hpp"
#include "rubble/threads.hpp"

namespace rubble {

SunState sun_at(double time_of_day) {
  constexpr double deg = std::numbers::pi / 180.0;
  const double azimuth = 15.0 * (time_of_day - 6.0) * deg;
  const double elevation = 60.0 * std::sin(std::numbers::pi * (time_of_day - 6.0) / 12.0) * deg;
  // East is +x, south is -z, up is +y.
  const Vec3 dir{std::cos(elevation) * std::cos(azimuth), std::sin(elevation),
                 -std::cos(elevation) * std::sin(azimuth)};
  return {dir, std::max(0.0, std::sin(elevation))};
}

Vec3 material_albedo(MaterialKind kind) {
  switch (kind) {
    case MaterialKind::Brick: return {0.62, 0.28, 0.20};
    case MaterialKind::Wood: return {0.55, 0.40, 0.24};
    case MaterialKind::Concrete:
    default: return {0.60, 0.60, 0.58};
  }
}

std::optional<std::pair<double, Vec3>> intersect_convex(const Ray& ray,
                                                        const std::vector<HalfSpace>& planes) {
  double t_enter = -HUGE_VAL;
  double t_exit = HUGE_VAL;
  Vec3 normal;
  for (const HalfSpace& p : planes) {
    const double denom = dot(p.normal, ray.direction);
    const double dist = p.offset - dot(p.normal, ray.origin);  // >= 0 when origin is inside
    if (denom == 0.0) {
      if (dist < 0.0) return std::nullopt;
      continue;
    }
    const double t = dist / denom;
    if (denom < 0.0) {
      if (t > t_enter) {
        t_enter = t;
        normal = p.normal;
      }
    } else {
      t_exit = std::min(t_exit, t);
    }
    if (t_enter > t_exit) return std::nullopt;
  }
  if (t_exit < 0.0 || t_enter == -HUGE_VAL) return std::nullopt;
  return std::pair{t_enter, normal};
}

namespace {

bool ray_box(const Ray& ray, const Vec3& inv_dir, const Aabb& box, double t_min, double t_max,
             double& t_near) {
  double lo = t_min;
  double hi = t_max;
  for (int a = 0; a < 3; ++a) {
    double t0 = (box.min[a] - ray.origin[a]) * inv_dir[a];
    double t1 = (box.max[a] - ray.origin[a]) * inv_dir[a];
    if (std::isnan(t0) || std::isnan(t1)) continue;  // origin on the slab with zero direction
    if (t0 > t1) std::swap(t0, t1);
    lo = std::max(lo, t0);
    hi = std::min(hi, t1);
    if (lo > hi) return false;
  }
  t_near = lo;
  return true;
}

constexpr int kLeafSize = 4;

}  // namespace

RenderScene::RenderScene(std::vector<RenderPrimitive> primitives)
    : primitives_(std::move(primitives)) {
  if (!primitives_.empty()) build(0, static_cast<int>(primitives_.size()));
}

int RenderScene::build(int first, int count) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Aabb box;
  Aabb centers;
  for (int i = first; i < first + count; ++i) {
    box.expand(primitives_[static_cast<std::size_t>(i)].box);
    centers.expand(primitives_[static_cast<std::size_t>(i)].box.center());
  }
  nodes_[static_cast<std::size_t>(index)].box = box;
  if (count <= kLeafSize) {
    nodes_[static_cast<std::size_t>(index)].first = first;
    nodes_[static_cast<std::size_t>(index)].count = count;
    return index;
  }
  const Vec3 ext = centers.extent();
  const int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
  const auto begin = primitives_.begin() + first;
  const int half = count / 2;
  std::nth_element(begin, begin + half, begin + count,
                   [axis](const RenderPrimitive& a, const RenderPrimitive& b) {
                     const double ca = a.box.center()[axis];
                     const double cb = b.box.center()[axis];
                     return ca != cb ? ca < cb : a.instance < b.instance;
                   });
  const int left = build(first, half);
  const int right = build(first + half, count - half);
  nodes_[static_cast<std::size_t>(index)].left = left;
  nodes_[static_cast<std::size_t>(index)].right = right;
  return index;
}

std::optional<RayHit> RenderScene::intersect(const Ray& ray, double t_min, double t_max) const {
  if (nodes_.empty()) return std::nullopt;
  const Vec3 inv{1.0 / ray.direction.x, 1.0 / ray.direction.y, 1.0 / ray.direction.z};
  std::optional<RayHit> best;
  double best_t = t_max;
  int stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[static_cast<std::size_t>(stack[--top])];
    double t_near = 0.0;
    if (!ray_box(ray, inv, node.box, t_min, best_t, t_near)) continue;
    if (node.left < 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const auto& prim = primitives_[static_cast<std::size_t>(i)];
        const auto hit = intersect_convex(ray, prim.planes);
        if (!hit || hit->first < t_min || hit->first > best_t) continue;
        // Ties go to the lower instance id so the result is independent of tree layout.
        if (best && hit->first == best_t && prim.instance > primitives_[best->primitive].instance)
          continue;
        best_t = hit->first;
        best = RayHit{hit->first, static_cast<std::size_t>(i), hit->second};
      }
      continue;
    }
    stack[top++] = node.left;
    stack[top++] = node.right;
  }
  return best;
}

bool RenderScene::occluded(const Ray& ray, double t_max) const {
  if (nodes_.empty()) return false;
  const Vec3 inv{1.0 / ray.direction.x, 1.0 / ray.direction.y, 1.0 / ray.direction.z};
  int stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[static_cast<std::size_t>(stack[--top])];
    double t_near = 0.0;
    if (!ray_box(ray, inv, node.box, 0.0, t_max, t_near)) continue;
    if (node.left < 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const auto hit = intersect_convex(ray, primitives_[static_cast<std::size_t>(i)].planes);
        if (hit && hit->first >= 0.0 && hit->first <= t_max) return true;
      }
      continue;
    }
    stack[top++] = node.left;
    stack[top++] = node.right;
  }
  return false;
}

RenderScene RenderScene::from_world(const WorldState& world) {
  std::vector<RenderPrimitive> prims;
  std::uint32_t instance = 0;
  for (std::size_t c = 0; c < world.collections.size(); ++c) {
    const GeometryCollection& gc = world.collections[c];
    for (std::size_t f = 0; f < gc.fragments.size(); ++f) {
      ++instance;
      const Fragment& frag = gc.fragments[f];
      RenderPrimitive prim;
      if (frag.released) {
        const RigidBody* body = world.find_body({static_cast<int>(c), static_cast<int>(f)});
        const ConvexPolyhedron shape = body ? world_shape(*body) : frag.polyhedron;
        prim.planes = face_planes(shape);
        prim.box = bounds(shape);
      } else {
        prim.planes = face_planes(frag.polyhedron);
        prim.box = bounds(frag.polyhedron);
      }
      prim.label = semantic_label(gc.archetype, frag.material, frag.released);
      prim.instance = instance;
      prim.albedo = material_albedo(frag.material);
      prims.push_back(std::move(prim));
    }
  }
  return RenderScene(std::move(prims));
}

Ray primary_ray(const Camera& camera, int px, int py) {
  const auto& in = camera.intrinsics;
  const double tan_half = std::tan(in.horizontal_fov * 0.5);
  const double aspect = static_cast<double>(in.height) / in.width;
  const double x = (2.0 * (px + 0.5) / in.width - 1.0) * tan_half;
  const double y = (1.0 - 2.0 * (py + 0.5) / in.height) * tan_half * aspect;
  const Vec3 local = normalized(Vec3{x, y, -1.0});
  return {camera.pose.translation, camera.pose.rotation.rotate(local)};
}

namespace {

struct Lighting {
  SunState sun;
  double daylight = 0.0;  // 0 at night, 1 at noon
  Vec3 sky;
  Vec3 horizon;
  double fog_density = 0.0;
  double rain_factor = 1.0;
};

constexpr double kAmbient = 0.25;

Lighting lighting_for(const EnvironmentConfig& env) {
  Lighting l;
  l.sun = sun_at(env.time_of_day);
  l.daylight = std::clamp(l.sun.intensity / std::sin(std::numbers::pi / 3.0), 0.0, 1.0);
  const Vec3 night_sky{0.02, 0.03, 0.08};
  const Vec3 day_sky{0.55, 0.70, 0.90};
  l.sky = night_sky + (day_sky - night_sky) * l.daylight;
  l.horizon = Vec3{0.70, 0.72, 0.75} * (0.3 + 0.7 * l.daylight);
  if (const auto* fog = std::get_if<Fog>(&env.weather)) l.fog_density = fog->density;
  if (const auto* rain = std::get_if<Rain>(&env.weather)) l.rain_factor = 1.0 - 0.4 * rain->intensity;
  return l;
}

std::uint8_t to_byte(double c) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
}

}  // namespace

SensorFrame render(const RenderScene& scene, const Camera& camera, const EnvironmentConfig& env,
                   std::int64_t step_index) {
  const auto& in = camera.intrinsics;
  SensorFrame frame;
  frame.width = in.width;
  frame.height = in.height;
  frame.camera = camera;
  frame.step_index = step_index;
  const std::size_t n = static_cast<std::size_t>(in.width) * static_cast<std::size_t>(in.height);
  frame.color.assign(n * 3, 0);
  frame.depth.assign(n, kDepthMiss);
  frame.segmentation.assign(n, 0);
  frame.instance.assign(n, 0);
  const Lighting light = lighting_for(env);
  const Vec3 forward = camera.pose.rotation.rotate({0.0, 0.0, -1.0});

  parallel_for(static_cast<std::size_t>(in.height), [&](std::size_t row) {
    const int py = static_cast<int>(row);
    for (int px = 0; px < in.width; ++px) {
      const std::size_t idx = row * static_cast<std::size_t>(in.width) + static_cast<std::size_t>(px);
      const Ray ray = primary_ray(camera, px, py);
      const double cos_axis = dot(ray.direction, forward);
      const auto hit = scene.intersect(ray, in.near / cos_axis, in.far / cos_axis);
      Vec3 color;
      if (hit) {
        const double depth = hit->t * cos_axis;
        const RenderPrimitive& prim = scene.primitives()[hit->primitive];
        frame.depth[idx] = static_cast<float>(depth);
        frame.segmentation[idx] = prim.label;
        frame.instance[idx] = prim.instance;
        double shade = kAmbient;
        const double lambert = dot(hit->normal, light.sun.direction);
        if (light.sun.intensity > 0.0 && lambert > 0.0) {
          const Vec3 p = ray.origin + ray.direction * hit->t + hit->normal * 1e-4;
          if (!scene.occluded({p, light.sun.direction}, 1e4)) shade += light.sun.intensity * lambert;
        }
        color = prim.albedo * shade;
        const double fog = std::exp(-light.fog_density * depth);
        color = color * fog + light.horizon * (1.0 - fog);
      } else {
        color = light.fog_density > 0.0 ? light.horizon : light.sky;
      }
      color *= light.rain_factor;
      frame.color[idx * 3 + 0] = to_byte(color.x);
      frame.color[idx * 3 + 1] = to_byte(color.y);
      frame.color[idx * 3 + 2] = to_byte(color.z);
    }
  });
  return frame;
}

SensorFrame render(const WorldState& world, const Camera& camera, const EnvironmentConfig& env) {
  return render(RenderScene::from_world(world), camera, env, world.step_index);
}

// ---------------------------------------------------------------------------------------------
// Export

std::uint16_t quantize_depth(float depth, double near, double far) {
  if (!std::isfinite(depth)) return kDepthMissCode;
  const double q = std::round((depth - near) / (far - near) * 65534.0);
  return static_cast<std::uint16_t>(std::clamp(q, 0.0, 65534.0));
}

float dequantize_depth(std::uint16_t code, double near, double far) {
  if (code == kDepthMissCode) return kDepthMiss;
  return static_cast<float>(near + (far - near) * (code / 65534.0));
}

namespace {

std::string indexed(const char* stem, int index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%06d.%s", stem, index, ext);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& header,
                const std::vector<std::uint8_t>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExportError("cannot open " + path.string() + " for writing");
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (!out) throw ExportError("write failed: " + path.string());
}

std::vector<std::uint8_t> big_endian(const std::vector<std::uint16_t>& values) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(values.size() * 2);
  for (std::uint16_t v : values) {
    bytes.push_back(static_cast<std::uint8_t>(v >> 8));
    bytes.push_back(static_cast<std::uint8_t>(v & 0xFF));
  }
  return bytes;
}

std::string pnm_header(const char* magic, int w, int h, int maxval) {
  return std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n" +
         std::to_string(maxval) + "\n";
}

// Reads a binary PNM header; returns width, height, maxval and leaves the stream at the raster.
std::tuple<int, int, int> read_pnm_header(std::istream& in, const std::string& magic,
                                          const std::filesystem::path& path) {
  std::string got;
  in >> got;
  if (got != magic) throw ExportError(path.string() + ": expected " + magic + " image");
  int vals[3];
  for (int& v : vals) {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
      in >> std::ws;
    }
    if (!(in >> v)) throw ExportError(path.string() + ": malformed header");
  }
  in.get();  // single whitespace before the raster
  return {vals[0], vals[1], vals[2]};
}

}  // namespace

FrameFiles export_frame(const SensorFrame& frame, const std::filesystem::path& directory, int index) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw ExportError("cannot create " + directory.string() + ": " + ec.message());
  FrameFiles files{directory / indexed("color", index, "ppm"), directory / indexed("depth", index, "pgm"),
                   directory / indexed("seg", index, "pgm"), directory / indexed("meta", index, "json")};
  const auto& in = frame.camera.intrinsics;

  write_file(files.color, pnm_header("P6", frame.width, frame.height, 255), frame.color);
  std::vector<std::uint16_t> depth(frame.depth.size());
  for (std::size_t i = 0; i < depth.size(); ++i) depth[i] = quantize_depth(frame.depth[i], in.near, in.far);
  write_file(files.depth, pnm_header("P5", frame.width, frame.height, 65535), big_endian(depth));
  write_file(files.segmentation, pnm_header("P5", frame.width, frame.height, 65535),
             big_endian(frame.segmentation));

  const nlohmann::json meta = {
      {"index", index},
      {"step", frame.step_index},
      {"camera", camera_json(frame.camera)},
      {"depth_quantization",
       {{"near", in.near}, {"far", in.far}, {"levels", 65534}, {"miss_code", kDepthMissCode},
        {"units", "meters along the optical axis"}}},
      {"files",
       {{"color", files.color.filename().string()},
        {"depth", files.depth.filename().string()},
        {"segmentation", files.segmentation.filename().string()}}}};
  const std::string text = meta.dump(2) + "\n";
  write_file(files.metadata, "", std::vector<std::uint8_t>(text.begin(), text.end()));
  return files;
}

Image8 read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ExportError("cannot open " + path.string());
  const auto [w, h, maxval] = read_pnm_header(in, "P6", path);
  if (maxval != 255) throw ExportError(path.string() + ": unsupported maxval");
  Image8 img{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3)};
  in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (!in) throw ExportError(path.string() + ": truncated raster");
  return img;
}

Image16 read_pgm16(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ExportError("cannot open " + path.string());
  const auto [w, h, maxval] = read_pnm_header(in, "P5", path);
  if (maxval != 65535) throw ExportError(path.string() + ": expected a 16-bit image");
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::vector<std::uint8_t> bytes(n * 2);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw ExportError(path.string() + ": truncated raster");
  Image16 img{w, h, std::vector<std::uint16_t>(n)};
  for (std::size_t i = 0; i < n; ++i)
    img.pixels[i] = static_cast<std::uint16_t>((bytes[2 * i] << 8) | bytes[2 * i + 1]);
  return img;
}

SensorFrame read_frame(const std::filesystem::path& directory, int index) {
  std::ifstream meta_in(directory / indexed("meta", index, "json"));
  if (!meta_in) throw ExportError("cannot open metadata for frame " + std::to_string(index));
  const auto meta = nlohmann::json::parse(meta_in);
  SensorFrame frame;
  frame.camera = parse_camera(meta.at("camera"), "camera");
  frame.step_index = meta.at("step").get<std::int64_t>();
  const auto color = read_ppm(directory / indexed("color", index, "ppm"));
  const auto depth = read_pgm16(directory / indexed("depth", index, "pgm"));
  const auto seg = read_pgm16(directory / indexed("seg", index, "pgm"));
  frame.width = color.width;
  frame.height = color.height;
  frame.color = color.rgb;
  frame.segmentation = seg.pixels;
  const auto& in = frame.camera.intrinsics;
  frame.depth.reserve(depth.pixels.size());
  for (std::uint16_t code : depth.pixels) frame.depth.push_back(dequantize_depth(code, in.near, in.far));
  return frame;
}

}  // namespace rubble
