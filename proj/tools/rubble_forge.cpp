#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "rubble/bridge.hpp"
#include "rubble/scene.hpp"
#include "rubble/scene_json.hpp"
#include "rubble/semantics.hpp"
#include "rubble/sensors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rubble;

namespace {

enum Exit : int {
  kOk = 0,
  kSyntax = 1,
  kSemantic = 2,
  kBind = 3,
  kRuntime = 4,
};

struct Options {
  std::string scene_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::uint16_t port = 9090;
  std::string host = "127.0.0.1";
  bool json_output = false;
  bool from_stdin = false;
  int frames = 1;
  int verbosity = 0;
};

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

int exit_code_for(const SceneError& e) {
  switch (e.kind()) {
    case SceneErrorKind::Syntax:
      return kSyntax;
    case SceneErrorKind::Fracture:
      return kRuntime;
    default:
      return kSemantic;
  }
}

json error_json(const SceneError& e) {
  json j = {{"ok", false}, {"kind", to_string(e.kind())}, {"message", e.what()}};
  if (e.line() > 0) {
    j["line"] = e.line();
    j["column"] = e.column();
  }
  return j;
}

int report_scene_error(const Options& opt, const SceneError& e) {
  if (opt.json_output) {
    std::cout << error_json(e).dump() << '\n';
  } else {
    std::cerr << "error [" << to_string(e.kind()) << "]";
    if (e.line() > 0) std::cerr << " at line " << e.line() << ", column " << e.column();
    std::cerr << ": " << e.what() << '\n';
  }
  return exit_code_for(e);
}

std::string read_document(const Options& opt) {
  if (opt.from_stdin) return {std::istreambuf_iterator<char>(std::cin), {}};
  std::ifstream in(opt.scene_path, std::ios::binary);
  if (!in) throw SceneError(SceneErrorKind::Syntax, "cannot read scene file '" + opt.scene_path + "'");
  return {std::istreambuf_iterator<char>(in), {}};
}

Scene load_scene(const Options& opt) {
  Scene scene = parse_scene(read_document(opt));
  if (opt.seed) scene.seed = *opt.seed;
  return scene;
}

std::size_t released_total(const WorldState& world) {
  std::size_t n = 0;
  for (const auto& gc : world.collections) n += gc.released_count();
  return n;
}

int cmd_validate(const Options& opt) {
  const Scene scene = load_scene(opt);
  if (opt.json_output) {
    std::cout << json{{"ok", true},
                      {"name", scene.name},
                      {"rooms", scene.rooms.size()},
                      {"events", scene.events.size()},
                      {"cameras", scene.cameras.size()},
                      {"scene_hash", scene_hash(scene)}}
                     .dump()
              << '\n';
  } else {
    std::cout << "ok: scene '" << scene.name << "' with " << scene.rooms.size() << " rooms, "
              << scene.events.size() << " events, " << scene.cameras.size() << " cameras\n";
  }
  return kOk;
}

json class_table_json() {
  json classes = json::array();
  for (const auto& c : semantic_class_table())
    classes.push_back({{"label", c.label},
                       {"name", c.name},
                       {"archetype", to_string(c.archetype)},
                       {"material", to_string(c.material)},
                       {"released", c.released}});
  return classes;
}

int cmd_generate(const Options& opt) {
  if (opt.frames < 1) throw CLI::ValidationError("--frames", "must be at least 1");
  const Scene scene = load_scene(opt);
  WorldState world = instantiate(scene);

  json reports = json::array();
  for (std::size_t i = 0; i < scene.events.size(); ++i) {
    const EventReport report = apply_event(world, scene.events[i]);
    json r = report_json(report);
    r["event"] = event_json(scene.events[i]);
    if (!opt.json_output) {
      std::cout << "event " << i << ": released " << report.released.size() << " fragments, broke "
                << report.broken_joints << " joints, " << (report.settled ? "settled" : "not settled")
                << '\n';
      for (const auto& w : report.warnings) std::cout << "  warning: " << w << '\n';
    }
    reports.push_back(std::move(r));
  }
  const SettleResult settled = settle(world);

  const fs::path dir = fs::path(opt.out_dir) / scene.name;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ExportError("cannot create '" + dir.string() + "': " + ec.message());

  json frames = json::array();
  int index = 0;
  for (int k = 0; k < opt.frames; ++k) {
    if (k > 0)
      for (int s = 0; s < world.config.event_substeps; ++s) step(world);
    const RenderScene snapshot = RenderScene::from_world(world);
    for (std::size_t c = 0; c < scene.cameras.size(); ++c) {
      const SensorFrame frame = render(snapshot, scene.cameras[c], scene.environment, world.step_index);
      const FrameFiles files = export_frame(frame, dir, index);
      frames.push_back({{"index", index},
                        {"camera", c},
                        {"step", world.step_index},
                        {"color", files.color.filename().string()},
                        {"depth", files.depth.filename().string()},
                        {"segmentation", files.segmentation.filename().string()},
                        {"metadata", files.metadata.filename().string()}});
      ++index;
    }
  }

  json manifest = {{"scene", scene.name},
                   {"scene_hash", scene_hash(scene)},
                   {"seed", scene.seed},
                   {"released_count", released_total(world)},
                   {"settled", settled.settled},
                   {"settle_steps", settled.steps},
                   {"step_index", world.step_index},
                   {"events", reports},
                   {"classes", class_table_json()},
                   {"frames", frames}};
  const fs::path manifest_path = dir / "manifest.json";
  {
    std::ofstream out(manifest_path, std::ios::binary);
    out << manifest.dump(2) << '\n';
    if (!out) throw ExportError("cannot write '" + manifest_path.string() + "'");
  }

  if (opt.json_output) {
    std::cout << json{{"ok", true},
                      {"manifest", manifest_path.string()},
                      {"frames", frames.size()},
                      {"released_count", released_total(world)},
                      {"events", reports}}
                     .dump()
              << '\n';
  } else {
    std::cout << "wrote " << frames.size() << " frames and " << manifest_path.string() << " ("
              << released_total(world) << " fragments released)\n";
  }
  return kOk;
}

int cmd_serve(const Options& opt) {
  const Scene scene = load_scene(opt);
  std::optional<BridgeServer> server;
  try {
    server.emplace(Bridge(scene), opt.host, opt.port);
  } catch (const BindError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBind;
  }
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "serving scene '" << scene.name << "' on " << opt.host << ':' << server->port() << '\n'
            << std::flush;
  server->run(&g_interrupted);
  std::cout << "shutting down\n" << std::flush;
  return kOk;
}

int cmd_fracture_stats(const Options& opt) {
  const Scene scene = load_scene(opt);
  const WorldState world = instantiate(scene);
  json rooms = json::array();
  for (std::size_t r = 0; r < world.collections.size(); ++r) {
    const auto& gc = world.collections[r];
    double source = 0.0;
    for (const auto& solid : archetype_solids(gc.archetype)) source += volume(solid);
    double total = 0.0;
    double smallest = std::numeric_limits<double>::infinity();
    double largest = 0.0;
    std::size_t anchored = 0;
    for (const auto& f : gc.fragments) {
      total += f.volume;
      smallest = std::min(smallest, f.volume);
      largest = std::max(largest, f.volume);
      anchored += f.anchored ? 1 : 0;
    }
    if (gc.fragments.empty()) smallest = 0.0;
    rooms.push_back({{"room", r},
                     {"archetype", to_string(gc.archetype)},
                     {"material", to_string(gc.material.kind)},
                     {"fragments", gc.fragments.size()},
                     {"anchored", anchored},
                     {"joints", gc.joints.size()},
                     {"source_volume", source},
                     {"fragment_volume", total},
                     {"volume_error", source > 0 ? std::abs(total - source) / source : 0.0},
                     {"min_fragment_volume", smallest},
                     {"max_fragment_volume", largest}});
  }
  if (opt.json_output) {
    std::cout << json{{"ok", true}, {"rooms", rooms}}.dump() << '\n';
    return kOk;
  }
  std::size_t fragments = 0;
  std::size_t joints = 0;
  for (const auto& r : rooms) {
    std::ostringstream line;
    line << "room " << r["room"].get<std::size_t>() << " (" << r["archetype"].get<std::string>() << ", "
         << r["material"].get<std::string>() << "): " << r["fragments"].get<std::size_t>()
         << " fragments (" << r["anchored"].get<std::size_t>() << " anchored), "
         << r["joints"].get<std::size_t>() << " joints, volume " << r["fragment_volume"].get<double>()
         << " / " << r["source_volume"].get<double>() << " m^3";
    std::cout << line.str() << '\n';
    fragments += r["fragments"].get<std::size_t>();
    joints += r["joints"].get<std::size_t>();
  }
  std::cout << "total: " << fragments << " fragments, " << joints << " joints\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rubble_forge: destructible-building scenes, rubble physics and sensor datasets"};
  app.require_subcommand(1);
  Options opt;
  app.add_flag("-v,--verbose", opt.verbosity, "More logging (repeatable)");
  app.add_flag("--json", opt.json_output, "Machine-readable output on stdout");
  app.add_option("--seed", opt.seed, "Override the scene seed");

  auto add_scene = [&](CLI::App* sub, bool required) {
    auto* o = sub->add_option("--scene,scene", opt.scene_path, "Scene file")->check(CLI::ExistingFile);
    if (required) o->required();
    return o;
  };

  auto* validate = app.add_subcommand("validate", "Parse and validate a scene");
  auto* scene_opt = add_scene(validate, false);
  auto* stdin_flag = validate->add_flag("--stdin", opt.from_stdin, "Read the scene from standard input");
  scene_opt->excludes(stdin_flag);

  auto* generate = app.add_subcommand("generate", "Destroy, settle, render and export a dataset");
  add_scene(generate, true);
  generate->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
  generate->add_option("--frames", opt.frames, "Frames per camera")->capture_default_str()->check(CLI::PositiveNumber);

  auto* serve = app.add_subcommand("serve", "Run the TCP bridge");
  add_scene(serve, true);
  serve->add_option("--port", opt.port, "TCP port (0 picks a free one)")->capture_default_str();
  serve->add_option("--host", opt.host, "Listen address")->capture_default_str();

  auto* stats = app.add_subcommand("fracture-stats", "Fragment, joint and volume statistics per room");
  add_scene(stats, true);

  for (auto* sub : {validate, generate, serve, stats}) {
    sub->add_flag("--json", opt.json_output, "Machine-readable output on stdout");
    sub->add_option("--seed", opt.seed, "Override the scene seed");
    sub->add_flag("-v,--verbose", opt.verbosity, "More logging (repeatable)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kSemantic;
  }
  spdlog::set_default_logger(spdlog::stderr_color_mt("rubble_forge"));
  spdlog::set_level(opt.verbosity >= 2 ? spdlog::level::debug
                    : opt.verbosity == 1 ? spdlog::level::info
                                         : spdlog::level::warn);

  if (validate->parsed() && opt.scene_path.empty() && !opt.from_stdin) {
    std::cerr << "error: validate needs --scene PATH or --stdin\n";
    return kSemantic;
  }

  try {
    if (validate->parsed()) return cmd_validate(opt);
    if (generate->parsed()) return cmd_generate(opt);
    if (serve->parsed()) return cmd_serve(opt);
    return cmd_fracture_stats(opt);
  } catch (const SceneError& e) {
    return report_scene_error(opt, e);
  } catch (const std::exception& e) {
    if (opt.json_output)
      std::cout << json{{"ok", false}, {"kind", "runtime"}, {"message", e.what()}}.dump() << '\n';
    else
      std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}
