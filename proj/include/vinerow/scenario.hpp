#pragma once

// Scenario files (JSON): world, camera, preprocessing, controller, noise,
// start pose and the list of seeded episodes of one experiment.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vinerow/episode.hpp"
#include "vinerow/error.hpp"
#include "vinerow/world.hpp"

namespace vinerow {

/// Start pose relative to the corridor: arc length, lateral offset (left
/// positive) and heading offset from the row direction.
struct CorridorStart {
  double s = 0.0;
  double lateral = 0.0;
  double heading = 0.0;
};

struct EpisodeSpec {
  std::string name;
  std::uint64_t seed = 0;
  std::optional<sim::RowProfileKind> profile;
  std::optional<double> curvature;
  std::optional<CorridorStart> start;
};

struct ScenarioSpec {
  std::string name = "scenario";
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  sim::WorldParams world;
  sim::CameraModel camera;
  raster::RasterConfig raster;
  spc::SpcConfig spc;
  sim::KinematicParams kinematics;
  std::size_t max_steps = 600;
  double flip_probability = 0.0;
  CorridorStart start;
  /// Empty means a single episode using `seed`.
  std::vector<EpisodeSpec> episodes;

  std::vector<EpisodeSpec> resolved_episodes() const {
    if (!episodes.empty()) return episodes;
    EpisodeSpec e;
    e.name = name;
    e.seed = seed;
    return {e};
  }

  sim::WorldParams world_for(const EpisodeSpec& e) const {
    sim::WorldParams p = world;
    if (e.profile) p.profile = *e.profile;
    if (e.curvature) p.curvature = *e.curvature;
    return p;
  }

  sim::EpisodeConfig episode_config(const EpisodeSpec& e, const sim::World& w) const {
    sim::EpisodeConfig c;
    c.raster = raster;
    c.spc = spc;
    c.camera = camera;
    c.kinematics = kinematics;
    c.max_steps = max_steps;
    c.flip_probability = flip_probability;
    c.noise_seed = mix_seed(e.seed, 0x4015E);
    const CorridorStart st = e.start.value_or(start);
    c.start_pose = w.corridor_pose(st.s, st.lateral, st.heading);
    return c;
  }

  void validate() const {
    world.validate();
    camera.validate();
    raster.validate();
    spc.validate();
    kinematics.validate();
    if (!(flip_probability >= 0.0 && flip_probability <= 0.05)) {
      throw ConfigError("noise.flip_probability must lie in [0, 0.05]");
    }
    for (const auto& e : resolved_episodes()) world_for(e).validate();
  }
};

namespace scenario_detail {

using nlohmann::json;

/// Throws ConfigError tagged with the dotted key path, e.g. "raster.l_depth".
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.push_back(key);
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, std::optional<std::size_t>>) {
        out = v.is_null() ? std::nullopt : std::optional<std::size_t>(checked_size(v));
      } else if constexpr (std::is_same_v<T, std::size_t>) {
        out = checked_size(v);
      } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) throw std::invalid_argument("");
        out = v.get<std::uint64_t>();
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw std::invalid_argument("");
        out = v.get<double>();
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("");
        out = v.get<std::string>();
      } else {
        out = v.get<T>();
      }
    } catch (const std::exception&) {
      fail(child(key), "wrong value type");
    }
  }

  const json* sub(const char* key) {
    seen_.push_back(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (std::find(seen_.begin(), seen_.end(), k) == seen_.end()) fail(child(k), "unknown key");
    }
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& why) {
    throw ConfigError(path + ": " + why);
  }

 private:
  std::size_t checked_size(const json& v) const {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) throw std::invalid_argument("");
    return v.get<std::size_t>();
  }

  const json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

inline CorridorStart read_start(const json& j, const std::string& path) {
  Reader r(j, path);
  CorridorStart s;
  r.get("s", s.s);
  r.get("lateral", s.lateral);
  r.get("heading", s.heading);
  r.finish();
  return s;
}

inline json start_json(const CorridorStart& s) {
  return {{"s", s.s}, {"lateral", s.lateral}, {"heading", s.heading}};
}

}  // namespace scenario_detail

inline ScenarioSpec scenario_from_json(const nlohmann::json& j) {
  using scenario_detail::Reader;
  ScenarioSpec spec;
  Reader root(j, "");
  root.get("name", spec.name);
  root.get("seed", spec.seed);
  root.get("output_dir", spec.output_dir);
  root.get("max_steps", spec.max_steps);

  if (const auto* w = root.sub("world")) {
    Reader r(*w, "world");
    std::string profile = sim::to_string(spec.world.profile);
    r.get("profile", profile);
    try {
      spec.world.profile = sim::parse_profile(profile);
    } catch (const ConfigError& e) {
      Reader::fail("world.profile", e.what());
    }
    r.get("inter_row", spec.world.inter_row);
    r.get("plant_spacing", spec.world.plant_spacing);
    r.get("curvature", spec.world.curvature);
    r.get("row_length", spec.world.row_length);
    r.get("num_rows", spec.world.num_rows);
    r.get("canopy_halfwidth", spec.world.canopy_halfwidth);
    r.get("canopy_height", spec.world.canopy_height);
    r.get("jitter", spec.world.jitter);
    r.finish();
  }
  if (const auto* c = root.sub("camera")) {
    Reader r(*c, "camera");
    r.get("hfov", spec.camera.hfov);
    r.get("vfov", spec.camera.vfov);
    r.get("width", spec.camera.width);
    r.get("height", spec.camera.height);
    r.get("mount_height", spec.camera.mount_height);
    r.get("tilt", spec.camera.tilt);
    r.get("max_range", spec.camera.max_range);
    r.finish();
  }
  if (const auto* c = root.sub("raster")) {
    Reader r(*c, "raster");
    r.get("s_window", spec.raster.s_window);
    r.get("l_depth", spec.raster.l_depth);
    r.get("fusion_threshold", spec.raster.fusion_threshold);
    r.finish();
  }
  if (const auto* c = root.sub("spc")) {
    Reader r(*c, "spc");
    r.get("v_max", spec.spc.v_max);
    r.get("w_max", spec.spc.w_max);
    r.get("alpha_ema", spec.spc.alpha_ema);
    r.get("th_noise_frac", spec.spc.th_noise_frac);
    r.get("min_cluster_len", spec.spc.min_cluster_len);
    r.get("pcc_near_tol", spec.spc.pcc_near_tol);
    r.get("fault_timeout", spec.spc.fault_timeout);
    r.finish();
  }
  if (const auto* c = root.sub("kinematics")) {
    Reader r(*c, "kinematics");
    r.get("dt", spec.kinematics.dt);
    r.finish();
  }
  if (const auto* c = root.sub("noise")) {
    Reader r(*c, "noise");
    r.get("flip_probability", spec.flip_probability);
    r.finish();
  }
  if (const auto* c = root.sub("start")) spec.start = scenario_detail::read_start(*c, "start");
  if (const auto* c = root.sub("episodes")) {
    if (!c->is_array()) Reader::fail("episodes", "expected an array");
    for (std::size_t k = 0; k < c->size(); ++k) {
      const std::string path = "episodes[" + std::to_string(k) + "]";
      Reader r((*c)[k], path);
      EpisodeSpec e;
      e.name = spec.name + "_" + std::to_string(k);
      e.seed = spec.seed + k;
      r.get("name", e.name);
      r.get("seed", e.seed);
      if (const auto* p = r.sub("profile")) {
        if (!p->is_string()) Reader::fail(path + ".profile", "wrong value type");
        try {
          e.profile = sim::parse_profile(p->get<std::string>());
        } catch (const ConfigError& err) {
          Reader::fail(path + ".profile", err.what());
        }
      }
      if (const auto* cv = r.sub("curvature")) {
        if (!cv->is_number()) Reader::fail(path + ".curvature", "wrong value type");
        e.curvature = cv->get<double>();
      }
      if (const auto* st = r.sub("start")) e.start = scenario_detail::read_start(*st, path + ".start");
      r.finish();
      spec.episodes.push_back(std::move(e));
    }
  }
  root.finish();
  return spec;
}

inline nlohmann::json scenario_to_json(const ScenarioSpec& s) {
  using nlohmann::json;
  json episodes = json::array();
  for (const auto& e : s.episodes) {
    json je{{"name", e.name}, {"seed", e.seed}};
    if (e.profile) je["profile"] = sim::to_string(*e.profile);
    if (e.curvature) je["curvature"] = *e.curvature;
    if (e.start) je["start"] = scenario_detail::start_json(*e.start);
    episodes.push_back(std::move(je));
  }
  auto opt = [](const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); };
  return {
      {"name", s.name},
      {"seed", s.seed},
      {"output_dir", s.output_dir},
      {"max_steps", s.max_steps},
      {"world",
       {{"profile", sim::to_string(s.world.profile)},
        {"inter_row", s.world.inter_row},
        {"plant_spacing", s.world.plant_spacing},
        {"curvature", s.world.curvature},
        {"row_length", s.world.row_length},
        {"num_rows", s.world.num_rows},
        {"canopy_halfwidth", s.world.canopy_halfwidth},
        {"canopy_height", s.world.canopy_height},
        {"jitter", s.world.jitter}}},
      {"camera",
       {{"hfov", s.camera.hfov},
        {"vfov", s.camera.vfov},
        {"width", s.camera.width},
        {"height", s.camera.height},
        {"mount_height", s.camera.mount_height},
        {"tilt", s.camera.tilt},
        {"max_range", s.camera.max_range}}},
      {"raster",
       {{"s_window", s.raster.s_window},
        {"l_depth", s.raster.l_depth},
        {"fusion_threshold", s.raster.fusion_threshold}}},
      {"spc",
       {{"v_max", s.spc.v_max},
        {"w_max", s.spc.w_max},
        {"alpha_ema", s.spc.alpha_ema},
        {"th_noise_frac", s.spc.th_noise_frac},
        {"min_cluster_len", opt(s.spc.min_cluster_len)},
        {"pcc_near_tol", opt(s.spc.pcc_near_tol)},
        {"fault_timeout", s.spc.fault_timeout}}},
      {"kinematics", {{"dt", s.kinematics.dt}}},
      {"noise", {{"flip_probability", s.flip_probability}}},
      {"start", scenario_detail::start_json(s.start)},
      {"episodes", episodes},
  };
}

/// Line (1-based) of the first occurrence of the last key of a dotted path,
/// searched after the occurrences of its parents. 0 when not found.
inline std::size_t locate_key_line(const std::string& text, const std::string& dotted) {
  std::size_t pos = 0;
  std::stringstream parts(dotted);
  for (std::string part; std::getline(parts, part, '.');) {
    const auto bracket = part.find('[');
    if (bracket != std::string::npos) part.erase(bracket);
    const auto found = text.find("\"" + part + "\"", pos);
    if (found == std::string::npos) return 0;
    pos = found;
  }
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() +
                                                     static_cast<std::ptrdiff_t>(pos), '\n'));
}

/// Parses and validates a scenario file. Errors carry "<file>:<line>: ...".
inline ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open scenario file");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ConfigError(path + ":" + std::to_string(line) + ": JSON syntax error: " + e.what());
  }
  try {
    ScenarioSpec spec = scenario_from_json(j);
    spec.validate();
    return spec;
  } catch (const ConfigError& e) {
    // Messages start with the offending key ("raster.l_depth: ..." from the
    // reader, "l_depth must ..." from validate()).
    const std::string msg = e.what();
    const std::string key = msg.substr(0, msg.find_first_of(": "));
    std::size_t line = key.empty() ? 0 : locate_key_line(text, key);
    if (line == 0) line = 1;
    throw ConfigError(path + ":" + std::to_string(line) + ": " + msg);
  }
}

}  // namespace vinerow
