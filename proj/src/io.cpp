#include "propslam/io.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>
#include <unordered_map>

#include <unistd.h>

namespace propslam {

namespace fs = std::filesystem;

ParseError::ParseError(std::string source, std::size_t line, std::size_t field, const std::string& what)
    : Error(ErrorCode::kParse, source + ":" + std::to_string(line) +
                                   (field ? ": field " + std::to_string(field) : std::string()) + ": " + what),
      source_(std::move(source)),
      line_(line),
      field_(field) {}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_number(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_number(std::string_view s, bool& out) {
  if (s == "0" || s == "false") return out = false, true;
  if (s == "1" || s == "true") return out = true, true;
  return false;
}

template <typename Int>
bool parse_number(std::string_view s, Int& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

// Line reader that knows where it is.
class Reader {
 public:
  Reader(std::istream& is, std::string_view source) : is_(is), source_(source) {}

  bool next(std::string& line) {
    if (!std::getline(is_, line)) return false;
    ++line_;
    return true;
  }

  [[noreturn]] void fail(std::size_t field, const std::string& what) const {
    throw ParseError(source_, line_, field, what);
  }

  template <typename T>
  T field(const std::vector<std::string_view>& f, std::size_t i, const char* what) const {
    T v{};
    if (!parse_number(f[i], v)) fail(i + 1, "expected " + std::string(what) + ", got '" + std::string(f[i]) + "'");
    return v;
  }

  void expect_count(const std::vector<std::string_view>& f, std::size_t n) const {
    if (f.size() != n) {
      fail(0, "expected " + std::to_string(n) + " fields, got " + std::to_string(f.size()));
    }
  }

  std::size_t line() const { return line_; }
  const std::string& source() const { return source_; }

 private:
  std::istream& is_;
  std::string source_;
  std::size_t line_ = 0;
};

bool is_blank_or_comment(std::string_view line) {
  line = trim(line);
  return line.empty() || line.front() == '#';
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for reading");
  return in;
}

void write_pose(std::ostream& os, const RigidTransform& x) {
  const Vec3& t = x.translation();
  const Eigen::Quaterniond q = x.quaternion();
  os << format_double(t.x()) << ' ' << format_double(t.y()) << ' ' << format_double(t.z()) << ' '
     << format_double(q.x()) << ' ' << format_double(q.y()) << ' ' << format_double(q.z()) << ' '
     << format_double(q.w());
}

// Seven fields starting at `first`: t then q (w last).
RigidTransform read_pose(const Reader& r, const std::vector<std::string_view>& f, std::size_t first) {
  double v[7];
  for (int i = 0; i < 7; ++i) v[i] = r.field<double>(f, first + i, "number");
  Eigen::Quaterniond q(v[6], v[3], v[4], v[5]);
  const double norm = q.norm();
  if (std::abs(norm - 1.0) > 1e-6) {
    r.fail(first + 4, "quaternion norm " + format_double(norm) + " is not within 1e-6 of 1");
  }
  q.normalize();
  return RigidTransform::from_quaternion(q, Vec3(v[0], v[1], v[2]));
}

template <typename Fn>
void save_with(const fs::path& path, Fn&& fn) {
  std::ostringstream os;
  fn(os);
  write_file_atomic(path, os.str());
}

}  // namespace

// ---- clouds ----

void write_cloud(std::ostream& os, const PointCloud& cloud) {
  os << "# frame " << cloud.frame_id << '\n';
  for (const auto& p : cloud.points) {
    os << format_double(p.position.x()) << ' ' << format_double(p.position.y()) << ' '
       << format_double(p.position.z()) << ' ' << static_cast<unsigned>(p.label.id) << '\n';
  }
}

PointCloud read_cloud(std::istream& is, std::string_view source) {
  Reader r(is, source);
  PointCloud cloud;
  std::string line;
  while (r.next(line)) {
    std::string_view s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '#') {
      auto f = split_fields(s.substr(1));
      if (f.size() == 2 && f[0] == "frame") cloud.frame_id = r.field<std::uint32_t>(f, 1, "frame id");
      continue;
    }
    auto f = split_fields(s);
    r.expect_count(f, 4);
    Vec3 p(r.field<double>(f, 0, "number"), r.field<double>(f, 1, "number"), r.field<double>(f, 2, "number"));
    const auto label = r.field<std::uint8_t>(f, 3, "integer label");
    cloud.points.push_back({p, ClassLabel{label}});
  }
  return cloud;
}

void save_cloud(const fs::path& path, const PointCloud& cloud) {
  save_with(path, [&](std::ostream& os) { write_cloud(os, cloud); });
}

PointCloud load_cloud(const fs::path& path) {
  auto in = open_input(path);
  return read_cloud(in, path.string());
}

// ---- trajectories ----

void write_trajectory(std::ostream& os, const Trajectory& trajectory) {
  os << "# frame_id tx ty tz qx qy qz qw\n";
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    os << trajectory.frame_ids[i] << ' ';
    write_pose(os, trajectory.poses[i]);
    os << '\n';
  }
}

Trajectory read_trajectory(std::istream& is, std::string_view source) {
  Reader r(is, source);
  Trajectory t;
  std::string line;
  while (r.next(line)) {
    if (is_blank_or_comment(line)) continue;
    auto f = split_fields(line);
    r.expect_count(f, 8);
    t.frame_ids.push_back(r.field<std::uint32_t>(f, 0, "frame id"));
    t.poses.push_back(read_pose(r, f, 1));
  }
  return t;
}

void save_trajectory(const fs::path& path, const Trajectory& trajectory) {
  save_with(path, [&](std::ostream& os) { write_trajectory(os, trajectory); });
}

Trajectory load_trajectory(const fs::path& path) {
  auto in = open_input(path);
  return read_trajectory(in, path.string());
}

// ---- environments ----

void write_environment(std::ostream& os, const EnvironmentSpec& env) {
  for (const auto& w : env.walls) {
    os << "WALL " << format_double(w.p1.x()) << ' ' << format_double(w.p1.y()) << ' ' << format_double(w.p2.x())
       << ' ' << format_double(w.p2.y()) << ' ' << format_double(w.height) << '\n';
  }
  for (const auto& p : env.patches) {
    os << "PATCH " << static_cast<unsigned>(p.label.id) << ' ' << format_double(p.center.x()) << ' '
       << format_double(p.center.y()) << ' ' << format_double(p.center.z()) << ' ' << format_double(p.radius)
       << '\n';
  }
}

EnvironmentSpec read_environment(std::istream& is, std::string_view source) {
  Reader r(is, source);
  EnvironmentSpec env;
  std::string line;
  while (r.next(line)) {
    if (is_blank_or_comment(line)) continue;
    auto f = split_fields(line);
    if (f[0] == "WALL") {
      r.expect_count(f, 6);
      Wall w;
      w.p1 = {r.field<double>(f, 1, "number"), r.field<double>(f, 2, "number")};
      w.p2 = {r.field<double>(f, 3, "number"), r.field<double>(f, 4, "number")};
      w.height = r.field<double>(f, 5, "number");
      env.walls.push_back(w);
    } else if (f[0] == "PATCH") {
      r.expect_count(f, 6);
      Patch p;
      p.label = ClassLabel{r.field<std::uint8_t>(f, 1, "integer label")};
      p.center = {r.field<double>(f, 2, "number"), r.field<double>(f, 3, "number"), r.field<double>(f, 4, "number")};
      p.radius = r.field<double>(f, 5, "number");
      env.patches.push_back(p);
    } else {
      r.fail(1, "unknown record '" + std::string(f[0]) + "'");
    }
  }
  try {
    env.validate();
  } catch (const Error& e) {
    throw ParseError(std::string(source), r.line(), 0, e.what());
  }
  return env;
}

EnvironmentSpec load_environment(const fs::path& path) {
  auto in = open_input(path);
  return read_environment(in, path.string());
}

// ---- pose graphs ----

void write_pose_graph(std::ostream& os, const PoseGraph& graph) {
  for (const auto& n : graph.nodes) {
    os << "NODE " << n.frame_id << ' ';
    write_pose(os, n.pose);
    os << '\n';
  }
  for (const auto& e : graph.edges) {
    if (e.a >= graph.nodes.size() || e.b >= graph.nodes.size()) {
      throw Error(ErrorCode::kDanglingEdge, "write_pose_graph: edge endpoint out of range");
    }
    os << "EDGE " << graph.nodes[e.a].frame_id << ' ' << graph.nodes[e.b].frame_id << ' ';
    write_pose(os, e.measurement);
    for (int i = 0; i < 6; ++i) {
      for (int j = i; j < 6; ++j) os << ' ' << format_double(e.information(i, j));
    }
    os << '\n';
  }
}

PoseGraph read_pose_graph(std::istream& is, std::string_view source) {
  Reader r(is, source);
  PoseGraph g;
  std::unordered_map<std::uint32_t, std::uint32_t> index_of;
  std::string line;
  while (r.next(line)) {
    if (is_blank_or_comment(line)) continue;
    auto f = split_fields(line);
    if (f[0] == "NODE") {
      r.expect_count(f, 9);
      const auto id = r.field<std::uint32_t>(f, 1, "node id");
      if (!index_of.emplace(id, static_cast<std::uint32_t>(g.nodes.size())).second) {
        r.fail(2, "duplicate node id " + std::to_string(id));
      }
      g.nodes.push_back({id, read_pose(r, f, 2)});
    } else if (f[0] == "EDGE") {
      r.expect_count(f, 10 + 21);
      PoseEdge e;
      for (std::size_t k : {1u, 2u}) {
        const auto id = r.field<std::uint32_t>(f, k, "node id");
        auto it = index_of.find(id);
        if (it == index_of.end()) r.fail(k + 1, "edge references unknown node " + std::to_string(id));
        (k == 1 ? e.a : e.b) = it->second;
      }
      e.measurement = read_pose(r, f, 3);
      std::size_t k = 10;
      for (int i = 0; i < 6; ++i) {
        for (int j = i; j < 6; ++j, ++k) {
          e.information(i, j) = e.information(j, i) = r.field<double>(f, k, "number");
        }
      }
      e.kind = e.b == e.a + 1 ? EdgeKind::kOdometry : EdgeKind::kLoop;
      g.edges.push_back(e);
    } else {
      r.fail(1, "unknown record '" + std::string(f[0]) + "'");
    }
  }
  return g;
}

void save_pose_graph(const fs::path& path, const PoseGraph& graph) {
  save_with(path, [&](std::ostream& os) { write_pose_graph(os, graph); });
}

PoseGraph load_pose_graph(const fs::path& path) {
  auto in = open_input(path);
  return read_pose_graph(in, path.string());
}

// ---- configuration ----

namespace {

struct KeyEntry {
  ConfigKey key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
std::string to_text(const T& v) {
  if constexpr (std::is_floating_point_v<T>) {
    return format_double(v);
  } else {
    return std::to_string(v);
  }
}

template <typename T, typename Field>
KeyEntry entry(std::string_view name, std::string_view doc, Field field) {
  KeyEntry e;
  e.key = {name, doc};
  e.set = [name, field](RunConfig& c, std::string_view text) {
    T v{};
    if (!parse_number(text, v)) {
      throw Error(ErrorCode::kConfig, "invalid value '" + std::string(text) + "' for " + std::string(name));
    }
    field(c) = v;
  };
  e.get = [field](const RunConfig& c) { return to_text(field(c)); };
  return e;
}

#define PROPSLAM_KEY(T, name, doc, expr) entry<T>(name, doc, [](auto& c) -> auto& { return c.expr; })

const std::vector<KeyEntry>& entries() {
  static const std::vector<KeyEntry> table = {
      PROPSLAM_KEY(double, "association.alpha", "cross-class penalty added to d^2 [m^2]", pipeline.icp.association.alpha),
      PROPSLAM_KEY(double, "association.widened_radius", "search radius for same-class partners [m]", pipeline.icp.association.widened_radius),
      PROPSLAM_KEY(double, "association.base_radius", "search radius otherwise [m]", pipeline.icp.association.base_radius),
      PROPSLAM_KEY(int, "icp.max_iterations", "ICP iteration cap", pipeline.icp.max_iterations),
      PROPSLAM_KEY(double, "icp.translation_tol", "convergence: per-iteration translation step [m]", pipeline.icp.translation_tol),
      PROPSLAM_KEY(double, "icp.rotation_tol", "convergence: per-iteration rotation step [rad]", pipeline.icp.rotation_tol),
      PROPSLAM_KEY(std::size_t, "icp.min_correspondences", "fewer pairs than this is a failure", pipeline.icp.min_correspondences),
      PROPSLAM_KEY(double, "icp.sensor_noise_sigma", "range noise assumed by the covariance [m]", pipeline.icp.sensor_noise_sigma),
      PROPSLAM_KEY(std::size_t, "icp.normal_neighbors", "neighbours used to fit target normals", pipeline.icp.normal_neighbors),
      PROPSLAM_KEY(double, "landmarks.cluster_radius", "single-linkage radius [m]", pipeline.landmarks.cluster_radius),
      PROPSLAM_KEY(std::size_t, "landmarks.min_cluster_size", "smallest kept cluster [points]", pipeline.landmarks.min_cluster_size),
      PROPSLAM_KEY(double, "landmarks.gate_radius", "loop gate on world centroid distance [m]", pipeline.landmarks.gate_radius),
      PROPSLAM_KEY(std::uint32_t, "landmarks.min_frame_gap", "smallest frame separation of a loop", pipeline.landmarks.min_frame_gap),
      PROPSLAM_KEY(double, "loop.max_covariance_trace", "loop edges need trace(cov) below this", pipeline.loop_max_covariance_trace),
      PROPSLAM_KEY(std::size_t, "loop.max_per_frame", "accepted loops per frame", pipeline.max_loops_per_frame),
      PROPSLAM_KEY(std::size_t, "loop.max_attempts_per_frame", "candidates tried per frame, closest first", pipeline.max_loop_attempts_per_frame),
      PROPSLAM_KEY(double, "loop.search_radius", "base radius of the coarse loop ICP pass [m]", pipeline.loop_search_radius),
      PROPSLAM_KEY(double, "loop.min_overlap", "fraction of the source that must find a partner", pipeline.loop_min_overlap),
      PROPSLAM_KEY(double, "loop.max_correction_translation", "largest accepted move from the estimate [m]", pipeline.loop_max_correction_translation),
      PROPSLAM_KEY(double, "loop.max_correction_rotation", "largest accepted turn from the estimate [rad]", pipeline.loop_max_correction_rotation),
      PROPSLAM_KEY(int, "optimizer.max_iterations", "pose graph iteration cap", pipeline.optimizer_max_iterations),
      PROPSLAM_KEY(double, "optimizer.damping", "initial damping", pipeline.optimizer_damping),
      PROPSLAM_KEY(double, "fallback.sigma_translation", "odometry edge sigma when ICP fails [m]", pipeline.odometry_sigma_translation),
      PROPSLAM_KEY(double, "fallback.sigma_rotation", "odometry edge sigma when ICP fails [rad]", pipeline.odometry_sigma_rotation),
      PROPSLAM_KEY(double, "fallback.inflation", "covariance multiplier for fallback edges", pipeline.fallback_inflation),
      PROPSLAM_KEY(int, "sensor.horizontal_rays", "rays per ring", sensor.horizontal_rays),
      PROPSLAM_KEY(int, "sensor.rings", "rings", sensor.rings),
      PROPSLAM_KEY(double, "sensor.vertical_min_deg", "lowest ring elevation [deg]", sensor.vertical_min_deg),
      PROPSLAM_KEY(double, "sensor.vertical_max_deg", "highest ring elevation [deg]", sensor.vertical_max_deg),
      PROPSLAM_KEY(double, "sensor.max_range", "[m]", sensor.max_range),
      PROPSLAM_KEY(double, "sensor.noise_sigma", "range noise [m]", sensor.noise_sigma),
      PROPSLAM_KEY(bool, "sensor.jitter", "1 = non-repeating ray pattern", sensor.jitter),
      PROPSLAM_KEY(std::uint64_t, "sensor.seed", "scan noise seed", sensor.seed),
      PROPSLAM_KEY(double, "odometry.translation_sigma", "[m per m]", odometry.translation_sigma),
      PROPSLAM_KEY(double, "odometry.rotation_sigma", "[rad per rad]", odometry.rotation_sigma),
      PROPSLAM_KEY(double, "odometry.heading_sigma", "[rad per m]", odometry.heading_sigma),
      PROPSLAM_KEY(double, "odometry.bias_scale", "forward over-estimate fraction", odometry.bias_scale),
      PROPSLAM_KEY(double, "odometry.bias_yaw", "[rad per m]", odometry.bias_yaw),
      PROPSLAM_KEY(std::uint64_t, "odometry.seed", "odometry noise seed", odometry.seed),
  };
  return table;
}

#undef PROPSLAM_KEY

const KeyEntry* find_entry(std::string_view key) {
  for (const auto& e : entries()) {
    if (e.key.name == key) return &e;
  }
  return nullptr;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& e : entries()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

RunConfig::RunConfig()
    : pipeline(fixtures::loop_course_pipeline()),
      sensor(fixtures::loop_course_sensor(1)),
      odometry(fixtures::loop_course_odometry(1)) {}

void RunConfig::set(std::string_view key, std::string_view value) {
  const KeyEntry* e = find_entry(key);
  if (!e) throw Error(ErrorCode::kConfig, "unknown config key '" + std::string(key) + "'");
  e->set(*this, value);
  explicit_keys.insert(std::string(key));
}

std::string RunConfig::get(std::string_view key) const {
  const KeyEntry* e = find_entry(key);
  if (!e) throw Error(ErrorCode::kConfig, "unknown config key '" + std::string(key) + "'");
  return e->get(*this);
}

void RunConfig::validate() const {
  pipeline.validate();
  sensor.validate();
  odometry.validate();
}

void RunConfig::check_variant(PipelineVariant variant) const {
  if (!uses_property_icp(variant) && is_explicit("association.alpha") && pipeline.icp.association.alpha > 0.0) {
    throw Error(ErrorCode::kConfig, "variant/config conflict: variant '" + std::string(to_string(variant)) +
                                        "' is label-blind but association.alpha = " +
                                        format_double(pipeline.icp.association.alpha));
  }
}

std::uint64_t RunConfig::hash() const {
  std::ostringstream os;
  write_config(os, *this);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

// Feeds "key = value" lines to `on_pair`; returns nothing, throws ParseError.
template <typename Fn>
void read_pairs(std::istream& is, std::string_view source, Fn&& on_pair) {
  Reader r(is, source);
  std::string line;
  while (r.next(line)) {
    std::string_view s = line;
    if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) r.fail(0, "expected 'key = value'");
    const std::string_view key = trim(s.substr(0, eq));
    const std::string_view value = trim(s.substr(eq + 1));
    if (key.empty()) r.fail(1, "empty key");
    try {
      on_pair(key, value);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      r.fail(find_entry(key) ? 2 : 1, e.what());
    }
  }
}

}  // namespace

RunConfig read_config(std::istream& is, std::string_view source) {
  RunConfig c;
  std::set<std::string> seen;
  read_pairs(is, source, [&](std::string_view key, std::string_view value) {
    if (!seen.insert(std::string(key)).second) {
      throw Error(ErrorCode::kConfig, "duplicate key '" + std::string(key) + "'");
    }
    c.set(key, value);
  });
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, std::string(source) + ": " + e.what());
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  auto in = open_input(path);
  return read_config(in, path.string());
}

void write_config(std::ostream& os, const RunConfig& config) {
  for (const auto& e : entries()) os << e.key.name << " = " << e.get(config) << '\n';
}

// ---- manifests ----

std::string_view library_version() { return "0.1.0"; }

void write_manifest(std::ostream& os, const Manifest& m) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(m.config.hash()));
  os << "# propslam run manifest\n";
  os << "run.version = " << m.version << '\n';
  os << "run.command = " << m.command << '\n';
  for (const auto& [k, v] : m.arguments) os << "run.arg." << k << " = " << v << '\n';
  std::string explicit_list;
  for (const auto& k : m.config.explicit_keys) explicit_list += (explicit_list.empty() ? "" : ",") + k;
  os << "run.explicit_keys = " << explicit_list << '\n';
  os << "run.config_hash = " << hash << '\n';
  os << "run.seeds = sensor:" << m.config.sensor.seed << " odometry:" << m.config.odometry.seed << '\n';
  write_config(os, m.config);
}

Manifest read_manifest(std::istream& is, std::string_view source) {
  Manifest m;
  std::string hash;
  std::string explicit_list;
  read_pairs(is, source, [&](std::string_view key, std::string_view value) {
    if (key.starts_with("run.arg.")) {
      m.arguments[std::string(key.substr(8))] = value;
    } else if (key == "run.version") {
      m.version = value;
    } else if (key == "run.command") {
      m.command = value;
    } else if (key == "run.config_hash") {
      hash = value;
    } else if (key == "run.explicit_keys") {
      explicit_list = value;
    } else if (key == "run.seeds") {
      // informational; the seeds themselves are config keys
    } else {
      m.config.set(key, value);
    }
  });
  m.config.explicit_keys.clear();
  std::string_view rest = explicit_list;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view k = trim(rest.substr(0, comma));
    if (!k.empty()) {
      if (!find_entry(k)) throw Error(ErrorCode::kConfig, std::string(source) + ": unknown explicit key '" + std::string(k) + "'");
      m.config.explicit_keys.insert(std::string(k));
    }
    rest = comma == std::string_view::npos ? std::string_view() : rest.substr(comma + 1);
  }
  if (!hash.empty()) {
    char expected[17];
    std::snprintf(expected, sizeof expected, "%016llx", static_cast<unsigned long long>(m.config.hash()));
    if (hash != expected) {
      throw Error(ErrorCode::kConfig, std::string(source) + ": config hash " + hash + " does not match contents (" +
                                          expected + ")");
    }
  }
  m.config.validate();
  return m;
}

Manifest load_manifest(const fs::path& path) {
  auto in = open_input(path);
  return read_manifest(in, path.string());
}

// ---- files ----

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorCode::kIo, "write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::kIo, "cannot rename into '" + path.string() + "'");
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace propslam
