// propslam command-line front end: simulate, slam, eval, compare, replay, fixture.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "propslam/error.hpp"
#include "propslam/io.hpp"
#include "propslam/metrics.hpp"
#include "propslam/pipeline.hpp"
#include "propslam/simulator.hpp"
#include "propslam/svg.hpp"

namespace fs = std::filesystem;
using namespace propslam;

namespace {

constexpr const char* kManifestName = "manifest.txt";

// Everything written by one invocation, so a failure can take it back.
class Outputs {
 public:
  explicit Outputs(fs::path root) : root_(std::move(root)) {}

  const fs::path& root() const { return root_; }

  void make_dir(const fs::path& dir) {
    std::vector<fs::path> missing;
    for (fs::path p = fs::absolute(dir); !p.empty() && !fs::exists(p); p = p.parent_path()) {
      missing.push_back(p);
      if (p == p.parent_path()) break;
    }
    for (auto it = missing.rbegin(); it != missing.rend(); ++it) {
      fs::create_directory(*it);
      created_.push_back(*it);
    }
  }

  void write(const fs::path& rel, const std::string& contents) {
    const fs::path p = root_ / rel;
    make_dir(p.parent_path());
    if (!fs::exists(p)) created_.push_back(fs::absolute(p));
    write_file_atomic(p, contents);
  }

  void rollback() noexcept {
    for (auto it = created_.rbegin(); it != created_.rend(); ++it) {
      std::error_code ec;
      fs::remove_all(*it, ec);
    }
    created_.clear();
  }

 private:
  fs::path root_;
  std::vector<fs::path> created_;
};

template <typename F>
std::string to_text(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

std::string absolute_string(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

const std::string& arg(const Manifest& m, const std::string& key) {
  const auto it = m.arguments.find(key);
  if (it == m.arguments.end()) throw Error(ErrorCode::kConfig, "missing argument '" + key + "'");
  return it->second;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ';'))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ";") + s;
  return out;
}

std::string frame_name(std::uint32_t id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06u.txt", id);
  return buf;
}

// Scans of a simulate output directory, in frame order.
std::vector<PointCloud> load_scans(const fs::path& dir) {
  const fs::path scans = dir / "scans";
  if (!fs::is_directory(scans)) throw Error(ErrorCode::kIo, scans.string() + ": not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(scans))
    if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::kIo, scans.string() + ": no scans");
  std::vector<PointCloud> out;
  for (const auto& f : files) out.push_back(load_cloud(f));
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i].frame_id <= out[i - 1].frame_id) throw Error(ErrorCode::kTrajectoryMismatch, scans.string() + ": frame ids not increasing");
  return out;
}

void check_frames(const std::vector<PointCloud>& scans, const Trajectory& t, const std::string& what) {
  bool ok = scans.size() == t.size();
  for (std::size_t i = 0; ok && i < scans.size(); ++i) ok = scans[i].frame_id == t.frame_ids[i];
  if (!ok) throw Error(ErrorCode::kTrajectoryMismatch, what + ": frame ids do not match the scans");
}

std::string format_fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// ---------------------------------------------------------------- commands

void cmd_simulate(const Manifest& m, Outputs& out) {
  const auto env = load_environment(arg(m, "env"));
  const auto truth = load_trajectory(arg(m, "traj"));
  if (truth.size() == 0) throw Error(ErrorCode::kConfig, arg(m, "traj") + ": empty trajectory");

  for (std::size_t k = 0; k < truth.size(); ++k) {
    const auto scan = simulate_scan(env, truth.poses[k], m.config.sensor, truth.frame_ids[k]);
    out.write(fs::path("scans") / frame_name(truth.frame_ids[k]), to_text([&](auto& os) { write_cloud(os, scan); }));
  }
  Trajectory odo;
  odo.frame_ids = truth.frame_ids;
  odo.poses = integrate(truth.poses.front(), simulate_odometry(truth.poses, m.config.odometry));
  out.write("truth.txt", to_text([&](auto& os) { write_trajectory(os, truth); }));
  out.write("odometry.txt", to_text([&](auto& os) { write_trajectory(os, odo); }));
  std::cout << "simulated " << truth.size() << " frames into " << out.root().string() << '\n';
}

void cmd_slam(const Manifest& m, Outputs& out) {
  const PipelineVariant variant = parse_variant(arg(m, "variant"));
  m.config.check_variant(variant);
  const fs::path dir = arg(m, "scans");
  const auto scans = load_scans(dir);
  const auto odo = load_trajectory(dir / "odometry.txt");
  check_frames(scans, odo, (dir / "odometry.txt").string());

  PipelineResult r = run_pipeline(scans, odo.poses, variant, m.config.pipeline);
  r.trajectory.frame_ids = odo.frame_ids;

  std::vector<RelativeMeasurement> odo_edges = r.odometry_edges, loop_edges = r.loop_edges;
  const PoseGraph graph = build_graph(r.trajectory.poses, odo_edges, loop_edges);

  out.write("trajectory.txt", to_text([&](auto& os) { write_trajectory(os, r.trajectory); }));
  out.write("map.txt", to_text([&](auto& os) { write_cloud(os, r.map); }));
  out.write("graph.txt", to_text([&](auto& os) { write_pose_graph(os, graph); }));
  out.write("run.log", to_text([&](auto& os) {
              os << "variant " << to_string(variant) << '\n';
              os << "frames " << scans.size() << '\n';
              os << "fallbacks " << r.fallbacks.size() << '\n';
              for (const auto& f : r.fallbacks) os << "fallback frame " << f.frame << ": " << f.reason << '\n';
              os << "loop_edges " << r.loop_edges.size() << '\n';
              if (r.optimize_report) {
                os << "J_initial " << format_double(r.optimize_report->initial_J) << '\n';
                os << "J_final " << format_double(r.optimize_report->final_J) << '\n';
                os << "optimizer_iterations " << r.optimize_report->iterations << '\n';
              }
              for (const auto& line : r.log) os << line << '\n';
            }));
  std::cout << to_string(variant) << ": " << scans.size() << " frames, " << r.fallbacks.size() << " fallbacks, "
            << r.loop_edges.size() << " loop edges\n";
}

struct EstimateRun {
  std::string variant;
  Trajectory trajectory;
  PointCloud map;
};

EstimateRun load_estimate(const fs::path& dir) {
  EstimateRun e;
  e.variant = dir.filename().string();
  if (fs::exists(dir / kManifestName)) {
    const auto man = load_manifest(dir / kManifestName);
    const auto it = man.arguments.find("variant");
    if (it != man.arguments.end()) e.variant = it->second;
  }
  e.trajectory = load_trajectory(dir / "trajectory.txt");
  e.map = load_cloud(dir / "map.txt");
  return e;
}

void cmd_eval(const Manifest& m, Outputs& out) {
  const fs::path truth_dir = arg(m, "truth");
  const auto truth = load_trajectory(truth_dir / "truth.txt");
  const auto scans = load_scans(truth_dir);
  check_frames(scans, truth, (truth_dir / "truth.txt").string());
  const PointCloud truth_map = assemble_map(scans, truth.poses);

  std::vector<EstimateRun> runs;
  for (const auto& d : split_list(arg(m, "est"))) runs.push_back(load_estimate(d));
  if (runs.empty()) throw Error(ErrorCode::kConfig, "eval: no estimate directories");
  std::stable_sort(runs.begin(), runs.end(), [](const EstimateRun& a, const EstimateRun& b) {
    auto rank = [](const std::string& v) {
      for (std::size_t i = 0; i < kAllVariants.size(); ++i)
        if (to_string(kAllVariants[i]) == v) return i;
      return kAllVariants.size();
    };
    return rank(a.variant) < rank(b.variant);
  });

  std::vector<std::vector<double>> errors;
  std::vector<Series> series;
  for (const auto& r : runs) {
    errors.push_back(translation_error_series(r.trajectory, truth));
    series.push_back({r.variant, errors.back()});
  }

  std::string csv = "frame";
  for (const auto& r : runs) csv += "," + r.variant;
  csv += '\n';
  for (std::size_t k = 0; k < truth.size(); ++k) {
    csv += std::to_string(truth.frame_ids[k]);
    for (const auto& e : errors) csv += "," + format_double(e[k]);
    csv += '\n';
  }
  out.write("translation_error.csv", csv);

  std::string md = "# variant map_distance_m mean_translation_error_m final_translation_error_m\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const double d = map_distance(runs[i].map, truth_map);
    md += runs[i].variant + " " + format_double(d) + " " + format_double(mean(errors[i])) + " " +
          format_double(errors[i].back()) + "\n";
    std::cout << std::left << std::setw(12) << runs[i].variant << " map " << format_fixed(d, 4) << " m, mean error "
              << format_fixed(mean(errors[i]), 3) << " m\n";
  }
  out.write("map_distance.txt", md);
  out.write("errors.svg", line_chart_svg(series, "frame", "translation error [m]"));
}

std::map<std::string, double> read_map_distances(const fs::path& dir) {
  const fs::path file = dir / "map_distance.txt";
  std::istringstream in(read_file(file));
  std::map<std::string, double> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream f(line);
    std::string variant, value;
    f >> variant >> value;
    try {
      std::size_t used = 0;
      out[variant] = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw ParseError(file.string(), n, 2, "expected a number, got '" + value + "'");
    }
  }
  return out;
}

void cmd_compare(const Manifest& m, Outputs& out) {
  const auto dirs = split_list(arg(m, "runs"));
  if (dirs.empty()) throw Error(ErrorCode::kConfig, "compare: no run directories");
  std::vector<std::map<std::string, double>> cols;
  for (const auto& d : dirs) cols.push_back(read_map_distances(d));

  std::vector<std::string> rows;
  for (auto v : kAllVariants) rows.emplace_back(to_string(v));
  for (const auto& c : cols)
    for (const auto& [v, _] : c)
      if (std::find(rows.begin(), rows.end(), v) == rows.end()) rows.push_back(v);

  std::ostringstream t;
  t << "Distance to the map built from the true trajectory [m]\n";
  t << std::left << std::setw(14) << "variant";
  for (std::size_t i = 0; i < cols.size(); ++i) t << std::right << std::setw(10) << ("run" + std::to_string(i + 1));
  t << std::right << std::setw(10) << "mean" << '\n';
  for (const auto& v : rows) {
    double sum = 0.0;
    int n = 0;
    std::ostringstream line;
    line << std::left << std::setw(14) << v;
    for (const auto& c : cols) {
      const auto it = c.find(v);
      if (it == c.end()) {
        line << std::right << std::setw(10) << "-";
      } else {
        line << std::right << std::setw(10) << format_fixed(it->second, 4);
        sum += it->second;
        ++n;
      }
    }
    if (n == 0) continue;
    line << std::right << std::setw(10) << format_fixed(sum / n, 4);
    t << line.str() << '\n';
  }
  std::cout << t.str();
  out.write("table.txt", t.str());
}

void cmd_fixture(const Manifest& m, Outputs& out) {
  const std::string& name = arg(m, "name");
  EnvironmentSpec env;
  Trajectory traj;
  RunConfig cfg;
  if (name == "loop-course") {
    env = fixtures::loop_course();
    traj = Trajectory::from_poses(fixtures::loop_course_trajectory());
  } else if (name == "corridor-pair") {
    env = fixtures::corridor_pair();
    traj = Trajectory::from_poses({RigidTransform::from_translation({0, 0, fixtures::kSensorHeight})});
    cfg.sensor = fixtures::corridor_pair_sensor(cfg.sensor.seed);
  } else {
    throw Error(ErrorCode::kConfig, "unknown fixture '" + name + "' (loop-course, corridor-pair)");
  }
  out.write("env.txt", to_text([&](auto& os) { write_environment(os, env); }));
  out.write("trajectory.txt", to_text([&](auto& os) { write_trajectory(os, traj); }));
  // Only keys that differ from the defaults, so the file never pins a
  // penalty that a label-blind variant would reject.
  std::istringstream mine(to_text([&](auto& os) { write_config(os, cfg); }));
  std::istringstream base(to_text([&](auto& os) { write_config(os, RunConfig{}); }));
  std::string text = "# " + name + " settings that differ from the built-in defaults\n";
  for (std::string a, b; std::getline(mine, a) && std::getline(base, b);) {
    if (a != b) text += a + '\n';
  }
  out.write("config.txt", text);
}

using Command = void (*)(const Manifest&, Outputs&);

Command find_command(const std::string& name) {
  static const std::map<std::string, Command> table{{"simulate", cmd_simulate}, {"slam", cmd_slam},
                                                    {"eval", cmd_eval},         {"compare", cmd_compare},
                                                    {"fixture", cmd_fixture}};
  const auto it = table.find(name);
  if (it == table.end()) throw Error(ErrorCode::kConfig, "manifest names unknown command '" + name + "'");
  return it->second;
}

// Runs a command into `out_dir` and records its manifest there. On any failure
// the files and directories it created are removed again.
int execute(const Manifest& m, const fs::path& out_dir) {
  Outputs out(out_dir);
  try {
    m.config.validate();
    const Command cmd = find_command(m.command);
    out.make_dir(out_dir);
    cmd(m, out);
    out.write(kManifestName, to_text([&](auto& os) { write_manifest(os, m); }));
    return 0;
  } catch (const std::exception& e) {
    out.rollback();
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "propslam " << m.command << ": " << msg << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Property-aware ICP SLAM toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(library_version()));

  std::string out_dir, config_path;
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::string> args;
  std::vector<std::string> est_dirs, run_dirs;

  auto add_config = [&](CLI::App* sub) { sub->add_option("--config", config_path, "key = value configuration file"); };

  auto* sim = app.add_subcommand("simulate", "ray-cast scans and drifting odometry along a trajectory");
  sim->add_option("--env", args["env"], "environment file")->required();
  sim->add_option("--traj", args["traj"], "true trajectory file")->required();
  sim->add_option("--out", out_dir, "output directory")->required();
  sim->add_option("--seed", seed, "overrides sensor.seed and odometry.seed");
  add_config(sim);

  auto* slam = app.add_subcommand("slam", "run one pipeline variant over simulated scans");
  slam->add_option("--variant", args["variant"], "odometry | icp | icp-pg | prop-icp | prop-icp-pg")->required();
  slam->add_option("--scans", args["scans"], "simulate output directory")->required();
  slam->add_option("--out", out_dir, "output directory")->required();
  add_config(slam);

  auto* ev = app.add_subcommand("eval", "translation error and map distance against the truth");
  ev->add_option("--est", est_dirs, "slam output directories")->required();
  ev->add_option("--truth", args["truth"], "simulate output directory")->required();
  ev->add_option("--out", out_dir, "output directory")->required();

  auto* cmp = app.add_subcommand("compare", "table of map distances over eval directories");
  cmp->add_option("--runs", run_dirs, "eval output directories")->required();
  cmp->add_option("--out", out_dir, "directory for table.txt (default: a temp dir, removed)");

  auto* rep = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  std::string manifest_path;
  rep->add_option("--manifest", manifest_path, "manifest.txt of an earlier run")->required();
  rep->add_option("--out", out_dir, "output directory")->required();

  auto* fix = app.add_subcommand("fixture", "write a built-in environment, trajectory and config");
  fix->add_option("--name", args["name"], "loop-course | corridor-pair")->required();
  fix->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  Manifest m;
  m.version = std::string(library_version());
  try {
    CLI::App* sub = app.get_subcommands().front();
    if (sub == rep) {
      m = load_manifest(manifest_path);
      return execute(m, out_dir);
    }
    m.command = sub->get_name();
    if (!config_path.empty()) m.config = load_config(config_path);
    if (seed) {
      m.config.set("sensor.seed", std::to_string(*seed));
      m.config.set("odometry.seed", std::to_string(*seed));
      m.config.explicit_keys.insert({"sensor.seed", "odometry.seed"});
    }
    for (const auto& opt : sub->get_options()) {
      const std::string name = opt->get_lnames().empty() ? "" : opt->get_lnames().front();
      if (args.count(name) && opt->count() > 0) m.arguments[name] = name == "variant" || name == "name" ? args[name] : absolute_string(args[name]);
    }
    std::vector<std::string> abs;
    for (const auto& d : est_dirs) abs.push_back(absolute_string(d));
    if (!abs.empty()) m.arguments["est"] = join_list(abs);
    abs.clear();
    for (const auto& d : run_dirs) abs.push_back(absolute_string(d));
    if (!abs.empty()) m.arguments["runs"] = join_list(abs);
    if (!config_path.empty()) m.arguments["config"] = absolute_string(config_path);
  } catch (const std::exception& e) {
    std::cerr << "propslam: " << e.what() << '\n';
    return 1;
  }

  if (m.command == "compare" && out_dir.empty()) {
    const fs::path tmp = fs::temp_directory_path() / ("propslam_compare_" + std::to_string(::getpid()));
    const int rc = execute(m, tmp);
    std::error_code ec;
    fs::remove_all(tmp, ec);
    return rc;
  }
  return execute(m, out_dir);
}
