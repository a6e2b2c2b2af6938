#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "propslam/error.hpp"
#include "propslam/pipeline.hpp"
#include "propslam/posegraph.hpp"
#include "propslam/simulator.hpp"

namespace propslam {

/// kParse error with a location. `field` is 1-based; 0 means the whole line.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, std::size_t field, const std::string& what);

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }
  std::size_t field() const { return field_; }

 private:
  std::string source_;
  std::size_t line_;
  std::size_t field_;
};

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);

// Labeled cloud: "# frame <id>" then "x y z label" per line.
void write_cloud(std::ostream& os, const PointCloud& cloud);
PointCloud read_cloud(std::istream& is, std::string_view source = "<stream>");
void save_cloud(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud load_cloud(const std::filesystem::path& path);

// Trajectory: "frame_id tx ty tz qx qy qz qw".
void write_trajectory(std::ostream& os, const Trajectory& trajectory);
Trajectory read_trajectory(std::istream& is, std::string_view source = "<stream>");
void save_trajectory(const std::filesystem::path& path, const Trajectory& trajectory);
Trajectory load_trajectory(const std::filesystem::path& path);

// Environment: "WALL x1 y1 x2 y2 height" and "PATCH label cx cy cz radius".
void write_environment(std::ostream& os, const EnvironmentSpec& env);
EnvironmentSpec read_environment(std::istream& is, std::string_view source = "<stream>");
EnvironmentSpec load_environment(const std::filesystem::path& path);

// Pose graph edge list: "NODE id t q" and "EDGE a b t q <21 upper-triangular information entries>".
// An edge joining consecutive ids is read back as odometry, anything else as a loop.
void write_pose_graph(std::ostream& os, const PoseGraph& graph);
PoseGraph read_pose_graph(std::istream& is, std::string_view source = "<stream>");
void save_pose_graph(const std::filesystem::path& path, const PoseGraph& graph);
PoseGraph load_pose_graph(const std::filesystem::path& path);

/// Every tunable of a run. Defaults reproduce the canonical loop course.
struct RunConfig {
  PipelineParams pipeline;
  SensorSpec sensor;
  OdometryNoiseSpec odometry;
  /// Keys that appeared in the parsed text.
  std::set<std::string> explicit_keys;

  RunConfig();

  bool is_explicit(std::string_view key) const { return explicit_keys.count(std::string(key)) != 0; }
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  void validate() const;
  /// Throws kConfig ("variant/config conflict") when an explicitly set key
  /// contradicts the variant.
  void check_variant(PipelineVariant variant) const;
  /// FNV-1a over the canonical text.
  std::uint64_t hash() const;
};

struct ConfigKey {
  std::string_view name;
  std::string_view doc;
};

/// All recognised keys in canonical order.
const std::vector<ConfigKey>& config_keys();

/// "key = value" lines; '#' starts a comment. Unknown keys are errors.
RunConfig read_config(std::istream& is, std::string_view source = "<stream>");
RunConfig load_config(const std::filesystem::path& path);
/// Canonical text: every key, one per line, in config_keys() order.
void write_config(std::ostream& os, const RunConfig& config);

/// Record of one CLI invocation. The text form is a valid config file with
/// extra "run.*" keys, so a manifest can be replayed.
struct Manifest {
  std::string version;
  std::string command;
  std::map<std::string, std::string> arguments;  // e.g. variant, scans
  RunConfig config;
};

std::string_view library_version();
void write_manifest(std::ostream& os, const Manifest& manifest);
Manifest read_manifest(std::istream& is, std::string_view source = "<stream>");
Manifest load_manifest(const std::filesystem::path& path);

/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace propslam
