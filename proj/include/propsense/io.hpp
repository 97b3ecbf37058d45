#pragma once

#include "propsense/mesh.hpp"
#include "propsense/pose.hpp"
#include "propsense/proprio.hpp"
#include "propsense/solver.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// JSON / JSON Lines artifacts. Every parser reports malformed input as
// InputError (with a line number for JSONL) and never lets a library
// exception escape. Doubles are written as shortest round-trip decimals, so
// serialize -> parse is the identity on all numeric fields.
namespace propsense::io {

std::string read_text(const std::filesystem::path& path);
/// Creates parent directories as needed.
void write_text(const std::filesystem::path& path, std::string_view text);

// Mesh: {"units":"mm","vertices":[[x,y,z],...],"tets":[[a,b,c,d],...],
//        "handle_indices":[...],"contact_indices":[...],"anchor_indices":[...]}
// anchor_indices is optional.
std::string serialize_mesh(const TetMesh& mesh);
TetMesh parse_mesh(std::string_view text);
TetMesh read_mesh(const std::filesystem::path& path);
void write_mesh(const TetMesh& mesh, const std::filesystem::path& path);

// Point cloud: {"units":"mm","points":[[x,y,z],...],"normals":[[x,y,z],...]}
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // empty or parallel to points
};
std::string serialize_cloud(const PointCloud& cloud);
PointCloud parse_cloud(std::string_view text);
PointCloud read_cloud(const std::filesystem::path& path);
void write_cloud(const PointCloud& cloud, const std::filesystem::path& path);

// Pose stream, one object per line: {"t":s,"p":[x,y,z],"q":[w,x,y,z]}.
// Quaternions within 1e-6 of unit norm are normalized, others rejected.
// Times must be strictly increasing.
struct PoseFrame {
  double t = 0.0;
  RigidPose pose;
};
std::string serialize_pose_stream(const std::vector<PoseFrame>& frames);
std::vector<PoseFrame> parse_pose_stream(std::string_view text);
std::vector<PoseFrame> read_pose_stream(const std::filesystem::path& path);
void write_pose_stream(const std::vector<PoseFrame>& frames, const std::filesystem::path& path);

// Marker calibration: {"markers":[{"id":"m1","rest_position":[x,y,z]},...]}
struct Marker {
  std::string id;
  Vec3 rest_position = Vec3::Zero();
};
std::string serialize_markers(const std::vector<Marker>& markers);
std::vector<Marker> parse_markers(std::string_view text);
std::vector<Marker> read_markers(const std::filesystem::path& path);
void write_markers(const std::vector<Marker>& markers, const std::filesystem::path& path);

// Ground-truth stream, one object per line: {"t":s,"points":[[x,y,z],...]}.
struct TruthFrame {
  double t = 0.0;
  std::vector<Vec3> points;
};
std::string serialize_truth_stream(const std::vector<TruthFrame>& frames);
std::vector<TruthFrame> parse_truth_stream(std::string_view text);
std::vector<TruthFrame> read_truth_stream(const std::filesystem::path& path);
void write_truth_stream(const std::vector<TruthFrame>& frames, const std::filesystem::path& path);

/// One solved (or failed) frame of a run.
struct FrameRecord {
  double t = 0.0;
  std::string method;
  std::string status;  // SolveStatus name, or "failed"
  std::string error;   // non-empty for failed frames
  int iterations = 0;
  double final_energy = 0.0;
  double final_gradient_norm = 0.0;
  double constraint_violation = 0.0;
  double wall_time = 0.0;  // s
  std::vector<double> energy_history;
};

FrameRecord make_frame_record(double t, const FrameResult& result);

struct TimingHistogram {
  double bucket_ms = 10.0;
  std::vector<int> counts;  // counts[i]: frames with wall time in [i, i+1) buckets
};
TimingHistogram timing_histogram(const std::vector<FrameRecord>& frames, double bucket_ms = 10.0);

struct RunReport {
  nlohmann::json config = nlohmann::json::object();
  std::vector<FrameRecord> frames;  // ordered by t
  std::optional<ErrorStats> errors;
  TimingHistogram timing;
};

/// Zeroes every wall-clock field so runs can be compared bit for bit.
RunReport without_timing(RunReport report);

std::string serialize_report(const RunReport& report);
RunReport parse_report(std::string_view text);
void write_report(const RunReport& report, const std::filesystem::path& path);
RunReport read_report(const std::filesystem::path& path);

/// Vertex dump of one deformed state: {"t":s,"positions":[[x,y,z],...]}.
std::string serialize_state(double t, const DeformState& state);

}  // namespace propsense::io
