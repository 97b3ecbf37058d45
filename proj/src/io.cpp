#include "propsense/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace propsense::io {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw InputError(what); }

json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    fail(std::string("malformed JSON: ") + e.what());
  }
}

const json& member(const json& obj, const char* key) {
  if (!obj.is_object()) fail("expected a JSON object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(std::string("missing field \"") + key + "\"");
  return *it;
}

const json* optional_member(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

const json& array_of(const json& j, const char* what) {
  if (!j.is_array()) fail(std::string(what) + " must be an array");
  return j;
}

double real(const json& j, const char* what) {
  if (!j.is_number()) fail(std::string(what) + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(std::string(what) + " is not finite");
  return v;
}

// Report fields may legitimately hold inf/nan; those travel as strings.
json real_or_special(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double parse_real_or_special(const json& j, const char* what) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    fail(std::string(what) + ": unknown numeric token \"" + s + "\"");
  }
  if (!j.is_number()) fail(std::string(what) + " must be a number");
  return j.get<double>();
}

int integer(const json& j, const char* what) {
  if (j.is_number_unsigned()) {
    const auto v = j.get<std::uint64_t>();
    if (v > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) fail(std::string(what) + " out of range");
    return static_cast<int>(v);
  }
  if (j.is_number_integer()) {
    const auto v = j.get<std::int64_t>();
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      fail(std::string(what) + " out of range");
    }
    return static_cast<int>(v);
  }
  fail(std::string(what) + " must be an integer");
}

std::string string_of(const json& j, const char* what) {
  if (!j.is_string()) fail(std::string(what) + " must be a string");
  return j.get<std::string>();
}

Vec3 vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) fail(std::string(what) + " must be [x,y,z]");
  return {real(j[0], what), real(j[1], what), real(j[2], what)};
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

std::vector<Vec3> vec3_list(const json& j, const char* what) {
  array_of(j, what);
  std::vector<Vec3> out;
  out.reserve(j.size());
  for (const json& e : j) out.push_back(vec3(e, what));
  return out;
}

json vec3_list_json(const std::vector<Vec3>& pts) {
  json arr = json::array();
  for (const Vec3& p : pts) arr.push_back(vec3_json(p));
  return arr;
}

std::vector<int> index_list(const json* j, const char* what) {
  std::vector<int> out;
  if (!j) return out;
  array_of(*j, what);
  out.reserve(j->size());
  for (const json& e : *j) out.push_back(integer(e, what));
  return out;
}

std::vector<double> real_list(const json& j, const char* what, bool allow_special) {
  array_of(j, what);
  std::vector<double> out;
  out.reserve(j.size());
  for (const json& e : j) out.push_back(allow_special ? parse_real_or_special(e, what) : real(e, what));
  return out;
}

json real_list_json(const std::vector<double>& v) {
  json arr = json::array();
  for (double x : v) arr.push_back(real_or_special(x));
  return arr;
}

void check_units(const json& doc) {
  if (const json* u = optional_member(doc, "units")) {
    if (!u->is_string() || u->get<std::string>() != "mm") fail("units must be \"mm\"");
  }
}

// Runs `fn` on every non-blank line, prefixing errors with the line number.
template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  size_t pos = 0;
  int line = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view row = text.substr(pos, end - pos);
    pos = end + 1;
    ++line;
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    if (row.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      json doc;
      try {
        doc = json::parse(row.begin(), row.end());
      } catch (const json::exception& e) {
        fail(std::string("malformed JSON: ") + e.what());
      }
      if (!doc.is_object()) fail("expected a JSON object");
      fn(doc);
    } catch (const InputError& e) {
      fail("line " + std::to_string(line) + ": " + e.what());
    }
  }
}

template <class T, class Parse>
T with_path(const std::filesystem::path& path, Parse&& parse) {
  const std::string text = read_text(path);
  try {
    return parse(text);
  } catch (const InputError& e) {
    fail(path.string() + ": " + e.what());
  }
}

void check_time(double t, double prev, bool first) {
  if (!first && !(t > prev)) fail("time " + json(t).dump() + " does not increase");
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail("error reading " + path.string());
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) fail("error writing " + path.string());
}

// ---- mesh -------------------------------------------------------------------

std::string serialize_mesh(const TetMesh& mesh) {
  json doc;
  doc["units"] = "mm";
  json verts = json::array();
  for (int i = 0; i < mesh.num_vertices(); ++i) verts.push_back(vec3_json(mesh.vertex(i)));
  doc["vertices"] = std::move(verts);
  json tets = json::array();
  for (const Tet& t : mesh.tets) tets.push_back(json::array({t[0], t[1], t[2], t[3]}));
  doc["tets"] = std::move(tets);
  doc["handle_indices"] = mesh.handle_indices;
  doc["contact_indices"] = mesh.contact_indices;
  if (!mesh.anchor_indices.empty()) doc["anchor_indices"] = mesh.anchor_indices;
  return doc.dump() + "\n";
}

TetMesh parse_mesh(std::string_view text) {
  const json doc = parse_document(text);
  if (!doc.is_object()) fail("mesh: expected a JSON object");
  check_units(doc);
  const std::vector<Vec3> pts = vec3_list(member(doc, "vertices"), "vertex");
  Eigen::Matrix3Xd vertices(3, static_cast<Eigen::Index>(pts.size()));
  for (size_t i = 0; i < pts.size(); ++i) vertices.col(static_cast<Eigen::Index>(i)) = pts[i];
  const json& tj = array_of(member(doc, "tets"), "tets");
  std::vector<Tet> tets;
  tets.reserve(tj.size());
  for (const json& e : tj) {
    if (!e.is_array() || e.size() != 4) fail("tet must have 4 indices");
    tets.push_back({integer(e[0], "tet index"), integer(e[1], "tet index"), integer(e[2], "tet index"),
                    integer(e[3], "tet index")});
  }
  return build_mesh(std::move(vertices), std::move(tets),
                    index_list(optional_member(doc, "handle_indices"), "handle index"),
                    index_list(optional_member(doc, "contact_indices"), "contact index"),
                    index_list(optional_member(doc, "anchor_indices"), "anchor index"));
}

TetMesh read_mesh(const std::filesystem::path& path) {
  return with_path<TetMesh>(path, [](const std::string& t) { return parse_mesh(t); });
}

void write_mesh(const TetMesh& mesh, const std::filesystem::path& path) {
  write_text(path, serialize_mesh(mesh));
}

// ---- point cloud ------------------------------------------------------------

std::string serialize_cloud(const PointCloud& cloud) {
  if (!cloud.normals.empty() && cloud.normals.size() != cloud.points.size()) {
    fail("cloud: normals are not parallel to points");
  }
  json doc;
  doc["units"] = "mm";
  doc["points"] = vec3_list_json(cloud.points);
  if (!cloud.normals.empty()) doc["normals"] = vec3_list_json(cloud.normals);
  return doc.dump() + "\n";
}

PointCloud parse_cloud(std::string_view text) {
  const json doc = parse_document(text);
  if (!doc.is_object()) fail("cloud: expected a JSON object");
  check_units(doc);
  PointCloud cloud;
  cloud.points = vec3_list(member(doc, "points"), "point");
  if (const json* n = optional_member(doc, "normals")) {
    cloud.normals = vec3_list(*n, "normal");
    if (cloud.normals.size() != cloud.points.size()) fail("cloud: normals are not parallel to points");
  }
  return cloud;
}

PointCloud read_cloud(const std::filesystem::path& path) {
  return with_path<PointCloud>(path, [](const std::string& t) { return parse_cloud(t); });
}

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
  write_text(path, serialize_cloud(cloud));
}

// ---- pose stream ------------------------------------------------------------

std::string serialize_pose_stream(const std::vector<PoseFrame>& frames) {
  std::string out;
  for (const PoseFrame& f : frames) {
    const Eigen::Quaterniond& q = f.pose.rotation;
    json line;
    line["t"] = f.t;
    line["p"] = vec3_json(f.pose.translation);
    line["q"] = json::array({q.w(), q.x(), q.y(), q.z()});
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::vector<PoseFrame> parse_pose_stream(std::string_view text) {
  std::vector<PoseFrame> frames;
  for_each_line(text, [&](const json& doc) {
    PoseFrame f;
    f.t = real(member(doc, "t"), "t");
    check_time(f.t, frames.empty() ? 0.0 : frames.back().t, frames.empty());
    f.pose.translation = vec3(member(doc, "p"), "p");
    const json& qj = member(doc, "q");
    if (!qj.is_array() || qj.size() != 4) fail("q must be [w,x,y,z]");
    Eigen::Quaterniond q(real(qj[0], "q"), real(qj[1], "q"), real(qj[2], "q"), real(qj[3], "q"));
    const double norm = q.norm();
    if (!(std::abs(norm - 1.0) <= 1e-6)) fail("quaternion norm " + json(norm).dump() + " is not unit");
    // Already-unit quaternions are kept bit for bit.
    if (std::abs(norm - 1.0) > 4.0 * std::numeric_limits<double>::epsilon()) q.coeffs() /= norm;
    f.pose.rotation = q;
    frames.push_back(f);
  });
  return frames;
}

std::vector<PoseFrame> read_pose_stream(const std::filesystem::path& path) {
  return with_path<std::vector<PoseFrame>>(path, [](const std::string& t) { return parse_pose_stream(t); });
}

void write_pose_stream(const std::vector<PoseFrame>& frames, const std::filesystem::path& path) {
  write_text(path, serialize_pose_stream(frames));
}

// ---- markers ----------------------------------------------------------------

std::string serialize_markers(const std::vector<Marker>& markers) {
  json arr = json::array();
  for (const Marker& m : markers) arr.push_back({{"id", m.id}, {"rest_position", vec3_json(m.rest_position)}});
  json doc;
  doc["markers"] = std::move(arr);
  return doc.dump() + "\n";
}

std::vector<Marker> parse_markers(std::string_view text) {
  const json doc = parse_document(text);
  if (!doc.is_object()) fail("markers: expected a JSON object");
  const json& arr = array_of(member(doc, "markers"), "markers");
  std::vector<Marker> out;
  std::set<std::string> seen;
  for (const json& e : arr) {
    Marker m;
    m.id = string_of(member(e, "id"), "marker id");
    if (m.id.empty()) fail("marker id is empty");
    if (!seen.insert(m.id).second) fail("duplicate marker id \"" + m.id + "\"");
    m.rest_position = vec3(member(e, "rest_position"), "rest_position");
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<Marker> read_markers(const std::filesystem::path& path) {
  return with_path<std::vector<Marker>>(path, [](const std::string& t) { return parse_markers(t); });
}

void write_markers(const std::vector<Marker>& markers, const std::filesystem::path& path) {
  write_text(path, serialize_markers(markers));
}

// ---- truth stream -----------------------------------------------------------

std::string serialize_truth_stream(const std::vector<TruthFrame>& frames) {
  std::string out;
  for (const TruthFrame& f : frames) {
    json line;
    line["t"] = f.t;
    line["points"] = vec3_list_json(f.points);
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::vector<TruthFrame> parse_truth_stream(std::string_view text) {
  std::vector<TruthFrame> frames;
  for_each_line(text, [&](const json& doc) {
    TruthFrame f;
    f.t = real(member(doc, "t"), "t");
    check_time(f.t, frames.empty() ? 0.0 : frames.back().t, frames.empty());
    f.points = vec3_list(member(doc, "points"), "point");
    frames.push_back(std::move(f));
  });
  return frames;
}

std::vector<TruthFrame> read_truth_stream(const std::filesystem::path& path) {
  return with_path<std::vector<TruthFrame>>(path, [](const std::string& t) { return parse_truth_stream(t); });
}

void write_truth_stream(const std::vector<TruthFrame>& frames, const std::filesystem::path& path) {
  write_text(path, serialize_truth_stream(frames));
}

// ---- run report -------------------------------------------------------------

FrameRecord make_frame_record(double t, const FrameResult& result) {
  FrameRecord r;
  r.t = t;
  if (!result.report) {
    r.status = "failed";
    r.error = result.error.empty() ? "unknown failure" : result.error;
    return r;
  }
  const SolveReport& s = *result.report;
  r.method = s.method;
  r.status = to_string(s.status);
  r.iterations = s.iterations;
  r.final_energy = s.final_energy;
  r.final_gradient_norm = s.final_gradient_norm;
  r.constraint_violation = s.constraint_violation;
  r.wall_time = s.wall_time;
  r.energy_history = s.energy_history;
  return r;
}

TimingHistogram timing_histogram(const std::vector<FrameRecord>& frames, double bucket_ms) {
  if (!(bucket_ms > 0.0)) fail("timing histogram: bucket width must be positive");
  constexpr int kMaxBuckets = 10000;
  TimingHistogram h;
  h.bucket_ms = bucket_ms;
  for (const FrameRecord& f : frames) {
    const double ms = std::max(0.0, f.wall_time * 1e3);
    const int b = static_cast<int>(std::min<double>(kMaxBuckets - 1, std::floor(ms / bucket_ms)));
    if (static_cast<int>(h.counts.size()) <= b) h.counts.resize(static_cast<size_t>(b) + 1, 0);
    ++h.counts[static_cast<size_t>(b)];
  }
  return h;
}

RunReport without_timing(RunReport report) {
  for (FrameRecord& f : report.frames) f.wall_time = 0.0;
  report.timing = timing_histogram(report.frames, report.timing.bucket_ms > 0.0 ? report.timing.bucket_ms : 10.0);
  return report;
}

std::string serialize_report(const RunReport& report) {
  json doc;
  doc["config"] = report.config;
  json frames = json::array();
  for (size_t i = 0; i < report.frames.size(); ++i) {
    const FrameRecord& f = report.frames[i];
    if (i > 0 && !(f.t >= report.frames[i - 1].t)) fail("report: frames are not ordered by t");
    frames.push_back({{"t", real_or_special(f.t)},
                      {"method", f.method},
                      {"status", f.status},
                      {"error", f.error},
                      {"iterations", f.iterations},
                      {"final_energy", real_or_special(f.final_energy)},
                      {"final_gradient_norm", real_or_special(f.final_gradient_norm)},
                      {"constraint_violation", real_or_special(f.constraint_violation)},
                      {"wall_time", real_or_special(f.wall_time)},
                      {"energy_history", real_list_json(f.energy_history)}});
  }
  doc["frames"] = std::move(frames);
  if (report.errors) {
    const ErrorStats& e = *report.errors;
    doc["errors"] = {{"per_axis", json::array({real_list_json(e.per_axis[0]), real_list_json(e.per_axis[1]),
                                               real_list_json(e.per_axis[2])})},
                     {"norms", real_list_json(e.norms)},
                     {"median_norm", real_or_special(e.median_norm)},
                     {"mean_norm", real_or_special(e.mean_norm)}};
  } else {
    doc["errors"] = nullptr;
  }
  doc["timing"] = {{"bucket_ms", real_or_special(report.timing.bucket_ms)}, {"counts", report.timing.counts}};
  return doc.dump(1) + "\n";
}

RunReport parse_report(std::string_view text) {
  const json doc = parse_document(text);
  if (!doc.is_object()) fail("report: expected a JSON object");
  RunReport r;
  r.config = member(doc, "config");
  if (!r.config.is_object()) fail("report: config must be an object");
  for (const json& fj : array_of(member(doc, "frames"), "frames")) {
    FrameRecord f;
    f.t = parse_real_or_special(member(fj, "t"), "t");
    f.method = string_of(member(fj, "method"), "method");
    f.status = string_of(member(fj, "status"), "status");
    f.error = string_of(member(fj, "error"), "error");
    f.iterations = integer(member(fj, "iterations"), "iterations");
    f.final_energy = parse_real_or_special(member(fj, "final_energy"), "final_energy");
    f.final_gradient_norm = parse_real_or_special(member(fj, "final_gradient_norm"), "final_gradient_norm");
    f.constraint_violation = parse_real_or_special(member(fj, "constraint_violation"), "constraint_violation");
    f.wall_time = parse_real_or_special(member(fj, "wall_time"), "wall_time");
    f.energy_history = real_list(member(fj, "energy_history"), "energy_history", true);
    if (!r.frames.empty() && !(f.t >= r.frames.back().t)) fail("report: frames are not ordered by t");
    r.frames.push_back(std::move(f));
  }
  if (const json* ej = optional_member(doc, "errors")) {
    ErrorStats e;
    const json& axes = array_of(member(*ej, "per_axis"), "per_axis");
    if (axes.size() != 3) fail("report: per_axis must hold 3 arrays");
    for (int k = 0; k < 3; ++k) e.per_axis[k] = real_list(axes[static_cast<size_t>(k)], "per_axis", true);
    e.norms = real_list(member(*ej, "norms"), "norms", true);
    e.median_norm = parse_real_or_special(member(*ej, "median_norm"), "median_norm");
    e.mean_norm = parse_real_or_special(member(*ej, "mean_norm"), "mean_norm");
    r.errors = std::move(e);
  }
  const json& tj = member(doc, "timing");
  r.timing.bucket_ms = parse_real_or_special(member(tj, "bucket_ms"), "bucket_ms");
  for (const json& c : array_of(member(tj, "counts"), "counts")) r.timing.counts.push_back(integer(c, "count"));
  return r;
}

void write_report(const RunReport& report, const std::filesystem::path& path) {
  write_text(path, serialize_report(report));
}

RunReport read_report(const std::filesystem::path& path) {
  return with_path<RunReport>(path, [](const std::string& t) { return parse_report(t); });
}

std::string serialize_state(double t, const DeformState& state) {
  json doc;
  doc["t"] = t;
  json arr = json::array();
  for (int i = 0; i < state.size(); ++i) arr.push_back(vec3_json(state.positions.col(i)));
  doc["positions"] = std::move(arr);
  return doc.dump() + "\n";
}

}  // namespace propsense::io
