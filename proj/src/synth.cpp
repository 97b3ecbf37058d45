#include "propsense/synth.hpp"

#include <cmath>
#include <numbers>

namespace propsense::synth {

FingerSpec finger_spec_for(int nominal_elements) {
  FingerSpec s;
  switch (nominal_elements) {
    case 100: s.nx = 2, s.ny = 2, s.nz = 4; break;       // 96
    case 1000: s.nx = 3, s.ny = 3, s.nz = 19; break;     // 1026
    case 1500: s.nx = 4, s.ny = 4, s.nz = 16; break;     // 1536
    case 3000: s.nx = 5, s.ny = 5, s.nz = 20; break;     // 3000
    case 6000: s.nx = 6, s.ny = 6, s.nz = 28; break;     // 6048
    case 12000: s.nx = 8, s.ny = 8, s.nz = 31; break;    // 11904
    default: throw InputError("no finger resolution for " + std::to_string(nominal_elements) + " elements");
  }
  return s;
}

std::vector<int> bench_sizes() { return {1000, 1500, 3000, 6000, 12000}; }

TetMesh make_finger(const FingerSpec& spec) {
  if (spec.nx < 1 || spec.ny < 1 || spec.nz < 2) throw InputError("finger: need nx, ny >= 1 and nz >= 2");
  if (!(spec.length > 0 && spec.base_width > 0 && spec.tip_width > 0 && spec.base_depth > 0 && spec.tip_depth > 0)) {
    throw InputError("finger: dimensions must be positive");
  }
  const int nx = spec.nx, ny = spec.ny, nz = spec.nz;
  auto id = [&](int i, int j, int k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
  Eigen::Matrix3Xd v(3, (nx + 1) * (ny + 1) * (nz + 1));
  for (int k = 0; k <= nz; ++k) {
    const double s = static_cast<double>(k) / nz;
    const double w = spec.base_width + s * (spec.tip_width - spec.base_width);
    const double d = spec.base_depth + s * (spec.tip_depth - spec.base_depth);
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i)
        v.col(id(i, j, k)) = Vec3((static_cast<double>(i) / nx - 0.5) * w,
                                  (static_cast<double>(j) / ny - 0.5) * d, s * spec.length);
  }

  // Kuhn split along the (0,0,0)-(1,1,1) diagonal of every hex; the same
  // diagonal everywhere keeps neighbouring hexes conforming.
  constexpr int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  std::vector<Tet> tets;
  tets.reserve(static_cast<size_t>(6) * nx * ny * nz);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        for (const auto& p : perms) {
          int c[3] = {0, 0, 0};
          Tet t;
          t[0] = id(i, j, k);
          for (int step = 0; step < 3; ++step) {
            c[p[step]] = 1;
            t[step + 1] = id(i + c[0], j + c[1], k + c[2]);
          }
          tets.push_back(t);
        }

  const int kh = nz / 2;
  std::vector<int> anchors, handles, contacts;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      anchors.push_back(id(i, j, 0));
      handles.push_back(id(i, j, kh));
    }
  for (int k = kh + 1; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j) contacts.push_back(id(nx, j, k));
  return build_mesh(std::move(v), std::move(tets), std::move(handles), std::move(contacts), std::move(anchors));
}

std::vector<Motion> all_motions() {
  return {Motion::BendX, Motion::BendY, Motion::Oblique, Motion::Twist, Motion::Push, Motion::Shear};
}

const char* to_string(Motion m) {
  switch (m) {
    case Motion::BendX: return "bend_x";
    case Motion::BendY: return "bend_y";
    case Motion::Oblique: return "oblique";
    case Motion::Twist: return "twist";
    case Motion::Push: return "push";
    case Motion::Shear: return "shear";
  }
  return "unknown";
}

Motion parse_motion(const std::string& name) {
  for (Motion m : all_motions())
    if (name == to_string(m)) return m;
  throw InputError("unknown motion \"" + name + "\"");
}

namespace {

Vec3 handle_centroid(const TetMesh& mesh) {
  if (mesh.handle_indices.empty()) throw InputError("mesh has no handle nodes");
  Vec3 c = Vec3::Zero();
  for (int i : mesh.handle_indices) c += mesh.vertex(i);
  return c / static_cast<double>(mesh.handle_indices.size());
}

constexpr double deg(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

RigidPose motion_pose(const TetMesh& mesh, Motion motion, double s) {
  const Vec3 c = handle_centroid(mesh);
  switch (motion) {
    case Motion::BendX: return RigidPose::about(Vec3::UnitY(), s * deg(12.0), c, s * Vec3(5.0, 0.0, 0.0));
    case Motion::BendY: return RigidPose::about(Vec3::UnitX(), -s * deg(12.0), c, s * Vec3(0.0, 5.0, 0.0));
    case Motion::Oblique:
      return RigidPose::about(Vec3(1.0, -1.0, 0.0), s * deg(10.0), c, s * Vec3(3.5, 3.5, 0.0));
    case Motion::Twist: return RigidPose::about(Vec3::UnitZ(), s * deg(15.0), c);
    case Motion::Push: return RigidPose::about(Vec3::UnitZ(), 0.0, c, s * Vec3(0.0, 0.0, -4.0));
    case Motion::Shear: return RigidPose::about(Vec3::UnitZ(), 0.0, c, s * Vec3(4.0, 2.5, 0.0));
  }
  return RigidPose::identity();
}

std::vector<RigidPose> motion_ramp(const TetMesh& mesh, Motion motion, int frames) {
  if (frames < 1) throw InputError("pose ramp: need at least one frame");
  std::vector<RigidPose> out;
  out.reserve(frames);
  for (int f = 1; f <= frames; ++f) out.push_back(motion_pose(mesh, motion, static_cast<double>(f) / frames));
  return out;
}

std::vector<RigidPose> twist_ramp(const TetMesh& mesh, double degrees, int frames) {
  if (frames < 1) throw InputError("pose ramp: need at least one frame");
  const Vec3 c = handle_centroid(mesh);
  std::vector<RigidPose> out;
  out.reserve(frames);
  for (int f = 0; f < frames; ++f) {
    const double s = frames == 1 ? 1.0 : static_cast<double>(f) / (frames - 1);
    out.push_back(RigidPose::about(Vec3::UnitZ(), s * deg(degrees), c));
  }
  return out;
}

std::vector<io::PoseFrame> timed(const std::vector<RigidPose>& poses, double fps) {
  std::vector<io::PoseFrame> out;
  out.reserve(poses.size());
  for (size_t i = 0; i < poses.size(); ++i) out.push_back({static_cast<double>(i) / fps, poses[i]});
  return out;
}

RigidPose random_pose(std::mt19937_64& rng, const Vec3& center, double max_angle, double max_shift) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec3 axis;
  do axis = Vec3(gauss(rng), gauss(rng), gauss(rng));
  while (axis.norm() < 1e-6);
  Vec3 dir;
  do dir = Vec3(gauss(rng), gauss(rng), gauss(rng));
  while (dir.norm() < 1e-6);
  const double angle = max_angle * unit(rng);
  const double shift = max_shift * unit(rng);
  return RigidPose::about(axis, angle, center, shift * dir.normalized());
}

io::PointCloud sphere_cloud(double radius, int count, const Vec3& center) {
  if (!(radius > 0.0) || count < 1) throw InputError("sphere: need radius > 0 and count >= 1");
  io::PointCloud cloud;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    const Vec3 n(r * std::cos(phi), r * std::sin(phi), z);
    cloud.points.push_back(center + radius * n);
    cloud.normals.push_back(n);
  }
  return cloud;
}

io::PointCloud sphere_patch(double radius, const Vec3& axis, double half_width, double spacing) {
  if (!(radius > 0.0 && half_width > 0.0 && spacing > 0.0) || !(axis.norm() > 0.0)) {
    throw InputError("sphere patch: invalid parameters");
  }
  const Vec3 a = axis.normalized();
  const Vec3 u = a.unitOrthogonal();
  const Vec3 w = a.cross(u);
  const int steps = static_cast<int>(std::floor(half_width / spacing + 1e-9));
  io::PointCloud cloud;
  for (int i = -steps; i <= steps; ++i)
    for (int j = -steps; j <= steps; ++j) {
      const Vec3 n = (radius * a + i * spacing * u + j * spacing * w).normalized();
      cloud.points.push_back(radius * n);
      cloud.normals.push_back(n);
    }
  return cloud;
}

io::PointCloud plane_cloud(double half_width, double spacing) {
  if (!(half_width > 0.0 && spacing > 0.0)) throw InputError("plane: invalid parameters");
  const int steps = static_cast<int>(std::floor(half_width / spacing + 1e-9));
  io::PointCloud cloud;
  for (int i = -steps; i <= steps; ++i)
    for (int j = -steps; j <= steps; ++j) {
      cloud.points.emplace_back(i * spacing, j * spacing, 0.0);
      cloud.normals.push_back(Vec3::UnitZ());
    }
  return cloud;
}

std::vector<io::Marker> random_markers(const TetMesh& mesh, int count, std::uint64_t seed) {
  if (count < 1) throw InputError("markers: need at least one");
  std::mt19937_64 rng(seed);
  const Vec3 lo = mesh.vertices.rowwise().minCoeff();
  const Vec3 hi = mesh.vertices.rowwise().maxCoeff();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<io::Marker> out;
  for (int i = 0; i < count; ++i) {
    const Vec3 p(lo.x() + unit(rng) * (hi.x() - lo.x()), lo.y() + unit(rng) * (hi.y() - lo.y()),
                 lo.z() + unit(rng) * (hi.z() - lo.z()));
    out.push_back({"m" + std::to_string(i + 1), p});
  }
  return out;
}

std::vector<io::TruthFrame> add_noise(std::vector<io::TruthFrame> frames, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InputError("noise: sigma must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  for (auto& f : frames)
    for (Vec3& p : f.points)
      for (int k = 0; k < 3; ++k) p(k) += sigma > 0.0 ? gauss(rng) : 0.0;
  return frames;
}

}  // namespace propsense::synth
