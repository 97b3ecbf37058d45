#pragma once

#include "propsense/io.hpp"
#include "propsense/mesh.hpp"
#include "propsense/pose.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

// Deterministic fixture generators: finger meshes, pose ramps, contact
// clouds and marker truth streams.
namespace propsense::synth {

/// Tapered box finger split into nx*ny*nz hexes, 6 tets each. Vertex sets:
/// anchors are the base layer (z = 0), handles the cross-section layer at
/// nz/2, contacts the +x face above the handle layer.
struct FingerSpec {
  int nx = 4, ny = 4, nz = 16;
  double length = 93.0;
  double base_width = 20.0, tip_width = 14.0;  // along x
  double base_depth = 16.0, tip_depth = 12.0;  // along y
};

/// Resolution for a nominal element count: 100 (96 tets), 1000, 1500, 3000,
/// 6000 or 12000. Throws InputError for anything else.
FingerSpec finger_spec_for(int nominal_elements);
/// Nominal counts of the benchmark family, smallest first.
std::vector<int> bench_sizes();

TetMesh make_finger(const FingerSpec& spec);

enum class Motion { BendX, BendY, Oblique, Twist, Push, Shear };
std::vector<Motion> all_motions();
const char* to_string(Motion m);
Motion parse_motion(const std::string& name);

/// Pose of `motion` at full amplitude scaled by `s` in [0, 1], about the rest
/// centroid of the mesh's handle nodes.
RigidPose motion_pose(const TetMesh& mesh, Motion motion, double s);
/// `frames` poses ramping from s = 1/frames to s = 1.
std::vector<RigidPose> motion_ramp(const TetMesh& mesh, Motion motion, int frames);
/// Twist about the handle centroid's z axis, 0 -> `degrees` over `frames`.
std::vector<RigidPose> twist_ramp(const TetMesh& mesh, double degrees, int frames);
/// Pose frames at `fps` starting from t = 0.
std::vector<io::PoseFrame> timed(const std::vector<RigidPose>& poses, double fps = 30.0);

/// Random rotation (uniform axis, angle up to `max_angle` rad) about `center`
/// followed by a random shift of length up to `max_shift` mm.
RigidPose random_pose(std::mt19937_64& rng, const Vec3& center, double max_angle, double max_shift);

/// Fibonacci-lattice points on a sphere with outward normals.
io::PointCloud sphere_cloud(double radius, int count, const Vec3& center = Vec3::Zero());
/// Grid of points on a spherical cap patch around direction `axis`: the
/// tangent-plane square of half width `half_width` mm sampled at `spacing`,
/// projected onto the sphere.
io::PointCloud sphere_patch(double radius, const Vec3& axis, double half_width, double spacing);
/// Grid on the plane z = 0 with normals +z, covering [-half, half]^2.
io::PointCloud plane_cloud(double half_width, double spacing);

/// `count` marker rest positions inside the finger's bounding box,
/// deterministic in `seed`.
std::vector<io::Marker> random_markers(const TetMesh& mesh, int count, std::uint64_t seed);

/// Adds i.i.d. N(0, sigma^2) noise to every coordinate.
std::vector<io::TruthFrame> add_noise(std::vector<io::TruthFrame> frames, double sigma, std::uint64_t seed);

}  // namespace propsense::synth
