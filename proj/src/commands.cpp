#include "propsense/commands.hpp"

#include "propsense/bench.hpp"
#include "propsense/gpis.hpp"
#include "propsense/io.hpp"
#include "propsense/proprio.hpp"
#include "propsense/solver.hpp"
#include "propsense/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numeric>
#include <ostream>

namespace propsense {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string& required(const std::string& value, const char* flag) {
  if (value.empty()) throw InputError(std::string("missing required flag ") + flag);
  return value;
}

SolverMethod method_of(const CommandOptions& opt) {
  if (opt.model == "sd") return SolverMethod::Newton;
  if (opt.model == "arap") return SolverMethod::Arap;
  throw InputError("--model must be sd or arap, got \"" + opt.model + "\"");
}

SolverConfig solver_config(const CommandOptions& opt) {
  SolverConfig cfg;
  cfg.omega = opt.omega;
  cfg.epsilon = opt.epsilon;
  cfg.max_iters = opt.max_iters;
  cfg.validate();
  return cfg;
}

void apply_threads(const CommandOptions& opt) {
  if (opt.threads < 1) throw InputError("--threads must be at least 1");
  set_num_threads(opt.threads);
}

json config_echo(const std::string& command, const CommandOptions& opt) {
  return {{"command", command},  {"mesh", opt.mesh},       {"poses", opt.poses},
          {"model", opt.model},  {"omega", opt.omega},     {"epsilon", opt.epsilon},
          {"max_iters", opt.max_iters}, {"seed", opt.seed}, {"threads", opt.threads}};
}

std::vector<RigidPose> poses_of(const std::vector<io::PoseFrame>& frames) {
  std::vector<RigidPose> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(f.pose);
  return out;
}

std::string frame_name(size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%05zu.json", i);
  return buf;
}

struct Tracked {
  std::vector<FrameResult> results;
  io::RunReport report;
};

Tracked run_tracking(const std::string& command, const CommandOptions& opt, const TetMesh& mesh,
                     const std::vector<io::PoseFrame>& frames) {
  if (frames.empty()) throw InputError("pose stream is empty");
  const SolverConfig cfg = solver_config(opt);
  const SolverMethod method = method_of(opt);
  const HandleConstraint handles = make_handle_constraint(mesh);
  Tracked t;
  t.results = track_sequence(mesh, EnergyModel{EnergyKind::SymmetricDirichlet, cfg.omega, cfg.volume_weighted},
                             handles, poses_of(frames), cfg, method);
  t.report.config = config_echo(command, opt);
  for (size_t i = 0; i < frames.size(); ++i) t.report.frames.push_back(io::make_frame_record(frames[i].t, t.results[i]));
  t.report.timing = io::timing_histogram(t.report.frames);
  return t;
}

int failed_frames(const std::vector<FrameResult>& results, std::ostream& log) {
  int failed = 0;
  for (size_t i = 0; i < results.size(); ++i) {
    if (results[i].report) continue;
    ++failed;
    log << "frame " << i << " failed: " << results[i].error << "\n";
  }
  return failed;
}

void log_timing(const std::vector<FrameResult>& results, std::ostream& log) {
  std::vector<double> ms;
  for (const auto& r : results)
    if (r.report) ms.push_back(1e3 * r.report->wall_time);
  if (!ms.empty()) log << "median frame time " << median(ms) << " ms over " << ms.size() << " frames\n";
}

}  // namespace

int cmd_deform(const CommandOptions& opt, std::ostream& log) {
  apply_threads(opt);
  const TetMesh mesh = io::read_mesh(required(opt.mesh, "--mesh"));
  const auto frames = io::read_pose_stream(required(opt.poses, "--poses"));
  Tracked t = run_tracking("deform", opt, mesh, frames);
  const fs::path out(opt.out);
  io::write_report(t.report, out / "report.json");
  if (opt.dump_states) {
    for (size_t i = 0; i < t.results.size(); ++i) {
      if (t.results[i].report) {
        io::write_text(out / "states" / frame_name(i), io::serialize_state(frames[i].t, t.results[i].report->final_state));
      }
    }
  }
  log << "deform: " << frames.size() << " frames, method " << opt.model << "\n";
  log_timing(t.results, log);
  return failed_frames(t.results, log) > 0 ? kExitNumerical : kExitOk;
}

int cmd_track(const CommandOptions& opt, std::ostream& log) {
  apply_threads(opt);
  const TetMesh mesh = io::read_mesh(required(opt.mesh, "--mesh"));
  const auto frames = io::read_pose_stream(required(opt.poses, "--poses"));
  const auto markers = io::read_markers(required(opt.markers, "--markers"));
  const auto truth = io::read_truth_stream(required(opt.truth, "--truth"));
  if (markers.empty()) throw InputError("marker file lists no markers");
  if (truth.size() != frames.size()) {
    throw InputError("truth stream has " + std::to_string(truth.size()) + " frames, pose stream " +
                     std::to_string(frames.size()));
  }
  for (size_t i = 0; i < truth.size(); ++i) {
    if (truth[i].t != frames[i].t) throw InputError("truth frame " + std::to_string(i) + " has a different t");
    if (truth[i].points.size() != markers.size()) {
      throw InputError("truth frame " + std::to_string(i) + " has " + std::to_string(truth[i].points.size()) +
                       " points for " + std::to_string(markers.size()) + " markers");
    }
  }
  // Calibration happens once, on the rest configuration of frame 0.
  std::vector<MarkerAttachment> attachments;
  for (const io::Marker& m : markers) attachments.push_back(calibrate_marker(mesh, m.rest_position));

  Tracked t = run_tracking("track", opt, mesh, frames);
  std::vector<Vec3> predicted, observed;
  std::vector<io::TruthFrame> predictions;
  for (size_t i = 0; i < frames.size(); ++i) {
    if (!t.results[i].report) continue;
    io::TruthFrame p{frames[i].t, predict_markers(t.results[i].report->final_state, mesh, attachments)};
    predicted.insert(predicted.end(), p.points.begin(), p.points.end());
    observed.insert(observed.end(), truth[i].points.begin(), truth[i].points.end());
    predictions.push_back(std::move(p));
  }
  const int failed = failed_frames(t.results, log);
  if (predicted.empty()) throw NumericalError("track: every frame failed");
  t.report.errors = error_stats(predicted, observed);
  const fs::path out(opt.out);
  io::write_report(t.report, out / "report.json");
  io::write_truth_stream(predictions, out / "predictions.jsonl");
  log << "track: " << markers.size() << " markers x " << predictions.size() << " frames, median error "
      << t.report.errors->median_norm << " mm, mean " << t.report.errors->mean_norm << " mm\n";
  log_timing(t.results, log);
  return failed > 0 ? kExitNumerical : kExitOk;
}

int cmd_gpis(const CommandOptions& opt, std::ostream& log) {
  apply_threads(opt);
  if (!(opt.resolution > 0.0)) throw InputError("--resolution must be positive");
  if (opt.patch_contacts < 1) throw InputError("--patch-contacts must be at least 1");
  const io::PointCloud cloud = io::read_cloud(required(opt.cloud, "--cloud"));
  if (cloud.points.empty()) throw InputError("contact cloud is empty");
  if (cloud.normals.size() != cloud.points.size()) throw InputError("contact cloud needs normals");
  if (!opt.region.empty() && opt.region.size() != 6) throw InputError("--region takes 6 numbers");
  const double margin = opt.margin > 0.0 ? opt.margin : std::max(3.0 * opt.offset, 4.0 * opt.resolution);

  // Contacts ordered along the exploration axis (z) and split into local
  // models; each owns the z range from its first contact to the next one's.
  std::vector<size_t> order(cloud.points.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return cloud.points[a].z() < cloud.points[b].z(); });
  const size_t per = static_cast<size_t>(opt.patch_contacts);
  const size_t count = (order.size() + per - 1) / per;
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<SurfacePatch> patches;
  json patch_log = json::array();
  for (size_t k = 0; k < count; ++k) {
    const size_t lo = k * order.size() / count, hi = (k + 1) * order.size() / count;
    std::vector<ContactPoint> contacts;
    Box box{cloud.points[order[lo]], cloud.points[order[lo]]};
    for (size_t i = lo; i < hi; ++i) {
      const size_t c = order[i];
      contacts.push_back({cloud.points[c], cloud.normals[c]});
      box.lo = box.lo.cwiseMin(cloud.points[c]);
      box.hi = box.hi.cwiseMax(cloud.points[c]);
    }
    box.lo.array() -= margin;
    box.hi.array() += margin;
    if (!opt.region.empty()) {
      box.lo = Vec3(opt.region[0], opt.region[1], opt.region[2]);
      box.hi = Vec3(opt.region[3], opt.region[4], opt.region[5]);
    }
    const TrainingSet train = generate_control_points(contacts, opt.offset);
    const GpisModel model = fit(train);
    SurfacePatch patch = extract_isosurface(model, box, opt.resolution);
    patch.interval_lo = k == 0 ? -inf : cloud.points[order[lo]].z();
    patch.interval_hi = k + 1 == count ? inf : cloud.points[order[hi]].z();
    patch_log.push_back({{"contacts", contacts.size()},
                         {"control_points", train.size()},
                         {"sigma_f2", model.hyper.sigma_f2},
                         {"length_scale", model.hyper.length_scale},
                         {"log_marginal_likelihood", model.log_marginal_likelihood},
                         {"jitter", model.jitter},
                         {"points", patch.points.size()}});
    patches.push_back(std::move(patch));
  }
  const std::vector<Vec3> surface = concatenate_patches(patches);
  const fs::path out(opt.out);
  io::write_cloud({surface, {}}, out / "surface.json");
  json report = {{"resolution_mm", opt.resolution}, {"offset_mm", opt.offset},
                 {"patches", patch_log},            {"points", surface.size()}};
  if (!opt.truth_cloud.empty()) {
    const io::PointCloud truth = io::read_cloud(opt.truth_cloud);
    if (!surface.empty() && !truth.points.empty()) {
      const double cd = chamfer_distance(surface, truth.points);
      report["chamfer_mm2"] = cd;
      log << "gpis: chamfer distance " << cd << " mm^2\n";
    }
  }
  io::write_text(out / "gpis_report.json", report.dump(1) + "\n");
  if (surface.empty()) {
    log << "warning: isosurface extraction produced no points\n";
  } else {
    log << "gpis: " << surface.size() << " surface points from " << count << " patches\n";
  }
  return kExitOk;
}

int cmd_bench(const CommandOptions& opt, std::ostream& log) {
  apply_threads(opt);
  BenchConfig cfg;
  cfg.solver = solver_config(opt);
  cfg.frames_per_motion = opt.frames;
  cfg.seed = opt.seed;
  if (cfg.frames_per_motion < 1) throw InputError("--frames must be at least 1");
  const std::vector<int> sizes = opt.sizes.empty() ? synth::bench_sizes() : opt.sizes;
  const fs::path dir(opt.fixtures);
  auto fixture = [&](int n) {
    const fs::path p = dir / ("finger_" + std::to_string(n) + ".json");
    if (!fs::exists(p)) throw InputError("missing fixture " + p.string() + " (run: propsense synth --kind fixtures)");
    return io::read_mesh(p);
  };

  BenchResult result;
  std::optional<TetMesh> sweep_mesh;
  for (int n : sizes) {
    const TetMesh mesh = fixture(n);
    for (BenchRow& row : time_methods(mesh, cfg)) {
      log << row.method << " " << row.elements << " elements: median " << 1e3 * row.median_frame_time
          << " ms, mean error " << row.mean_error << " mm\n";
      result.rows.push_back(std::move(row));
    }
    if (n == 1500 || !sweep_mesh) sweep_mesh = mesh;
  }
  if (sweep_mesh) {
    result.omega_sweep = omega_sweep(*sweep_mesh, synth::motion_pose(*sweep_mesh, synth::Motion::Oblique, 1.0), cfg);
    for (const OmegaRow& r : result.omega_sweep) {
      log << "omega " << r.omega << ": violation " << r.constraint_violation << " mm\n";
    }
  }
  const fs::path tiny = dir / "finger_100.json";
  if (fs::exists(tiny)) {
    result.oracle = oracle_comparison(io::read_mesh(tiny), cfg);
    log << "oracle reference (" << result.oracle->elements << " elements): newton " << result.oracle->newton_error
        << " mm, arap " << result.oracle->arap_error << " mm\n";
  }
  io::write_text(fs::path(opt.out) / "bench.json", to_json(result).dump(1) + "\n");
  return kExitOk;
}

int cmd_synth(const CommandOptions& opt, std::ostream& log) {
  apply_threads(opt);
  const fs::path out(opt.out);
  const std::string& kind = required(opt.kind, "--kind");
  auto motion_file = [&](const TetMesh& mesh, const std::string& motion) {
    const auto poses = motion == "twist_ramp" ? synth::twist_ramp(mesh, opt.degrees, opt.frames)
                                              : synth::motion_ramp(mesh, synth::parse_motion(motion), opt.frames);
    return synth::timed(poses);
  };
  auto truth_stream = [&](const TetMesh& mesh, const std::vector<io::PoseFrame>& frames,
                          const std::vector<io::Marker>& markers) {
    std::vector<MarkerAttachment> att;
    for (const auto& m : markers) att.push_back(calibrate_marker(mesh, m.rest_position));
    const SolverConfig cfg = solver_config(opt);
    const auto results = track_sequence(mesh, EnergyModel{}, make_handle_constraint(mesh), poses_of(frames), cfg,
                                        method_of(opt));
    std::vector<io::TruthFrame> truth;
    for (size_t i = 0; i < frames.size(); ++i) {
      if (!results[i].report) throw NumericalError("truth stream: frame " + std::to_string(i) + " failed");
      truth.push_back({frames[i].t, predict_markers(results[i].report->final_state, mesh, att)});
    }
    return synth::add_noise(std::move(truth), opt.noise, opt.seed);
  };

  if (kind == "sphere") {
    io::write_cloud(synth::sphere_cloud(opt.radius, opt.count), out / "sphere.json");
  } else if (kind == "plane") {
    io::write_cloud(synth::plane_cloud(opt.radius, 2.0), out / "plane.json");
  } else if (kind == "finger-mesh") {
    io::write_mesh(synth::make_finger(synth::finger_spec_for(opt.elements)),
                   out / ("finger_" + std::to_string(opt.elements) + ".json"));
  } else if (kind == "pose-ramp") {
    const TetMesh mesh = io::read_mesh(required(opt.mesh, "--mesh"));
    const std::string name = opt.motion == "twist" ? "twist_ramp" : opt.motion;
    io::write_pose_stream(motion_file(mesh, name), out / ("poses_" + name + ".jsonl"));
  } else if (kind == "markers") {
    const TetMesh mesh = io::read_mesh(required(opt.mesh, "--mesh"));
    io::write_markers(synth::random_markers(mesh, opt.count, opt.seed), out / "markers.json");
  } else if (kind == "truth-stream") {
    const TetMesh mesh = io::read_mesh(required(opt.mesh, "--mesh"));
    const auto frames = io::read_pose_stream(required(opt.poses, "--poses"));
    const auto markers = io::read_markers(required(opt.markers, "--markers"));
    io::write_truth_stream(truth_stream(mesh, frames, markers), out / "truth.jsonl");
  } else if (kind == "fixtures") {
    for (int n : {100, 1000, 1500, 3000, 6000, 12000}) {
      io::write_mesh(synth::make_finger(synth::finger_spec_for(n)), out / ("finger_" + std::to_string(n) + ".json"));
    }
    const TetMesh mesh = synth::make_finger(synth::finger_spec_for(1500));
    for (synth::Motion m : synth::all_motions()) {
      io::write_pose_stream(synth::timed(synth::motion_ramp(mesh, m, opt.frames)),
                            out / (std::string("poses_") + synth::to_string(m) + ".jsonl"));
    }
    const auto twist = synth::timed(synth::twist_ramp(mesh, 10.0, 100));
    io::write_pose_stream(twist, out / "poses_twist_ramp.jsonl");
    const auto markers = synth::random_markers(mesh, 10, opt.seed);
    io::write_markers(markers, out / "markers.json");
    io::write_truth_stream(truth_stream(mesh, twist, markers), out / "truth_twist_ramp.jsonl");
    io::write_cloud(synth::sphere_cloud(40.0, 200), out / "sphere.json");
    io::write_cloud(synth::plane_cloud(20.0, 2.0), out / "plane.json");
  } else {
    throw InputError("unknown --kind \"" + kind +
                     "\" (sphere, plane, finger-mesh, pose-ramp, markers, truth-stream, fixtures)");
  }
  log << "synth: wrote " << kind << " under " << out.string() << "\n";
  return kExitOk;
}

int run_command(const std::string& name, const CommandOptions& opt, std::ostream& log, std::ostream& err) {
  try {
    if (name == "deform") return cmd_deform(opt, log);
    if (name == "track") return cmd_track(opt, log);
    if (name == "gpis") return cmd_gpis(opt, log);
    if (name == "bench") return cmd_bench(opt, log);
    if (name == "synth") return cmd_synth(opt, log);
    err << "error: unknown command \"" << name << "\"\n";
    return kExitInput;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace propsense
