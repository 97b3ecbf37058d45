#include "propsense/commands.hpp"

#include "CLI11.hpp"

#include <iostream>

using propsense::CommandOptions;

namespace {

void solver_flags(CLI::App* app, CommandOptions& o) {
  app->add_option("--mesh", o.mesh, "tetrahedral mesh (json)")->required();
  app->add_option("--poses", o.poses, "pose stream (jsonl)")->required();
  app->add_option("--model", o.model, "sd or arap")->check(CLI::IsMember({"sd", "arap"}));
  app->add_option("--omega", o.omega, "handle penalty weight");
  app->add_option("--epsilon", o.epsilon, "relative convergence tolerance");
  app->add_option("--max-iters", o.max_iters, "iteration cap per frame");
}

void common_flags(CLI::App* app, CommandOptions& o) {
  app->add_option("--seed", o.seed, "random seed");
  app->add_option("--threads", o.threads, "worker threads");
  app->add_option("--out", o.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"propsense: soft finger state estimation and tactile reconstruction"};
  app.require_subcommand(1);
  CommandOptions o;

  auto* deform = app.add_subcommand("deform", "solve the deformation for every frame of a pose stream");
  solver_flags(deform, o);
  common_flags(deform, o);
  deform->add_flag("--dump-states", o.dump_states, "write per-frame node positions");

  auto* track = app.add_subcommand("track", "predict marker positions and compare with a truth stream");
  solver_flags(track, o);
  common_flags(track, o);
  track->add_option("--markers", o.markers, "marker rest positions (json)")->required();
  track->add_option("--truth", o.truth, "observed marker stream (jsonl)")->required();

  auto* gpis = app.add_subcommand("gpis", "reconstruct a surface from contact points");
  common_flags(gpis, o);
  gpis->add_option("--cloud", o.cloud, "contact points with normals (json)")->required();
  gpis->add_option("--truth-cloud", o.truth_cloud, "reference surface samples for chamfer distance");
  gpis->add_option("--resolution", o.resolution, "voxel size (mm)");
  gpis->add_option("--offset", o.offset, "control point offset along normals (mm)");
  gpis->add_option("--margin", o.margin, "region padding around each patch (mm), 0 for automatic");
  gpis->add_option("--patch-contacts", o.patch_contacts, "contacts per local model");
  gpis->add_option("--region", o.region, "extraction box x0 y0 z0 x1 y1 z1")->expected(6);

  auto* bench = app.add_subcommand("bench", "timing, accuracy and penalty sweeps over the fixture meshes");
  common_flags(bench, o);
  bench->add_option("--fixtures", o.fixtures, "directory with finger_<N>.json");
  bench->add_option("--sizes", o.sizes, "nominal element counts")->delimiter(',');
  bench->add_option("--frames", o.frames, "frames per motion ramp");
  bench->add_option("--omega", o.omega, "handle penalty weight");
  bench->add_option("--epsilon", o.epsilon, "relative convergence tolerance");
  bench->add_option("--max-iters", o.max_iters, "iteration cap per frame");

  auto* synth = app.add_subcommand("synth", "generate synthetic inputs");
  common_flags(synth, o);
  synth->add_option("--kind", o.kind,
                    "sphere, plane, finger-mesh, pose-ramp, markers, truth-stream or fixtures")->required();
  synth->add_option("--mesh", o.mesh, "mesh for pose-ramp, markers and truth-stream");
  synth->add_option("--poses", o.poses, "pose stream for truth-stream");
  synth->add_option("--markers", o.markers, "markers for truth-stream");
  synth->add_option("--model", o.model, "solver for truth-stream")->check(CLI::IsMember({"sd", "arap"}));
  synth->add_option("--omega", o.omega, "handle penalty weight");
  synth->add_option("--epsilon", o.epsilon, "relative convergence tolerance");
  synth->add_option("--max-iters", o.max_iters, "iteration cap per frame");
  synth->add_option("--motion", o.motion, "twist, bend_x, bend_y, oblique, push or shear");
  synth->add_option("--frames", o.frames, "frames per ramp");
  synth->add_option("--degrees", o.degrees, "twist amplitude");
  synth->add_option("--count", o.count, "points or markers");
  synth->add_option("--elements", o.elements, "nominal element count of the finger mesh");
  synth->add_option("--radius", o.radius, "sphere radius or plane half width (mm)");
  synth->add_option("--noise", o.noise, "gaussian noise sigma on truth points (mm)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : propsense::kExitInput;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  return propsense::run_command(name, o, std::cout, std::cerr);
}
