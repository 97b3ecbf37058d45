#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace propsense {

/// Flags shared by all subcommands; each command reads the ones it needs.
struct CommandOptions {
  std::string mesh, poses, markers, truth, cloud, truth_cloud;
  std::string model = "sd";
  double omega = 1e5;
  double epsilon = 1e-4;
  int max_iters = 100;
  double resolution = 0.2;  // mm
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out = "out";
  bool dump_states = false;

  // gpis
  double offset = 2.0;           // control point offset (mm)
  double margin = 0.0;           // region padding around contacts (mm); 0 = automatic
  int patch_contacts = 400;      // contacts per local GP model
  std::vector<double> region;    // optional x0 y0 z0 x1 y1 z1

  // bench
  std::string fixtures = "fixtures";
  std::vector<int> sizes;        // nominal element counts; empty = full family
  int frames = 10;

  // synth
  std::string kind;
  std::string motion = "twist";
  int count = 200;
  int elements = 1500;
  double radius = 40.0;
  double degrees = 10.0;
  double noise = 0.0;  // mm, truth-stream noise sigma
};

enum ExitCode : int { kExitOk = 0, kExitInput = 1, kExitNumerical = 2 };

int cmd_deform(const CommandOptions& opt, std::ostream& log);
int cmd_track(const CommandOptions& opt, std::ostream& log);
int cmd_gpis(const CommandOptions& opt, std::ostream& log);
int cmd_bench(const CommandOptions& opt, std::ostream& log);
int cmd_synth(const CommandOptions& opt, std::ostream& log);

/// Runs `name` and maps InputError to 1 and NumericalError to 2, printing
/// the message to `err`.
int run_command(const std::string& name, const CommandOptions& opt, std::ostream& log, std::ostream& err);

}  // namespace propsense
