#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dqvi/control.hpp"
#include "dqvi/perturbation.hpp"

namespace dqvi {

/// Perturbation section of a scenario file: which 1/n family to run.
struct PerturbFileSpec {
  std::string family = "joint";  // F|A|j|f|x0|gap|joint
  double magnitude = 0.5;
  std::vector<int> n_values{1, 2, 4, 8, 16, 32, 64};
  std::vector<double> times{0.25, 0.5, 1.0};
  double decay_factor = 0.1;
};

struct Scenario {
  enum class Kind { solve, perturb, control, verify };
  Kind kind = Kind::solve;
  std::uint64_t seed = 0x5eed;
  std::string output_dir = ".";

  std::string synthetic;  // instance tag, or empty when [rod] is given
  bool has_rod = false;
  RodConfig rod;

  TimeGridSpec grid;
  QviConfig solver;

  PerturbFileSpec perturb;
  ControlSpec control;

  static Scenario from_file(const std::string& path);
  static Scenario from_toml(const toml::Document& doc);
};

/// Registered synthetic instances addressable from scenario files.
DviProblem synthetic_instance(const std::string& tag);

/// Builds the 1/n family spec for a named channel on a rod problem.
PerturbationSpec make_family_spec(const DviProblem& base, const std::string& family,
                                  double magnitude);

/// Executes a scenario; writes trajectory.csv/report.csv/result.json under
/// out_dir per kind and prints the verify summary to `out`. Returns the
/// process exit status (0 ok, 1 solver failure, 2 configuration error).
int run_scenario(const Scenario& scenario, const std::string& out_dir, std::ostream& out);

}  // namespace dqvi
