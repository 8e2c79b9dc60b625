#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dqvi/errors.hpp"
#include "dqvi/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"dqvi: differential quasivariational inequality solver"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir;
  long long seed = -1;

  CLI::App* run = app.add_subcommand("run", "execute a scenario file");
  run->add_option("scenario", scenario_path, "scenario TOML file")->required();
  run->add_option("--out", out_dir, "output directory (overrides the scenario)");
  run->add_option("--seed", seed, "sampling seed (overrides the scenario)");

  CLI11_PARSE(app, argc, argv);

  try {
    dqvi::Scenario scenario = dqvi::Scenario::from_file(scenario_path);
    if (seed >= 0) {
      scenario.seed = static_cast<std::uint64_t>(seed);
      scenario.solver.sample_seed = scenario.seed;
    }
    const std::string dir = out_dir.empty() ? scenario.output_dir : out_dir;
    return dqvi::run_scenario(scenario, dir, std::cout);
  } catch (const dqvi::nonconvergence_error& e) {
    std::cerr << "solver failure: " << e.what();
    if (e.node >= 0) std::cerr << " (node " << e.node << ")";
    std::cerr << ", residual " << e.residual << "\n";
    return 1;
  } catch (const dqvi::toml::parse_error& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const dqvi::config_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const dqvi::input_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
