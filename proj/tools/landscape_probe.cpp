// landscape-probe: runs one experiment and writes its JSON document (and CSV).
#include "lp/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  using lp::Json;
  CLI::App app{"Empirical and population risk landscape probes"};

  std::string experiment, config_path, out = "-", csv, arch, activation, quantity, sweep, n_grid;
  double radius = 0, tau = 0;
  long n = 0, trials = 0, probes = 0;
  std::uint64_t seed = 0;
  bool list = false;

  app.add_option("experiment", experiment, "Experiment name");
  app.add_flag("--list", list, "List experiments and exit");
  app.add_option("--config", config_path, "JSON config merged over the defaults")->check(CLI::ExistingFile);
  app.add_option("--arch", arch, "Layer widths, e.g. 2,3,2 or 2,3,2:sigmoid");
  app.add_option("--activation", activation, "linear or sigmoid")->check(CLI::IsMember({"linear", "sigmoid"}));
  app.add_option("--radius", radius, "Per-layer Frobenius radius r");
  app.add_option("--tau", tau, "Input scale");
  app.add_option("--n", n, "Sample size");
  app.add_option("--trials", trials, "Trials per grid point");
  app.add_option("--seed", seed, "Base seed");
  app.add_option("--n-grid", n_grid, "Sample-size grid, e.g. 128..8192:geometric or 16,64,256");
  app.add_option("--probes", probes, "Probe points for sup-gap estimates");
  app.add_option("--quantity", quantity, "loss, grad or hess")->check(CLI::IsMember({"loss", "grad", "hess"}));
  app.add_option("--sweep", sweep, "Bound sweep, e.g. n=64..65536:geometric");
  app.add_option("--out", out, "JSON output path ('-' for stdout)");
  app.add_option("--csv", csv, "CSV output path for tabular experiments");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const auto& name : lp::experiment_names()) std::cout << name << '\n';
    return 0;
  }

  try {
    Json cfg = Json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      cfg = Json::parse(in);
    }
    if (!experiment.empty()) cfg["experiment"] = experiment;
    if (!cfg.contains("experiment")) throw std::invalid_argument("no experiment given (see --list)");
    auto set = [&](const char* flag, const char* key, const Json& v) {
      if (app.count(flag)) cfg[key] = v;
    };
    set("--arch", "arch", arch);
    set("--activation", "activation", activation);
    set("--radius", "radius", radius);
    set("--tau", "tau", tau);
    set("--n", "n", n);
    set("--trials", "trials", trials);
    set("--seed", "seed", seed);
    set("--n-grid", "n_grid", n_grid);
    set("--probes", "probes", probes);
    set("--quantity", "quantity", quantity);
    set("--sweep", "sweep", sweep);

    const auto result = lp::run(cfg);
    if (out == "-") {
      std::cout << result.document.dump(2) << '\n';
      if (!csv.empty()) lp::write_outputs(result, {}, csv);
    } else {
      lp::write_outputs(result, out, csv);
    }
    for (const auto& a : result.document.at("assertions"))
      std::cerr << (a.at("pass").get<bool>() ? "PASS " : "FAIL ") << a.at("name").get<std::string>() << '\n';
    return result.pass() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "landscape-probe: " << e.what() << '\n';
    return 2;
  }
}
