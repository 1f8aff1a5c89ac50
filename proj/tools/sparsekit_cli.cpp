#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "sparsekit/harness/registry.hpp"

using namespace sparsekit;

namespace {

int list_experiments() {
  for (const auto& e : experiment_registry()) {
    std::cout << e.id << "\t" << e.description << "\n";
    std::cout << "  defaults: " << e.defaults.dump() << "\n";
  }
  return 0;
}

// Spec file: {"experiment": id, "seed": u64, "trials": n, "out": dir, "params": {...}}. Flags win over the file.
ExperimentSpec load_spec_file(const std::string& path, bool& has_out) {
  std::ifstream f(path);
  require(static_cast<bool>(f), errc::usage, "cannot open spec file '" + path + "'");
  const json j = json::parse(f, nullptr, false);
  require(!j.is_discarded() && j.is_object(), errc::usage, "spec file '" + path + "' is not a JSON object");
  for (const auto& [key, value] : j.items())
    require(key == "experiment" || key == "seed" || key == "trials" || key == "out" || key == "params", errc::usage,
            "spec file: unknown key '" + key + "'");
  ExperimentSpec spec;
  try {
    if (j.contains("experiment")) spec.id = j.at("experiment").get<std::string>();
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("trials")) spec.trials = j.at("trials").get<std::size_t>();
    has_out = j.contains("out");
    if (has_out) spec.out = j.at("out").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::usage, "spec file: " + std::string(e.what()));
  }
  if (j.contains("params")) spec.overrides = j.at("params");
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparsekit experiment runner"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "show registered experiments and their default parameters");

  auto* run = app.add_subcommand("run", "run one experiment and write CSV outputs plus a manifest");
  std::string id, spec_file, out;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  std::vector<std::string> sets;
  run->add_option("experiment", id, "experiment id, e.g. fig10");
  run->add_option("--spec", spec_file, "JSON spec file")->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "random seed");
  run->add_option("--out", out, "output directory (default: $SPARSEKIT_OUT or ./results)");
  run->add_option("--trials", trials, "trial count override")->check(CLI::PositiveNumber);
  run->add_option("--set", sets, "parameter override key=value (repeatable)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) return list_experiments();

    bool file_out = false;
    ExperimentSpec spec = spec_file.empty() ? ExperimentSpec{} : load_spec_file(spec_file, file_out);
    if (!id.empty()) spec.id = id;
    require(!spec.id.empty(), errc::usage, "no experiment given (positional id or \"experiment\" in --spec)");
    if (run->count("--seed")) spec.seed = seed;
    if (run->count("--trials")) spec.trials = trials;
    if (!out.empty()) {
      spec.out = out;
    } else if (!file_out) {
      if (const char* env = std::getenv("SPARSEKIT_OUT"); env && *env) spec.out = env;
    }
    for (const auto& s : sets) {
      auto [key, value] = parse_assignment(s);
      spec.overrides[key] = value;
    }
    const auto man = run_experiment(spec);
    for (const auto& o : man.outputs) std::cout << (spec.out / o.file).string() << "  " << o.sha256 << "\n";
    std::cout << (spec.out / (spec.id + ".manifest.json")).string() << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "sparsekit: " << e.what() << "\n";
    return e.code() == errc::usage ? 2 : 1;
  }
}
