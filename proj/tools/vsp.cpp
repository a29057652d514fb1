// vsp: velocity-selective pumping simulations from a YAML experiment config.
//
//   vsp <spectrum|dephasing|predict|fit|fit-relaxation|sweep> <config.yaml> [--threads N]
//
// Exit codes: 0 success, 2 configuration error, 3 input data error,
// 4 numerical failure.

#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "vsp/app.hpp"

namespace {

enum Exit { ok = 0, usage = 1, config = 2, ingestion = 3, numeric = 4 };

using Command = std::function<vsp::app::Result(const vsp::ExperimentConfig&, unsigned)>;

int run(const Command& cmd, const std::string& path, unsigned threads) {
  try {
    const auto cfg = vsp::load_config(path);
    const auto r = cmd(cfg, threads);
    for (const auto& f : r.files) std::printf("wrote %s\n", f.string().c_str());
    return ok;
  } catch (const vsp::ConfigError& e) {
    std::fprintf(stderr, "config error: %s: %s\n", path.c_str(), e.what());
    return config;
  } catch (const vsp::IngestionError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return ingestion;
  } catch (const vsp::NumericError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return numeric;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return numeric;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return config;
  } catch (const YAML::Exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return config;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Velocity-selective optical pumping in warm alkali vapour"};
  app.require_subcommand(1);
  app.set_version_flag("--version", vsp::app::version);

  const std::map<std::string, std::pair<const char*, Command>> commands{
      {"spectrum", {"simulated OD spectrum and unpumped baseline", vsp::app::spectrum}},
      {"dephasing", {"coherence decay and memory lifetime per ladder", vsp::app::dephasing}},
      {"predict", {"memory lifetime table with and without velocity selection", vsp::app::predict}},
      {"fit", {"fit pump-back parameters to a measured spectrum", vsp::app::fit}},
      {"fit-relaxation", {"two-exponential fit of a transmission relaxation series", vsp::app::fit_relaxation}},
      {"sweep", {"pump-back power x duration sweep", vsp::app::sweep}},
  };

  std::string config_path;
  unsigned threads = 0;
  std::string chosen;
  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.first);
    sub->add_option("config", config_path, "experiment config (YAML)")->required();
    sub->add_option("--threads", threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
    sub->callback([&chosen, name = name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage;
  }
  return run(commands.at(chosen).second, config_path, threads);
}
