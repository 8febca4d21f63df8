// qedft: command-line front end.
//
//   qedft <command> --config run.ini [--out DIR] [--seed N] [--override section.key=value]...
//   qedft resolve --config run.ini     print the resolved config
//
// Exit status: 0 pass / converged, 2 non-convergence or failed check, 1 usage or config error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "qedft/run.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw qedft::ConfigError("--config", "cannot read " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact and mean-field ground states of electrons coupled to quantized cavity modes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", qedft::artifact_version);

  std::string config_path;
  std::string out_dir = "qedft-out";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;

  std::vector<CLI::App*> commands;
  auto add = [&](const std::string& name, const std::string& help) {
    auto* c = app.add_subcommand(name, help);
    c->add_option("--config", config_path, "configuration file")->required();
    c->add_option("--out", out_dir, "output directory")->capture_default_str();
    c->add_option("--seed", seed, "overrides run.seed");
    c->add_option("--override", overrides, "section.key=value, repeatable")->take_all();
    commands.push_back(c);
  };
  add("exact", "exact ground state of the truncated Hamiltonian");
  add("scf", "self-consistent Maxwell-Kohn-Sham mean field");
  add("displace-check", "compare the problem with b against its displaced form");
  add("hk-scan", "random scan for non-injectivity of (v, j) -> (n, A)");
  add("maxwell-residual", "static Maxwell residual over run.n_max_sweep");
  auto* resolve = app.add_subcommand("resolve", "print the resolved configuration and exit");
  resolve->add_option("--config", config_path, "configuration file")->required();
  resolve->add_option("--override", overrides, "section.key=value, repeatable")->take_all();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const std::string text = read_file(config_path);
    if (resolve->parsed()) {
      std::cout << qedft::to_text(qedft::parse_config(text, overrides));
      return 0;
    }
    for (auto* c : commands) {
      if (!c->parsed()) continue;
      const auto r = qedft::run_from_text(c->get_name(), text, overrides, seed, out_dir);
      const auto& m = r.manifest;
      std::cout << c->get_name() << ": " << m["status"].get<std::string>();
      if (!m["message"].get<std::string>().empty()) std::cout << " (" << m["message"].get<std::string>() << ")";
      std::cout << "\n  manifest: " << out_dir << "/manifest.json\n";
      return r.exit_code;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
