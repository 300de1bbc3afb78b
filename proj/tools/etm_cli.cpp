#include <algorithm>
#include <atomic>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "etm/scenario.hpp"

namespace {

// Scenarios are independent; a small worker pool claims them by index so
// --jobs N runs N at a time while per-scenario outputs stay deterministic.
std::vector<int> run_all(const std::vector<std::string>& configs, int jobs) {
  std::vector<int> codes(configs.size(), 0);
  std::atomic<std::size_t> next{0};
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(jobs), configs.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < configs.size();
           i = next.fetch_add(1))
        codes[i] = etm::run_scenario(configs[i]);
    });
  for (std::thread& t : pool) t.join();
  return codes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"age-structured neuron model: scenario runner"};
  app.require_subcommand(1);

  std::vector<std::string> run_configs;
  int jobs = 1;
  CLI::App* run = app.add_subcommand("run", "execute scenario configs");
  run->add_option("configs", run_configs, "scenario JSON files")->required();
  run->add_option("--jobs,-j", jobs, "scenarios to run in parallel")
      ->check(CLI::PositiveNumber);

  std::vector<std::string> check_configs;
  CLI::App* validate =
      app.add_subcommand("validate", "parse and validate configs");
  validate->add_option("configs", check_configs, "scenario JSON files")
      ->required();

  CLI::App* version = app.add_subcommand("version", "print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (version->parsed()) {
    std::printf("etm %s\n", etm::version_string().c_str());
    return 0;
  }

  if (validate->parsed()) {
    int worst = 0;
    for (const std::string& c : check_configs) {
      const int code = etm::validate_scenario(c);
      std::printf("%s: %s\n", c.c_str(), code == 0 ? "ok" : "invalid");
      worst = std::max(worst, code);
    }
    return worst;
  }

  const std::vector<int> codes = run_all(run_configs, jobs);
  int worst = 0;
  for (std::size_t i = 0; i < run_configs.size(); ++i) {
    if (codes[i] == 0)
      std::printf("%s: ok\n", run_configs[i].c_str());
    else
      std::printf("%s: failed (exit %d)\n", run_configs[i].c_str(), codes[i]);
    worst = std::max(worst, codes[i]);
  }
  return worst;
}
