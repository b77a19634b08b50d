// Batch driver for the Goursat-Darboux optimal-control toolkit.  All work is
// delegated to the shared library through its C API; this binary only parses
// flags, applies config overrides, and maps statuses to exit codes.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "goursat/goursat.h"

int main(int argc, char** argv) {
  CLI::App app{"Goursat-Darboux optimal control toolkit"};
  std::string config_path, out_dir;
  long long seed = -1;
  double hmax = -1;
  int workers = -1;
  app.add_option("--config", config_path, "path to the JSON run configuration")
      ->required();
  app.add_option("--out", out_dir, "output directory (overrides config)");
  app.add_option("--seed", seed, "RNG seed override");
  app.add_option("--hmax", hmax, "grid spacing override");
  app.add_option("--workers", workers, "worker count override");
  CLI11_PARSE(app, argc, argv);

  std::ifstream f(config_path);
  if (!f.good()) {
    std::fprintf(stderr, "error: cannot read config file %s\n", config_path.c_str());
    return 2;
  }
  std::ostringstream ss;
  ss << f.rdbuf();

  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(ss.str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: config is not valid JSON: %s\n", e.what());
    return 2;
  }
  if (seed >= 0) cfg["seed"] = static_cast<unsigned long long>(seed);
  if (hmax > 0) cfg["hmax"] = hmax;
  if (workers > 0) cfg["workers"] = workers;

  int exit_code = 3;
  gd_status st = gd_run(cfg.dump().c_str(), out_dir.empty() ? nullptr
                                                            : out_dir.c_str(),
                        &exit_code);
  if (st != GD_OK) {
    std::fprintf(stderr, "error: %s\n", gd_last_error());
    return st == GD_ERR_CONFIG ? 2 : 3;
  }
  if (exit_code != 0)
    std::fprintf(stderr, "run finished with exit code %d: %s\n", exit_code,
                 gd_last_error());
  return exit_code;
}
