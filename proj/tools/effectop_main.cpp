#include <CLI11.hpp>

#include "effectop/experiments.hpp"
#include "effectop/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"effectop - effective constitutive laws of random media"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "effectop_out";
  int threads = 0;

  CLI::App* run = app.add_subcommand("run", "execute the experiment in a config file");
  run->add_option("config", config_path, "JSON experiment configuration")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--threads", threads, "worker threads (0 = hardware)");

  CLI::App* validate = app.add_subcommand("validate", "parse and validate a config file");
  validate->add_option("config", config_path, "JSON experiment configuration")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    if (threads > 0) effectop::set_thread_count(threads);
    return effectop::run_config_file(config_path, out_dir);
  }
  return effectop::validate_config_file(config_path);
}
