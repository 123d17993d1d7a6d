// eqt_cli: batch driver for the equivariant Toeplitz trace lab.

#include "eqt/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv) {
  CLI::App app{"Equivariant Toeplitz traces on projective space"};
  app.require_subcommand(1, 1);

  eqt::CliOptions opts;
  std::string out_dir;
  std::uint64_t seed = 0;

  const char *names[][2] = {
      {"analyze", "Reduction diagnostics and fixed components"},
      {"trace", "Exact traces over the k range"},
      {"predict", "Leading-term predictions over the k range"},
      {"compare", "Traces against predictions, with a half-power fit"},
      {"kernel", "Equivariant kernel values on and off the zero locus"},
      {"selftest", "Calibration followed by the invariant suites"},
  };
  for (const auto &n : names) {
    CLI::App *sub = app.add_subcommand(n[0], n[1]);
    if (std::string(n[0]) != "selftest") {
      sub->add_option("--config", opts.config_path, "JSON experiment config")
          ->required()
          ->check(CLI::ExistingFile);
    }
    sub->add_option("--out", out_dir, "Output directory (overrides the config)");
    sub->add_option("--seed", seed, "Seed (overrides the config)");
    sub->add_option("--threads", opts.threads, "Worker threads")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--debug-wrong-sign", opts.force_wrong_sign,
                  "Flip the pinned h orientation (negative control)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  CLI::App *sub = app.get_subcommands().front();
  if (sub->count("--out") > 0) {
    opts.out_dir = out_dir;
  }
  if (sub->count("--seed") > 0) {
    opts.seed = seed;
  }
  return eqt::run_command(sub->get_name(), opts, std::cout, std::cerr);
}
