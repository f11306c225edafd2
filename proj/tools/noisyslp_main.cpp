#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "noisyslp/config.hpp"
#include "noisyslp/harness.hpp"
#include "noisyslp/pgm.hpp"
#include "noisyslp/verify.hpp"

namespace {

int pgm_convert(const std::string& input, const std::string& output, const std::string& format) {
  try {
    const nslp::Matrix img = nslp::load_image(input);
    nslp::write_pgm(img, output, format == "p2" ? nslp::PgmFormat::Plain : nslp::PgmFormat::Raw);
    std::cout << "wrote " << img.rows() << "x" << img.cols() << " image to " << output << '\n';
    return nslp::kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return nslp::kExitError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noise-tolerant SLP trust-region solver"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  auto* solve = app.add_subcommand("solve", "Run one seed and write the iterate CSV and a JSON summary");
  solve->add_option("--config", config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  solve->add_option("--output", output, "Output prefix (default from config or $NOISYSLP_OUTPUT_DIR)");
  solve->add_option("--seed", seed, "Seed override (default: first seed of the config)");

  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Run the config's sweep grid over all seeds");
  sweep->add_option("--config", config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--output", output, "Output prefix");

  nslp::VerifyOptions vopts;
  std::string inject = "none";
  std::optional<std::string> out_dir;
  auto* verify = app.add_subcommand("verify", "Check the convergence-theory inequalities on seeded random instances");
  verify->add_option("--seed", vopts.seed, "Instance generator seed");
  verify->add_option("--instances", vopts.instances, "Instances per property")->check(CLI::Range(200, 1000000));
  verify->add_option("--inject", inject, "Mutation to inject")->check(CLI::IsMember({"none", "m2-half"}));
  verify->add_option("--output-dir", out_dir, "Where failing instances are written");

  std::string pgm_in, pgm_out, pgm_format = "p5";
  auto* pgm = app.add_subcommand("pgm", "PGM utilities");
  pgm->require_subcommand(1);
  auto* convert = pgm->add_subcommand("convert", "Convert a PGM or synthetic:MxN image to P2/P5");
  convert->add_option("--input", pgm_in, "PGM path or synthetic:MxN")->required();
  convert->add_option("--output", pgm_out, "Output PGM path")->required();
  convert->add_option("--format", pgm_format, "p2 or p5")->check(CLI::IsMember({"p2", "p5"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? nslp::kExitOk : nslp::kExitError;
  }

  if (*solve) return nslp::cmd_solve(config, output, seed, std::cout, std::cerr);
  if (*sweep) return nslp::cmd_sweep(config, jobs, output, std::cout, std::cerr);
  if (*verify) {
    vopts.inject = inject == "m2-half" ? nslp::Mutation::M2Half : nslp::Mutation::None;
    return nslp::cmd_verify(vopts, out_dir, std::cout, std::cerr);
  }
  if (*convert) return pgm_convert(pgm_in, pgm_out, pgm_format);
  return nslp::kExitError;
}
