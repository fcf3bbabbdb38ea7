#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mfgnet/config.hpp"
#include "mfgnet/errors.hpp"
#include "mfgnet/network.hpp"
#include "mfgnet/run.hpp"

namespace {

  int fail(mfgnet::ExitCode code, nlohmann::ordered_json error) {
    std::cerr << nlohmann::ordered_json{{"error", std::move(error)}}.dump() << std::endl;
    return code;
  }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equilibrium start time of a quorum meeting on a network"};
  app.set_help_flag("--help", "Print this help message and exit");
  std::string config_path;
  std::string mode;
  std::optional<double> h;
  std::optional<double> tol;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> snapshots;
  bool quiet = false;

  app.add_option("--config", config_path, "JSON run description")->required();
  app.add_option("--mode", mode, "solve | oracle | refine-study")
      ->check(CLI::IsMember({"solve", "oracle", "refine-study"}));
  app.add_option("--h", h, "Target mesh size")->check(CLI::PositiveNumber);
  app.add_option("--tol", tol, "Fixed-point tolerance")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "Output directory");
  app.add_option("--seed", seed, "Monte-Carlo seed");
  app.add_option("--snapshots", snapshots, "Also write every N-th field level");
  app.add_flag("--quiet", quiet, "No progress output");
  CLI11_PARSE(app, argc, argv);

  try {
    mfgnet::RunConfig config = mfgnet::load_config(config_path);
    if (!mode.empty()) config.run.mode = *mfgnet::parse_run_mode(mode);
    if (h) config.numerics.h = *h;
    if (tol) config.numerics.tol = *tol;
    if (out) config.run.output_dir = *out;
    if (seed) config.run.seed = *seed;
    if (snapshots) config.run.snapshots = *snapshots;

    mfgnet::RunOptions options;
    options.threads = mfgnet::threads_from_environment();
    if (!quiet) options.log = &std::cout;
    return mfgnet::run(config, options);
  } catch (const mfgnet::ParseError& e) {
    return fail(mfgnet::ExitValidation,
                {{"kind", "parse"}, {"line", e.line()}, {"column", e.column()}, {"message", e.what()}});
  } catch (const mfgnet::ValidationError& e) {
    return fail(mfgnet::ExitValidation,
                {{"kind", "validation"}, {"field", e.field()}, {"path", e.path()}, {"message", e.what()}});
  } catch (const mfgnet::NetworkError& e) {
    return fail(mfgnet::ExitValidation, {{"kind", "validation"}, {"field", "network"}, {"message", e.what()}});
  } catch (const mfgnet::NumericalError& e) {
    return fail(mfgnet::ExitNumerical,
                {{"kind", "numerical"}, {"code", mfgnet::to_string(e.code())}, {"message", e.what()}});
  }
}
