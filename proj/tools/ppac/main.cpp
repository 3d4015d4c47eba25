#include <iostream>

#include <CLI11.hpp>

#include "ppac/commands.hpp"
#include "ppac/error.hpp"
#include "ppac/json_config.hpp"

namespace {

// Exit statuses.
constexpr int kFailure = 1;
constexpr int kBadConfig = 2;
constexpr int kNumerical = 3;

} // namespace

int main(int argc, char** argv) {
  using namespace ppac::cli;
  CLI::App app{"Partial-policy actor-critic landmark localization"};
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "", "JSON object of option values for the chosen command (keys are long option names); "
                                 "command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.footer("Artifacts go to $PPAC_RUN_ROOT (default ./runs)/<command>-<config hash>-<timestamp>/.\n"
             "Exit status: 0 ok, 1 failure, 2 bad configuration, 3 numerical abort.");

  GenOptions gen;
  TrainOptions train;
  EvalOptions eval;
  TraceOptions trace;
  GradcheckOptions gradcheck;
  auto* gen_cmd = add_gen(app, gen);
  auto* train_cmd = add_train(app, train);
  auto* eval_cmd = add_eval(app, eval);
  auto* trace_cmd = add_trace(app, trace);
  auto* gradcheck_cmd = add_gradcheck(app, gradcheck);
  for (auto* cmd : app.get_subcommands({})) {
    cmd->fallthrough(); // lets --config follow the command name
    cmd->config_formatter(std::make_shared<JsonConfig>());
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadConfig;
  }

  try {
    if (*gen_cmd) return run_gen(*gen_cmd, gen);
    if (*train_cmd) return run_train(*train_cmd, train);
    if (*eval_cmd) return run_eval(*eval_cmd, eval);
    if (*trace_cmd) return run_trace(*trace_cmd, trace);
    if (*gradcheck_cmd) return run_gradcheck(gradcheck);
  } catch (const ppac::ConfigError& e) {
    std::cerr << "ppac: config error: " << e.what() << '\n';
    return kBadConfig;
  } catch (const ppac::NumericalError& e) {
    std::cerr << "ppac: numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "ppac: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
