#include <iostream>
#include <memory>

#include "cli.hpp"
#include "expdesign/imbalance.hpp"
#include "expdesign/io.hpp"

namespace expdesign::cli {

void add_eta_command(CLI::App& app, const Context&) {
  struct EtaOptions {
    int p = 1;
    double a = 0.0;
  };
  auto o = std::make_shared<EtaOptions>();
  CLI::App* cmd = app.add_subcommand("eta", "Multiplicative MSE reduction of rerandomization");
  cmd->add_option("--p", o->p, "Number of covariates")->required();
  cmd->add_option("--a", o->a, "Imbalance threshold")->required();
  cmd->callback([o] { std::cout << io::format_double(eta(o->p, o->a)) << "\n"; });
}

}  // namespace expdesign::cli
