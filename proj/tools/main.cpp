#include <iostream>

#include "cli.hpp"
#include "expdesign/errors.hpp"

int main(int argc, char** argv) {
  using namespace expdesign;
  cli::Context ctx;
  ctx.argv.assign(argv, argv + argc);

  CLI::App app{"Allocation designs for two-arm experiments"};
  app.set_version_flag("--version", EXPDESIGN_VERSION);
  app.require_subcommand(1);
  cli::add_design_command(app, ctx);
  cli::add_infer_command(app, ctx);
  cli::add_simulate_command(app, ctx);
  cli::add_eta_command(app, ctx);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ParseError& e) {
    std::cerr << "parse error (line " << e.line() << "): " << e.what() << "\n";
    return 3;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << "\n";
    return 4;
  } catch (const SingularityError& e) {
    std::cerr << "singularity error: " << e.what() << "\n";
    return 5;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 6;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
