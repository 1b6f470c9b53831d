#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"empathd: impairment simulation pipeline"};
  auto run = empathd::cli::register_commands(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return empathd::cli::guarded(run);
}
