#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"scenegen: synthetic RGB-D scene renderer"};
  auto run = empathd::cli::register_scenegen(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return empathd::cli::guarded(run);
}
