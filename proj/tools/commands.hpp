#pragma once

#include <CLI11.hpp>

namespace empathd::cli {

// Registers every subcommand on the app. The returned callback runs the one
// that was selected and yields the process exit code.
std::function<int()> register_commands(CLI::App& app);

// Standalone scene renderer options on a top-level app.
std::function<int()> register_scenegen(CLI::App& app);

// Runs fn, mapping ConfigError to 2 and every other failure to 3.
int guarded(const std::function<int()>& fn);

}  // namespace empathd::cli
