#pragma once

#include <iosfwd>

namespace reformguard {

/// Entry point for the reformguard command line (poison, attack, defend,
/// evaluate, extract-dataset, serve). Returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace reformguard
