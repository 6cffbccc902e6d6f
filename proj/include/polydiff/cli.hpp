#pragma once

namespace polydiff {

/// The executable's entry point, exposed so tests can drive the command line
/// in-process. argv follows main() conventions (argv[0] is the program name).
int cli_main(int argc, const char* const* argv);

}  // namespace polydiff
