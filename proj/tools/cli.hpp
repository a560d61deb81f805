#pragma once

namespace bregman {

/// Entry point of the bregman command line tool; returns the exit code.
int cli_main(int argc, char** argv);

}  // namespace bregman
