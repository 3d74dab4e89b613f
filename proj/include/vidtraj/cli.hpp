#pragma once

// Command-line driver. Subcommands: extract, simulate, eval, batch, plot-csv.

#include "vidtraj/error.hpp"

#include <iosfwd>

namespace vidtraj::cli {

enum ExitCode : int {
  ok = 0,
  input_error = 2,     // unreadable or malformed input, bad arguments, unknown scenario
  degenerate = 3,      // geometry that admits no pose or leaves the image
  pipeline_error = 4,  // the extraction chain could not produce a result
  internal_error = 5,
};

ExitCode exit_code_for(Errc code);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vidtraj::cli
