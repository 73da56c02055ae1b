#pragma once

namespace lane3d::tools {

/// Full CLI: synth / train / predict / refine / eval / plot.
/// Returns 0 on success, 2 on configuration errors, 3 on I/O errors,
/// 4 on any other failure; errors print one JSON line to stderr.
int run_cli(int argc, char** argv);

}  // namespace lane3d::tools
