#pragma once

// Command-line front end: `simulate`, `reconstruct`, `analyze` (negativity /
// bell / bell-theory / threshold), and the end-to-end `reproduce-paper` run.
// Every command that writes files also writes a "<output>.manifest.json" with
// the full flag snapshot, so runs can be replayed exactly.

namespace qht {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 2 usage, 3 I/O or parse failure, 4 numerical failure.
int run_cli(int argc, const char* const* argv);

}  // namespace qht
