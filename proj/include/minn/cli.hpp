#pragma once

namespace minn::cli {

// Entry point behind the binary, callable in-process from tests.
// Exit codes: 0 success, 1 validation/usage error, 2 runtime error.
int run(int argc, const char* const* argv);

} // namespace minn::cli
