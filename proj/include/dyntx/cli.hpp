#pragma once

namespace dyntx {

/// Entry point of the `dyntx` tool. Exit codes: 0 success, 1 usage error,
/// 2 data/format error, 3 numerical error.
int cli_main(int argc, const char* const* argv);

}  // namespace dyntx
