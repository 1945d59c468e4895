#pragma once

#include <atomic>
#include <ostream>

namespace socs::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeError = 1;
inline constexpr int kUsageError = 2;

// Runs one `socs` invocation. Long-running subcommands (monitor, replay)
// return once their source ends or `interrupted` becomes true.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
        const std::atomic<bool>* interrupted = nullptr);

}  // namespace socs::cli
