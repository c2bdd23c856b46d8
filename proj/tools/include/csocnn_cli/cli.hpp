#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace csocnn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitFormat = 3;
inline constexpr int kExitNumeric = 4;
inline constexpr int kExitInterrupted = 130;

// Runs one command. `args[0]` is the program name. Failures are reported on
// `err` as a one-line JSON error record and mapped onto the exit codes above.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err);

// Async-signal-safe; long-running commands stop at the next batch boundary
// and write a manifest marked partial.
void request_interrupt() noexcept;
void clear_interrupt() noexcept;
bool interrupt_requested() noexcept;

}  // namespace csocnn::cli
