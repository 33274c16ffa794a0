#pragma once

#include <iosfwd>

namespace hmmilm::cli {

/// Entry point of the hmmilm tool. Errors go to `err` as one line
/// "hmmilm: error: <kind>: <message>" and yield a nonzero status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hmmilm::cli
