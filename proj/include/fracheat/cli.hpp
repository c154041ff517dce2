#ifndef FRACHEAT_CLI_HPP
#define FRACHEAT_CLI_HPP

#include <iosfwd>

namespace fracheat {

inline constexpr const char* version = "1.0.0";

/// Batch front end. Exit codes: 0 all verdicts pass, 1 a verdict or computation failed,
/// 2 usage or configuration error (including violated theorem hypotheses).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace fracheat

#endif
