#include "fockscope/error.hpp"

namespace fockscope {

ConfigError::ConfigError(const std::string& what, int line)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

} // namespace fockscope
