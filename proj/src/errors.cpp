#include "evolab/errors.hpp"

namespace evolab {

NumericError::NumericError(const std::string& what, double residual)
    : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual)
{
}

AssemblyError::AssemblyError(const std::string& what, std::size_t triangle)
    : Error(what + " (triangle " + std::to_string(triangle) + ")"), triangle_(triangle)
{
}

ParseError::ParseError(const std::string& what, int line)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line)
{
}

}  // namespace evolab
