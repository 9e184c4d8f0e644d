#pragma once

#include <stdexcept>
#include <string>

namespace lrdlab {

/// Raised when a numerical procedure cannot meet its accuracy contract
/// (embedding eigenvalues, quadrature agreement, kernel construction).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lrdlab
