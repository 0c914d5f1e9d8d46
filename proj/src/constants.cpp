#include "ocs/constants.hpp"

#include <cmath>
#include <string>

#include "ocs/errors.hpp"

namespace ocs {

PhysicalConstants electron_constants() { return PhysicalConstants{}; }

double wavenumber_from_energy(double E_eV, const PhysicalConstants& c) {
    if (!(E_eV > 0.0))
        throw NonPositiveK("energy must be positive, got " + std::to_string(E_eV) + " eV");
    return std::sqrt(E_eV / c.hbar2_over_2m);
}

} // namespace ocs
