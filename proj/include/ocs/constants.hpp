#pragma once

namespace ocs {

// Unit system: nm, fs, eV. Times come out in fs, lengths in nm.
struct PhysicalConstants {
    double hbar = 0.6582119569;       // eV fs
    double hbar2_over_2m = 0.0380998; // eV nm^2, kinetic prefactor for the chosen mass

    double energy(double k) const { return hbar2_over_2m * k * k; } // eV
    double velocity(double k) const { return 2.0 * hbar2_over_2m * k / hbar; } // nm/fs

    // m/hbar in fs/nm^2; most time formulas carry an explicit m/(hbar k) factor
    double mass_over_hbar() const { return hbar / (2.0 * hbar2_over_2m); }
};

// Free-electron defaults, fixed in one place. An effective-mass variant only
// needs a different hbar2_over_2m.
PhysicalConstants electron_constants();

double wavenumber_from_energy(double E_eV, const PhysicalConstants& c);

} // namespace ocs
