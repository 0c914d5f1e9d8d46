#pragma once

#include <string>
#include <variant>
#include <vector>

namespace ocs {

// Single rectangular bump of height V0 on [a, b].
struct Rectangular {
    double V0; // eV
    double a;  // nm, left edge
    double b;  // nm, right edge
};

// Two identical rectangles of width d separated by a gap l, support [a, a+2d+l].
struct DoubleRectangular {
    double V0; // eV
    double d;  // nm, width of each barrier
    double l;  // nm, gap between them
    double a;  // nm, left edge of the first barrier
};

// Sampled symmetric potential, zero outside the sampled range.
struct TabulatedSymmetric {
    std::vector<double> x; // nm, strictly increasing
    std::vector<double> V; // eV
};

struct BarrierSpec {
    std::variant<Rectangular, DoubleRectangular, TabulatedSymmetric> shape;

    double left_edge() const;   // a
    double right_edge() const;  // b (full support for the double barrier)
    double width() const { return right_edge() - left_edge(); }
    double midpoint() const { return 0.5 * (left_edge() + right_edge()); }
    double top() const;         // max V, eV
    double potential(double x) const; // eV

    bool is_rectangular() const { return std::holds_alternative<Rectangular>(shape); }
    bool is_double() const { return std::holds_alternative<DoubleRectangular>(shape); }

    std::string describe() const;
};

struct BarrierValidation {
    bool valid = false;
    double midpoint = 0.0;          // nm
    double width = 0.0;             // nm
    double symmetry_residual = 0.0; // max |V(xc-xi) - V(xc+xi)| relative to top
    std::string message;
};

// Text forms: "rect:V0,a,b", "double:V0,d,l,a", "table:path.csv"
BarrierSpec parse_barrier(const std::string& text);

// Two-column CSV (x_nm, V_eV), optional header, increasing x.
BarrierSpec load_tabulated_csv(const std::string& path);

// Throws DegenerateGeometry / AsymmetricBarrier; returns the report when valid.
BarrierValidation validate_barrier(const BarrierSpec& spec, double tol = 1e-10);

} // namespace ocs
