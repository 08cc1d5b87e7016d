// Quadrature grids over the detuning axis for the integrals
// int dDelta G(Delta) sigma(z, t, Delta).

#pragma once

#include "echomem/line_shape.hpp"

#include <vector>

namespace echomem {

struct DetuningGrid {
    std::vector<double> nodes;   // detunings [rad/s]
    std::vector<double> weights; // quadrature weights [rad/s]
    double cutoff = 0.0;         // half-span of the covered detuning range

    std::size_t size() const { return nodes.size(); }
    double span_min() const;
    double span_max() const;

    // Exact mirror symmetry about zero (node-by-node, bitwise after
    // construction-by-mirroring). Required before a flip.
    bool symmetric_about_zero() const;
};

// Midpoint panels mirrored about the line center; weights rescaled post hoc
// so that sum_j w_j * normalized_density(node_j) == 1 exactly. Prepared
// lines get a dense panel across the (possibly broadened) spike plus wing
// panels beyond the pit.
DetuningGrid discretize(const LineShape& line, int n_bins, double cutoff_in_linewidths);

// Uniform mirrored grid over [-half_span, half_span] with post-hoc weight
// normalization against `reference` (used by longitudinal media, where the
// span follows the gradient, not a single line width).
DetuningGrid make_uniform_grid(double half_span, int n_bins);

} // namespace echomem
