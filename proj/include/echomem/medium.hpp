// A 1-D absorbing medium: spectral map discretized onto (z, detuning) with
// the light-atom coupling calibrated so a resonant cw field decays in
// amplitude as exp(-depth/2) across the medium.

#pragma once

#include "echomem/detuning_grid.hpp"
#include "echomem/line_shape.hpp"

#include <vector>

namespace echomem {

struct GridSpec {
    int bins = 400;      // detuning bins
    double cutoff = 5.0; // in broadened linewidths
    int nz = 200;        // spatial slices

    GridSpec scaled(double factor) const;
};

struct Medium {
    double length = 1.0; // L; only products with the coupling matter
    double depth = 0.0;  // alpha*L at band center (transverse) or (alpha L)_eff (longitudinal)
    SpectralMap map;
    DetuningGrid grid;
    int nz = 0;
    bool flipped = false;

    std::vector<double> slice_centers; // per-slice controlled line shift [rad/s]
    std::vector<double> slice_density; // nz x bins, normalized per slice over the grid
    double coupling = 0.0;             // c0 in dE/dz = i c0 sum_j w_j g_j sigma_j

    std::size_t bins() const { return grid.size(); }
    double dz() const { return length / nz; }
    const double* g_row(int iz) const { return slice_density.data() + static_cast<std::size_t>(iz) * bins(); }

    // Smallest spurious-recurrence time of the discrete ensemble,
    // 2*pi / max node spacing. Windows must stay well below it.
    double recurrence_time() const;
};

Medium make_medium(const SpectralMap& map, double depth, double length, const GridSpec& spec);

// delta -> -delta on every grid node and slice center; weights, densities
// and any stored coherence keep their node index. Exact involution.
Medium flip_detunings(const Medium& medium);

} // namespace echomem
