#include "echomem/medium.hpp"

#include "echomem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace echomem {

namespace {
constexpr double kPi = std::numbers::pi;
}

GridSpec GridSpec::scaled(double factor) const
{
    GridSpec s = *this;
    s.bins = std::max(16, static_cast<int>(std::lround(bins * factor)));
    s.nz = std::max(2, static_cast<int>(std::lround(nz * factor)));
    return s;
}

double Medium::recurrence_time() const
{
    // Wing panels are coarse on purpose and carry little weight; the
    // recurrence that matters comes from the core panel spacing, so use
    // the median node gap.
    std::vector<double> sorted = grid.nodes;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> gaps(sorted.size() - 1);
    for (std::size_t i = 1; i < sorted.size(); ++i)
        gaps[i - 1] = sorted[i] - sorted[i - 1];
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    const double typical = gaps[gaps.size() / 2];
    return 2.0 * kPi / std::max(typical, 1e-300);
}

Medium make_medium(const SpectralMap& map, double depth, double length, const GridSpec& spec)
{
    if (depth < 0.0)
        throw InvalidParameter("medium: optical depth must be >= 0");
    if (length <= 0.0)
        throw InvalidParameter("medium: length must be positive");
    if (spec.nz < 2)
        throw InvalidParameter("medium: nz must be at least 2");

    Medium m;
    m.length = length;
    m.depth = depth;
    m.map = map;
    m.nz = spec.nz;

    const std::size_t nzz = static_cast<std::size_t>(spec.nz);
    m.slice_centers.resize(nzz);
    if (map.longitudinal()) {
        const double chi = map.control.magnitude;
        if (chi <= 0.0 && depth > 0.0)
            throw InvalidParameter("medium: longitudinal broadening needs a nonzero gradient");
        const double dz = length / spec.nz;
        for (std::size_t iz = 0; iz < nzz; ++iz) {
            // (iz + 0.5 - nz/2) is exactly antisymmetric under iz -> nz-1-iz
            const double offset = (static_cast<double>(iz) + 0.5) - 0.5 * spec.nz;
            m.slice_centers[iz] = chi * offset * dz;
        }
        const double span = 0.5 * std::abs(chi) * length;
        const double pad = std::max(spec.cutoff, 3.0) * map.source.fwhm();
        m.grid = make_uniform_grid(span + pad, spec.bins);
        // Effective depth is set by the gradient; the slice shape only
        // smears the resonance position.
        m.coupling = depth * std::abs(chi) / (2.0 * kPi);
    } else {
        std::fill(m.slice_centers.begin(), m.slice_centers.end(), 0.0);
        m.grid = discretize(map.effective, spec.bins, spec.cutoff);
        const double peak = map.effective.normalized_density(map.effective.center());
        if (peak <= 0.0)
            throw InvalidParameter("medium: zero spectral density at line center");
        m.coupling = depth / (2.0 * kPi * peak * length);
    }

    // Per-slice densities, normalized over the grid so the discrete sum
    // rule sum_j w_j g_j = 1 holds exactly for every slice.
    const std::size_t nb = m.grid.size();
    m.slice_density.assign(nzz * nb, 0.0);
    for (std::size_t iz = 0; iz < nzz; ++iz) {
        double* row = m.slice_density.data() + iz * nb;
        double sum = 0.0;
        if (map.longitudinal()) {
            for (std::size_t j = 0; j < nb; ++j) {
                row[j] = map.source.density(m.grid.nodes[j] - m.slice_centers[iz]);
                sum += m.grid.weights[j] * row[j];
            }
        } else if (iz == 0) {
            for (std::size_t j = 0; j < nb; ++j) {
                row[j] = map.effective.normalized_density(m.grid.nodes[j]);
                sum += m.grid.weights[j] * row[j];
            }
        } else {
            std::copy(m.slice_density.begin(), m.slice_density.begin() + nb,
                      m.slice_density.begin() + iz * nb);
            continue;
        }
        if (sum <= 0.0)
            throw InvalidParameter("medium: slice carries no spectral weight inside the grid");
        for (std::size_t j = 0; j < nb; ++j)
            row[j] /= sum;
    }
    return m;
}

Medium flip_detunings(const Medium& medium)
{
    if (!medium.grid.symmetric_about_zero())
        throw InvariantViolation("flip_detunings: grid is not symmetric about zero");
    Medium out = medium;
    for (double& node : out.grid.nodes)
        node = -node;
    for (double& c : out.slice_centers)
        c = -c;
    out.flipped = !out.flipped;
    return out;
}

} // namespace echomem
