#include "echomem/detuning_grid.hpp"

#include "echomem/errors.hpp"

#include <algorithm>
#include <cmath>

namespace echomem {

double DetuningGrid::span_min() const
{
    return nodes.empty() ? 0.0 : *std::min_element(nodes.begin(), nodes.end());
}

double DetuningGrid::span_max() const
{
    return nodes.empty() ? 0.0 : *std::max_element(nodes.begin(), nodes.end());
}

bool DetuningGrid::symmetric_about_zero() const
{
    const std::size_t n = nodes.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (nodes[i] != -nodes[n - 1 - i])
            return false;
        if (weights[i] != weights[n - 1 - i])
            return false;
    }
    return true;
}

namespace {

// Midpoint nodes on [a, b] of the positive half-axis (offsets from center),
// mirrored onto the negative side so symmetry is exact by construction.
void add_mirrored_panel(std::vector<double>& offsets, std::vector<double>& weights,
                        double a, double b, int m)
{
    const double h = (b - a) / m;
    for (int i = 0; i < m; ++i) {
        const double off = a + (i + 0.5) * h;
        offsets.push_back(off);
        weights.push_back(h);
    }
}

DetuningGrid assemble(double center, const std::vector<double>& offsets,
                      const std::vector<double>& panelWeights, double cutoff,
                      const LineShape& line)
{
    std::vector<std::pair<double, double>> half; // (offset, weight), positive side
    half.reserve(offsets.size());
    for (std::size_t i = 0; i < offsets.size(); ++i)
        half.emplace_back(offsets[i], panelWeights[i]);
    std::sort(half.begin(), half.end());

    DetuningGrid grid;
    grid.cutoff = cutoff;
    grid.nodes.reserve(2 * half.size());
    grid.weights.reserve(2 * half.size());
    for (auto it = half.rbegin(); it != half.rend(); ++it) {
        grid.nodes.push_back(center - it->first);
        grid.weights.push_back(it->second);
    }
    for (const auto& [off, wgt] : half) {
        grid.nodes.push_back(center + off);
        grid.weights.push_back(wgt);
    }

    double raw = 0.0;
    for (std::size_t j = 0; j < grid.nodes.size(); ++j)
        raw += grid.weights[j] * line.normalized_density(grid.nodes[j]);
    if (raw <= 0.0)
        throw InvalidParameter("discretize: grid carries no spectral weight");
    const double scale = 1.0 / raw;
    for (double& w : grid.weights)
        w *= scale;
    return grid;
}

} // namespace

DetuningGrid discretize(const LineShape& line, int n_bins, double cutoff_in_linewidths)
{
    if (n_bins < 16)
        throw InvalidParameter("discretize: need at least 16 bins");
    if (cutoff_in_linewidths < 3.0)
        throw InvalidParameter("discretize: cutoff must be at least 3 linewidths");

    const double width = line.fwhm();
    const double center = line.center();
    const double pitHalf = line.pit_halfwidth();
    const double kernel = line.broaden_width();
    const int perSide = n_bins / 2;

    std::vector<double> offsets, weights;
    const double coreEdge = cutoff_in_linewidths * width;

    // Wings survive hole burning beyond the pit; give them their own panels
    // when they are spectrally separated from the central feature.
    const double wingStart = pitHalf > 0.0 ? std::max(0.0, pitHalf - 0.75 * kernel) : 0.0;
    const bool separateWings = pitHalf > 0.0 && coreEdge < wingStart;
    if (separateWings) {
        const double wingEnd = line.support_halfwidth(1e-6) + 0.75 * kernel;
        const int coreBins = std::max(8, (6 * perSide) / 10);
        const int wingBins = std::max(4, perSide - coreBins);
        add_mirrored_panel(offsets, weights, 0.0, coreEdge, coreBins);
        if (wingEnd > wingStart)
            add_mirrored_panel(offsets, weights, wingStart, wingEnd, wingBins);
    } else {
        add_mirrored_panel(offsets, weights, 0.0, std::max(coreEdge, pitHalf + 0.75 * kernel), perSide);
    }
    return assemble(center, offsets, weights, cutoff_in_linewidths * width, line);
}

DetuningGrid make_uniform_grid(double half_span, int n_bins)
{
    if (n_bins < 16)
        throw InvalidParameter("grid: need at least 16 bins");
    if (half_span <= 0.0)
        throw InvalidParameter("grid: span must be positive");
    std::vector<double> offsets, weights;
    add_mirrored_panel(offsets, weights, 0.0, half_span, n_bins / 2);
    DetuningGrid grid;
    grid.cutoff = half_span;
    grid.nodes.reserve(offsets.size() * 2);
    grid.weights.reserve(offsets.size() * 2);
    for (std::size_t i = offsets.size(); i-- > 0;) {
        grid.nodes.push_back(-offsets[i]);
        grid.weights.push_back(weights[i]);
    }
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        grid.nodes.push_back(offsets[i]);
        grid.weights.push_back(weights[i]);
    }
    return grid;
}

} // namespace echomem
