// Inhomogeneous spectral densities G(delta), the spectral-hole-burning
// preparation edit, and controlled broadening (transverse / longitudinal).
// All detunings are angular frequencies [rad/s] relative to the carrier.

#pragma once

#include <memory>

namespace echomem {

enum class LineKind { gaussian, lorentzian, flat_top, prepared_spike };

// Immutable value type. density() integrates to area(); area() is 1 for
// freshly built lines and equals the surviving spectral weight after hole
// burning (hole burning only removes population, so density stays pointwise
// below the parent line). normalized_density() always integrates to 1.
class LineShape {
public:
    LineShape(); // unit-FWHM gaussian at zero detuning

    double density(double delta) const;
    double normalized_density(double delta) const;
    double cdf(double delta) const; // integral of density() from -inf
    double area() const;
    double center() const;
    LineKind kind() const;

    // FWHM of the central feature (analytic for primitives, bisection for
    // prepared / broadened shapes).
    double fwhm() const;

    // Radius beyond which density/peak falls below eps.
    double support_halfwidth(double eps = 1e-9) const;

    // Half width of the hole-burnt pit (0 when the line was never prepared)
    // and the width of any applied broadening kernel (0 if none). The grid
    // builder uses these to place quadrature panels.
    double pit_halfwidth() const;
    double broaden_width() const;

    LineShape shifted(double offset) const;
    bool is_broadened() const;

    struct Impl;
    explicit LineShape(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    const std::shared_ptr<const Impl>& impl() const { return impl_; }

private:
    std::shared_ptr<const Impl> impl_;
};

LineShape build_line_shape(LineKind kind, double center, double fwhm);

// Declarative hole-burning edit: empties a pit of full width `pit_width`
// around the line center except for an antihole of FWHM `spike_width`.
// The antihole profile is a Lorentzian mask anchored to zero at the pit
// edges, peak-matched to the parent density at center.
LineShape prepare_spike(const LineShape& line, double pit_width, double spike_width);

enum class BroadeningMode { transverse, longitudinal };
enum class BroadeningKernel { flat, gaussian };

struct BroadeningControl {
    BroadeningMode mode = BroadeningMode::transverse;
    // transverse: total induced broadening (flat-kernel full width) [rad/s];
    // longitudinal: gradient chi [rad/s per unit length].
    double magnitude = 0.0;
    double switch_time = 0.0;       // instant of the delta -> -delta reversal [s]
    double transfer_efficiency = 1.0; // eta_m in [0,1], mode-matching transfer
    BroadeningKernel kernel = BroadeningKernel::flat;

    void validate() const;
};

// Medium-ready spectral map produced by apply_broadening. Transverse media
// share one broadened line at every z; longitudinal media carry the narrow
// source line re-centered to chi*(z - L/2) per slice.
struct SpectralMap {
    LineShape source;    // pre-broadening line (sets the residual linewidth)
    LineShape effective; // transverse: broadened line; longitudinal: source
    BroadeningControl control;

    bool longitudinal() const { return control.mode == BroadeningMode::longitudinal; }
    double slice_center(double z, double length) const;
    double slice_density(double z, double length, double delta) const;
};

SpectralMap apply_broadening(const LineShape& line, const BroadeningControl& ctrl);

} // namespace echomem
