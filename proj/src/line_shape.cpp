#include "echomem/line_shape.hpp"

#include "echomem/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace echomem {

namespace {
constexpr double kPi = std::numbers::pi;
const double kGaussSigmaPerFwhm = 1.0 / (2.0 * std::sqrt(2.0 * std::numbers::ln2));

// 7-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 7> kGlNodes = {
    -0.9491079123427585, -0.7415311855993945, -0.4058451513773972, 0.0,
    0.4058451513773972, 0.7415311855993945, 0.9491079123427585
};
constexpr std::array<double, 7> kGlWeights = {
    0.1294849661688697, 0.2797053914892766, 0.3818300505051189, 0.4179591836734694,
    0.3818300505051189, 0.2797053914892766, 0.1294849661688697
};

template <typename F>
double gl_integrate(const F& f, double a, double b)
{
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double acc = 0.0;
    for (std::size_t i = 0; i < kGlNodes.size(); ++i)
        acc += kGlWeights[i] * f(mid + half * kGlNodes[i]);
    return acc * half;
}
} // namespace

struct LineShape::Impl {
    virtual ~Impl() = default;
    virtual double density(double delta) const = 0;
    virtual double cdf(double delta) const = 0;
    virtual double area() const = 0;
    virtual double center() const = 0;
    virtual LineKind kind() const = 0;
    virtual double fwhm_hint() const = 0; // analytic if available, else <= 0
    virtual double support_halfwidth(double eps) const = 0;
    virtual bool broadened() const { return false; }
    virtual double pit_halfwidth() const { return 0.0; }
    virtual double broaden_width() const { return 0.0; }
};

namespace {

struct PrimitiveImpl final : LineShape::Impl {
    LineKind k;
    double c;
    double w; // FWHM (full band width for flat_top)

    PrimitiveImpl(LineKind kind, double center, double fwhm) : k(kind), c(center), w(fwhm) {}

    double density(double delta) const override
    {
        const double x = delta - c;
        switch (k) {
        case LineKind::gaussian: {
            const double sigma = w * kGaussSigmaPerFwhm;
            return std::exp(-0.5 * (x / sigma) * (x / sigma)) / (sigma * std::sqrt(2.0 * kPi));
        }
        case LineKind::lorentzian: {
            const double gamma = 0.5 * w;
            return gamma / (kPi * (x * x + gamma * gamma));
        }
        case LineKind::flat_top:
            return std::abs(x) <= 0.5 * w ? 1.0 / w : 0.0;
        default:
            return 0.0;
        }
    }

    double cdf(double delta) const override
    {
        const double x = delta - c;
        switch (k) {
        case LineKind::gaussian: {
            const double sigma = w * kGaussSigmaPerFwhm;
            return 0.5 * (1.0 + std::erf(x / (sigma * std::sqrt(2.0))));
        }
        case LineKind::lorentzian: {
            const double gamma = 0.5 * w;
            return 0.5 + std::atan(x / gamma) / kPi;
        }
        case LineKind::flat_top:
            if (x <= -0.5 * w)
                return 0.0;
            if (x >= 0.5 * w)
                return 1.0;
            return (x + 0.5 * w) / w;
        default:
            return 0.0;
        }
    }

    double area() const override { return 1.0; }
    double center() const override { return c; }
    LineKind kind() const override { return k; }
    double fwhm_hint() const override { return w; }

    double support_halfwidth(double eps) const override
    {
        switch (k) {
        case LineKind::gaussian: {
            const double sigma = w * kGaussSigmaPerFwhm;
            return sigma * std::sqrt(std::max(1.0, -2.0 * std::log(eps)));
        }
        case LineKind::lorentzian:
            return 0.5 * w / std::sqrt(eps);
        case LineKind::flat_top:
            return 0.5 * w;
        default:
            return w;
        }
    }
};

// Hole-burning edit. Inside the pit the parent density is multiplied by a
// Lorentzian antihole mask anchored to zero at the pit edges:
//   m(x) = (Lor(x) - Lor(p/2)) / (Lor(0) - Lor(p/2)),  Lor(x) = g^2/(x^2+g^2)
// with g = spike_fwhm/2. For spike << pit this is a plain Lorentzian of the
// requested FWHM, and its Fourier transform sets the field-free decay of the
// stored coherence.
struct PreparedImpl final : LineShape::Impl {
    std::shared_ptr<const LineShape::Impl> base;
    double pit;
    double spike;
    double gamma;
    double edge; // mask Lorentzian value at the pit edge
    double spikeArea = 0.0;
    double totalArea = 0.0;
    std::vector<double> cdfNodes;   // offsets from center, ascending, covering [-p/2, p/2]
    std::vector<double> cdfValues;  // cumulative density over the pit

    PreparedImpl(std::shared_ptr<const LineShape::Impl> parent, double pitWidth, double spikeWidth)
      : base(std::move(parent)), pit(pitWidth), spike(spikeWidth), gamma(0.5 * spikeWidth)
    {
        const double half = 0.5 * pit;
        edge = (gamma * gamma) / (half * half + gamma * gamma);
        buildCdfTable();
        const double wings = base->area() - (base->cdf(base->center() + half) - base->cdf(base->center() - half));
        spikeArea = cdfValues.back();
        totalArea = wings + spikeArea;
    }

    double mask(double x) const
    {
        if (std::abs(x) >= 0.5 * pit)
            return 0.0;
        const double lor = (gamma * gamma) / (x * x + gamma * gamma);
        return std::max(0.0, (lor - edge) / (1.0 - edge));
    }

    double density(double delta) const override
    {
        const double x = delta - base->center();
        if (std::abs(x) >= 0.5 * pit)
            return base->density(delta);
        return base->density(delta) * mask(x);
    }

    double cdf(double delta) const override
    {
        const double c = base->center();
        const double half = 0.5 * pit;
        if (delta <= c - half)
            return base->cdf(delta);
        double acc = base->cdf(c - half);
        if (delta >= c + half)
            return acc + spikeArea + (base->cdf(delta) - base->cdf(c + half));
        return acc + interpPitCdf(delta - c);
    }

    double area() const override { return totalArea; }
    double center() const override { return base->center(); }
    LineKind kind() const override { return LineKind::prepared_spike; }
    double fwhm_hint() const override { return -1.0; }
    double pit_halfwidth() const override { return 0.5 * pit; }

    double support_halfwidth(double eps) const override
    {
        return base->support_halfwidth(eps);
    }

private:
    void buildCdfTable()
    {
        const double half = 0.5 * pit;
        // Dense around the spike, geometric toward the pit edge.
        const double core = std::min(12.0 * gamma, half);
        std::vector<double> pos;
        const int nCore = 1024;
        for (int i = 0; i <= nCore; ++i)
            pos.push_back(core * static_cast<double>(i) / nCore);
        if (core < half) {
            const int nTail = 512;
            const double ratio = std::pow(half / core, 1.0 / nTail);
            double x = core;
            for (int i = 1; i <= nTail; ++i) {
                x *= ratio;
                pos.push_back(std::min(x, half));
            }
        }
        pos.back() = half;
        cdfNodes.clear();
        for (auto it = pos.rbegin(); it != pos.rend(); ++it)
            cdfNodes.push_back(-*it);
        for (std::size_t i = 1; i < pos.size(); ++i)
            cdfNodes.push_back(pos[i]);
        cdfValues.assign(cdfNodes.size(), 0.0);
        const double c = base->center();
        auto f = [&](double x) { return base->density(c + x) * mask(x); };
        for (std::size_t i = 1; i < cdfNodes.size(); ++i)
            cdfValues[i] = cdfValues[i - 1] + gl_integrate(f, cdfNodes[i - 1], cdfNodes[i]);
    }

    double interpPitCdf(double x) const
    {
        auto it = std::upper_bound(cdfNodes.begin(), cdfNodes.end(), x);
        if (it == cdfNodes.begin())
            return 0.0;
        if (it == cdfNodes.end())
            return cdfValues.back();
        const std::size_t hi = static_cast<std::size_t>(it - cdfNodes.begin());
        const std::size_t lo = hi - 1;
        const double frac = (x - cdfNodes[lo]) / (cdfNodes[hi] - cdfNodes[lo]);
        return cdfValues[lo] + frac * (cdfValues[hi] - cdfValues[lo]);
    }
};

// Convolution with the broadening kernel. The flat kernel reduces to a CDF
// difference, which keeps integrated spectral weight exactly conserved.
struct BroadenedImpl final : LineShape::Impl {
    std::shared_ptr<const LineShape::Impl> inner;
    double width;
    BroadeningKernel kernel;

    BroadenedImpl(std::shared_ptr<const LineShape::Impl> in, double w, BroadeningKernel k)
      : inner(std::move(in)), width(w), kernel(k) {}

    double density(double delta) const override
    {
        if (kernel == BroadeningKernel::flat)
            return (inner->cdf(delta + 0.5 * width) - inner->cdf(delta - 0.5 * width)) / width;
        // Gaussian kernel of FWHM `width`, composite quadrature over +-5 sigma.
        const double sigma = width * kGaussSigmaPerFwhm;
        const double norm = 1.0 / (sigma * std::sqrt(2.0 * kPi));
        double acc = 0.0;
        const int panels = 16;
        for (int p = 0; p < panels; ++p) {
            const double a = -5.0 * sigma + 10.0 * sigma * p / panels;
            const double b = a + 10.0 * sigma / panels;
            acc += gl_integrate(
                [&](double u) {
                    return inner->density(delta - u) * std::exp(-0.5 * (u / sigma) * (u / sigma));
                },
                a, b);
        }
        return acc * norm;
    }

    double cdf(double delta) const override
    {
        if (kernel == BroadeningKernel::flat) {
            // Average of the inner CDF over the kernel window.
            return gl_integrate([&](double u) { return inner->cdf(u); },
                                delta - 0.5 * width, delta + 0.5 * width) / width;
        }
        const double sigma = width * kGaussSigmaPerFwhm;
        const double norm = 1.0 / (sigma * std::sqrt(2.0 * kPi));
        double acc = 0.0;
        const int panels = 16;
        for (int p = 0; p < panels; ++p) {
            const double a = -5.0 * sigma + 10.0 * sigma * p / panels;
            const double b = a + 10.0 * sigma / panels;
            acc += gl_integrate(
                [&](double u) {
                    return inner->cdf(delta - u) * std::exp(-0.5 * (u / sigma) * (u / sigma));
                },
                a, b);
        }
        return acc * norm;
    }

    double area() const override { return inner->area(); }
    double center() const override { return inner->center(); }
    LineKind kind() const override { return inner->kind(); }
    double fwhm_hint() const override { return -1.0; }
    bool broadened() const override { return true; }
    double pit_halfwidth() const override { return inner->pit_halfwidth(); }
    double broaden_width() const override { return width; }

    double support_halfwidth(double eps) const override
    {
        return inner->support_halfwidth(eps) + 0.75 * width;
    }
};

struct ShiftedImpl final : LineShape::Impl {
    std::shared_ptr<const LineShape::Impl> inner;
    double offset;

    ShiftedImpl(std::shared_ptr<const LineShape::Impl> in, double off)
      : inner(std::move(in)), offset(off) {}

    double density(double delta) const override { return inner->density(delta - offset); }
    double cdf(double delta) const override { return inner->cdf(delta - offset); }
    double area() const override { return inner->area(); }
    double center() const override { return inner->center() + offset; }
    LineKind kind() const override { return inner->kind(); }
    double fwhm_hint() const override { return inner->fwhm_hint(); }
    bool broadened() const override { return inner->broadened(); }
    double support_halfwidth(double eps) const override { return inner->support_halfwidth(eps); }
    double pit_halfwidth() const override { return inner->pit_halfwidth(); }
    double broaden_width() const override { return inner->broaden_width(); }
};

} // namespace

LineShape::LineShape()
  : impl_(std::make_shared<PrimitiveImpl>(LineKind::gaussian, 0.0, 1.0))
{
}

double LineShape::density(double delta) const { return impl_->density(delta); }
double LineShape::cdf(double delta) const { return impl_->cdf(delta); }
double LineShape::area() const { return impl_->area(); }
double LineShape::center() const { return impl_->center(); }
LineKind LineShape::kind() const { return impl_->kind(); }
bool LineShape::is_broadened() const { return impl_->broadened(); }

double LineShape::normalized_density(double delta) const
{
    return impl_->density(delta) / impl_->area();
}

double LineShape::fwhm() const
{
    const double hint = impl_->fwhm_hint();
    if (hint > 0.0)
        return hint;
    // Bisect for the first half-maximum crossing outward from the center.
    const double c = impl_->center();
    const double peak = impl_->density(c);
    if (peak <= 0.0)
        throw InvariantViolation("line shape: zero density at center");
    const double half = 0.5 * peak;
    const double limit = impl_->support_halfwidth(1e-12);
    double step = limit / 4096.0;
    double lo = 0.0;
    double hi = step;
    while (impl_->density(c + hi) > half) {
        lo = hi;
        hi += step;
        if (hi > limit)
            return 2.0 * limit;
    }
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (impl_->density(c + mid) > half ? lo : hi) = mid;
    }
    return lo + hi; // 2 * half-width
}

double LineShape::support_halfwidth(double eps) const
{
    return impl_->support_halfwidth(eps);
}

double LineShape::pit_halfwidth() const { return impl_->pit_halfwidth(); }
double LineShape::broaden_width() const { return impl_->broaden_width(); }

LineShape LineShape::shifted(double offset) const
{
    if (offset == 0.0)
        return *this;
    return LineShape(std::make_shared<ShiftedImpl>(impl_, offset));
}

LineShape build_line_shape(LineKind kind, double center, double fwhm)
{
    if (fwhm <= 0.0)
        throw InvalidParameter("build_line_shape: width must be positive");
    if (kind == LineKind::prepared_spike)
        throw InvalidParameter("build_line_shape: prepared_spike comes from prepare_spike()");
    return LineShape(std::make_shared<PrimitiveImpl>(kind, center, fwhm));
}

LineShape prepare_spike(const LineShape& line, double pit_width, double spike_width)
{
    if (spike_width <= 0.0 || pit_width <= 0.0)
        throw InvalidParameter("prepare_spike: widths must be positive");
    if (spike_width >= pit_width)
        throw InvalidParameter("prepare_spike: spike must be narrower than the pit");
    return LineShape(std::make_shared<PreparedImpl>(line.impl(), pit_width, spike_width));
}

void BroadeningControl::validate() const
{
    if (magnitude < 0.0)
        throw InvalidParameter("broadening: magnitude must be >= 0");
    if (transfer_efficiency < 0.0 || transfer_efficiency > 1.0)
        throw InvalidParameter("broadening: transfer efficiency must lie in [0,1]");
}

double SpectralMap::slice_center(double z, double length) const
{
    if (!longitudinal())
        return 0.0;
    return control.magnitude * (z - 0.5 * length);
}

double SpectralMap::slice_density(double z, double length, double delta) const
{
    if (!longitudinal())
        return effective.density(delta);
    return source.density(delta - slice_center(z, length));
}

SpectralMap apply_broadening(const LineShape& line, const BroadeningControl& ctrl)
{
    ctrl.validate();
    if (ctrl.mode == BroadeningMode::longitudinal || ctrl.magnitude == 0.0)
        return SpectralMap{line, line, ctrl};
    LineShape broadened(std::make_shared<BroadenedImpl>(line.impl(), ctrl.magnitude, ctrl.kernel));
    return SpectralMap{line, broadened, ctrl};
}

} // namespace echomem
