#pragma once

// Energies, potentials, partition-function kernels, and the closed-form
// exponent tables of the Loewner-evolution variants (chordal, forced chordal,
// radial, forced radial, multichordal, multiradial).
//
// Quadrature policy: every 1/2 integral of a squared derivative is evaluated on
// the piecewise-linear interpolant (sum of increment^2 / step), which is exact
// for piecewise-linear drivers and refines without bias.  Forced energies
// subtract the cell *average* of the drift from the increment before squaring,
// so a driving that satisfies the discrete drift relation cell by cell has
// exactly zero energy.  Energies over infinite horizons are reported on the
// given grid with a truncation flag; nothing is extrapolated.
//
// Exponent tables carry each marked-point class twice: the weight-route values
// e_limit / e_kappa are derived from the conformal weight and the central
// charge, while the F_* coefficients are coded independently from the displayed
// correction functionals.  Their agreement (F = -e_kappa) is a test, not an
// assumption.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "loewner/loewner.hpp"
#include "loewner/loopsoup.hpp"

namespace loewner {

// ---------------------------------------------------------------------------
// exponent tables
// ---------------------------------------------------------------------------

// One marked-point class.  weight is the conformal weight b_kappa of the mark;
// e_limit = lim_{kappa->0} -2 weight / c(kappa); e_kappa = weight + (c/2) e_limit.
struct MarkExponents {
    double weight = 0.0;
    double e_limit = 0.0;
    double e_kappa = 0.0;
};

struct ExponentTable {
    double kappa = 0.0;
    std::optional<double> rho;
    std::optional<int> n;
    std::optional<double> mu;

    double b = 0.0;       // boundary weight (6-k)/(2k)
    double c = 0.0;       // central charge -(6-k)(8-3k)/(2k)
    double b_tilde = 0.0; // interior weight (6-k)(k-2)/(8k)

    // forced (rho) weights: b1 + b2 + b3 = alpha
    std::optional<double> b1, b2, b3, alpha, beta;
    // multiradial interior weight surplus (n^2-1-mu^2)/(2k)
    std::optional<double> b_tilde_n;

    // marked-point classes
    MarkExponents boundary;                            // weight b
    MarkExponents interior;                            // weight b_tilde
    std::optional<MarkExponents> forced_boundary;      // weight alpha
    std::optional<MarkExponents> forced_interior;      // weight beta
    std::optional<MarkExponents> multiradial_interior; // weight b_tilde + b_tilde_n

    // coefficients of log|f'| in the displayed correction functionals
    double F_boundary = 0.0; // -3(6-k)/16, every plain boundary mark
    double F_interior = 0.0; // -(6-k)/32, radial center
    std::optional<double> F_forced_boundary;
    std::optional<double> F_forced_interior;
    std::optional<double> F_multiradial_interior;
};

inline ExponentTable exponents(double kappa, std::optional<double> rho = {},
                               std::optional<int> n = {}, std::optional<double> mu = {}) {
    if (!(kappa > 0.0) || !(kappa <= 4.0))
        throw std::domain_error("kappa must lie in (0, 4]");
    if (rho && !(*rho > -2.0)) throw std::domain_error("rho must be > -2");
    if (n && *n < 1) throw std::domain_error("n must be a positive integer");

    ExponentTable t;
    t.kappa = kappa;
    t.rho = rho;
    t.n = n;
    t.mu = n ? std::optional<double>(mu.value_or(0.0)) : mu;

    const double k = kappa;
    t.b = (6.0 - k) / (2.0 * k);
    t.c = -(6.0 - k) * (8.0 - 3.0 * k) / (2.0 * k);
    t.b_tilde = (6.0 - k) * (k - 2.0) / (8.0 * k);

    auto mark = [&](double weight, double e_limit) {
        return MarkExponents{weight, e_limit, weight + 0.5 * t.c * e_limit};
    };
    t.boundary = mark(t.b, 0.25);
    t.interior = mark(t.b_tilde, -0.125);
    t.F_boundary = -3.0 * (6.0 - k) / 16.0;
    t.F_interior = -(6.0 - k) / 32.0;

    if (rho) {
        const double r = *rho;
        t.b1 = t.b;
        t.b2 = r * (r + 4.0 - k) / (4.0 * k);
        t.b3 = r / k;
        t.alpha = (r + 2.0) * (r + 6.0 - k) / (4.0 * k);
        t.beta = (r + k - 2.0) * (r + 6.0 - k) / (8.0 * k);
        t.forced_boundary = mark(*t.alpha, (r + 2.0) * (r + 6.0) / 48.0);
        t.forced_interior = mark(*t.beta, (r - 2.0) * (r + 6.0) / 96.0);
        t.F_forced_boundary =
            (r + 2.0) * (3.0 * r * k + 18.0 * k - 26.0 * r - 108.0) / 192.0;
        t.F_forced_interior =
            (3.0 * (r + 2.0) * (r + 2.0) * k -
             2.0 * (13.0 * r * r + 52.0 * r + 36.0)) / 384.0;
    }
    if (n) {
        const double m = t.mu.value_or(0.0);
        const double q = double(*n) * double(*n) - 1.0 - m * m;
        t.b_tilde_n = q / (2.0 * k);
        t.multiradial_interior = mark(t.b_tilde + *t.b_tilde_n, (q - 3.0) / 24.0);
        t.F_multiradial_interior = (3.0 * k - 26.0) * q / 96.0 - (6.0 - k) / 32.0;
    }
    return t;
}

enum class PotentialFamily {
    Chordal,
    MultiChordal,
    ForcedChordal,
    Radial,
    ForcedRadial,
    MultiRadial,
};

// log|f'| samples feeding the correction functional: one entry per boundary
// mark in display order, plus the interior mark where the family has one.
struct LogDerivatives {
    std::vector<double> boundary;
    double interior = 0.0;
};

inline double F_functional(PotentialFamily family, const ExponentTable& t,
                           const LogDerivatives& d) {
    auto need = [&](std::size_t m) {
        if (d.boundary.size() != m)
            throw std::invalid_argument("wrong number of boundary log-derivatives");
    };
    auto sum = [&] {
        double s = 0.0;
        for (double v : d.boundary) s += v;
        return s;
    };
    switch (family) {
        case PotentialFamily::Chordal:
            need(2);
            return t.F_boundary * sum();
        case PotentialFamily::MultiChordal:
            if (d.boundary.empty() || d.boundary.size() % 2 != 0)
                throw std::invalid_argument("multichordal marks come in pairs");
            return t.F_boundary * sum();
        case PotentialFamily::ForcedChordal:
            need(2);
            if (!t.F_forced_boundary)
                throw std::invalid_argument("table lacks rho");
            return *t.F_forced_boundary * sum();
        case PotentialFamily::Radial:
            need(1);
            return t.F_boundary * d.boundary[0] + t.F_interior * d.interior;
        case PotentialFamily::ForcedRadial:
            need(1);
            if (!t.F_forced_boundary || !t.F_forced_interior)
                throw std::invalid_argument("table lacks rho");
            return *t.F_forced_boundary * d.boundary[0] +
                   *t.F_forced_interior * d.interior;
        case PotentialFamily::MultiRadial:
            if (!t.F_multiradial_interior)
                throw std::invalid_argument("table lacks n");
            if (d.boundary.size() != std::size_t(*t.n))
                throw std::invalid_argument("wrong number of boundary log-derivatives");
            return t.F_boundary * sum() + *t.F_multiradial_interior * d.interior;
    }
    throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// marked configurations and kernels
// ---------------------------------------------------------------------------

inline cplx infinity_mark() {
    return cplx(std::numeric_limits<double>::infinity(), 0.0);
}
inline bool is_infinity_mark(cplx z) {
    return std::isinf(z.real()) || std::isinf(z.imag());
}

struct MarkedConfiguration {
    Chart chart = Chart::H;
    std::vector<cplx> boundary;    // marked boundary points, chord order
    std::optional<cplx> interior;  // radial / multiradial center
    std::vector<double> angles;    // explicit angle lifts for D-chart marks
    double kappa = 2.0;
    std::optional<double> rho;
    std::optional<double> mu;
    // forced variants: force-point coordinate (H chart) or angle (D chart);
    // defaults to the start of the driving, the singular choice
    std::optional<double> force_point;
    int force_side = +1;
};

// Poisson excursion kernel (the kappa = 2 normalization of the boundary
// two-point kernel).  The Mobius identity |m(x)-m(y)|^2 = |m'(x)m'(y)||x-y|^2
// makes the same formula valid in both canonical charts; the pair (x, inf)
// in H is normalized to 1 (only potential differences ever appear).
inline double poisson_excursion_kernel(cplx x, cplx y) {
    if (is_infinity_mark(x) || is_infinity_mark(y)) {
        if (is_infinity_mark(x) && is_infinity_mark(y))
            throw std::invalid_argument("coincident marked points");
        return 1.0;
    }
    double d = std::abs(y - x);
    if (!(d > 0.0)) throw std::invalid_argument("coincident marked points");
    return 1.0 / (d * d);
}

namespace detail {

inline std::vector<double> mark_angles(const MarkedConfiguration& c) {
    if (!c.angles.empty()) {
        if (c.angles.size() != c.boundary.size())
            throw std::invalid_argument("angles must match boundary marks");
        return c.angles;
    }
    std::vector<double> a(c.boundary.size());
    for (std::size_t j = 0; j < a.size(); ++j) a[j] = std::arg(c.boundary[j]);
    return a;
}

} // namespace detail

inline double kernel(const MarkedConfiguration& c) {
    ExponentTable t = exponents(c.kappa, c.rho, c.boundary.size() > 1 && c.chart == Chart::D
                                                    ? std::optional<int>(int(c.boundary.size()))
                                                    : std::nullopt,
                                c.mu);
    if (c.chart == Chart::H) {
        if (c.boundary.size() != 2)
            throw std::invalid_argument("half-plane kernel needs two boundary marks");
        cplx x = c.boundary[0], y = c.boundary[1];
        if (is_infinity_mark(x) || is_infinity_mark(y)) {
            if (is_infinity_mark(x) && is_infinity_mark(y))
                throw std::invalid_argument("coincident marked points");
            return 1.0;
        }
        double d = std::abs(y - x);
        if (!(d > 0.0)) throw std::invalid_argument("coincident marked points");
        double w = c.rho ? *t.alpha : t.b;
        return std::pow(d, -2.0 * w);
    }
    // disk chart: center must be the marked interior point
    if (c.interior && std::abs(*c.interior) > 1e-12)
        throw std::invalid_argument("disk kernel is normalized at center 0");
    for (cplx x : c.boundary)
        if (std::abs(std::abs(x) - 1.0) > 1e-9)
            throw std::invalid_argument("disk marks must lie on the unit circle");
    if (c.boundary.size() == 1) return 1.0;
    std::vector<double> th = detail::mark_angles(c);
    double mu = c.mu.value_or(0.0);
    double logv = 0.0;
    for (std::size_t j = 0; j < th.size(); ++j) {
        for (std::size_t l = j + 1; l < th.size(); ++l) {
            double s = std::abs(std::sin(0.5 * (th[j] - th[l])));
            if (!(s > 0.0)) throw std::invalid_argument("coincident marked points");
            logv += (2.0 / c.kappa) * std::log(s);
        }
        logv += (mu / c.kappa) * th[j];
    }
    return std::exp(logv);
}

// ---------------------------------------------------------------------------
// energies
// ---------------------------------------------------------------------------

namespace detail {

inline double pl_dirichlet(const DrivingFunction& d) {
    d.validate();
    double I = 0.0;
    for (std::size_t k = 0; k + 1 < d.t.size(); ++k) {
        double dt = d.t[k + 1] - d.t[k];
        double dw = d.w[k + 1] - d.w[k];
        I += 0.5 * dw * dw / dt;
    }
    return I;
}

// Minimal-energy cost of the first cell when the force point starts at the
// driving value.  Finite forced energy pins the initial behavior to
// W - W_0 ~ a sqrt(t) with the gap ~ xi sqrt(t), xi^2 + s a xi = 4; in the
// similarity variables the steering cost down to the endpoint slope
// a = (W_1-W_0)/sqrt(t_1) is 2 (a/2 + s rho/xi)^2, scale-free and vanishing
// exactly on the drift-relation solution.
inline double forced_first_cell(double a, double rho, int side) {
    double s = double(side);
    double xi = 0.5 * (-s * a + std::sqrt(a * a + 16.0));
    double c = 0.5 * a + s * rho / xi;
    return 2.0 * c * c;
}

// cell average of the forced drift: gap is linear across the cell, and the
// antiderivative of the kernel in the gap variable is supplied by the caller
template <typename Anti>
inline double drift_cell_average(double l0, double l1, double mid_value, Anti&& anti) {
    if (l0 == l1) return mid_value;
    return (anti(l1) - anti(l0)) / (l1 - l0);
}

} // namespace detail

inline double chordal_energy(const DrivingFunction& d) {
    if (d.kind != DrivingFunction::Kind::Chordal)
        throw std::invalid_argument("chordal_energy needs a chordal driving function");
    return detail::pl_dirichlet(d);
}

inline double radial_energy(const DrivingFunction& d) {
    if (d.kind != DrivingFunction::Kind::Radial)
        throw std::invalid_argument("radial_energy needs a radial driving function");
    return detail::pl_dirichlet(d);
}

// forced chordal energy; force is the trajectory of the force point on the
// same grid (force_point_track output or any caller-supplied track)
inline double rho_energy(const DrivingFunction& d, const std::vector<double>& force,
                         double rho) {
    d.validate();
    if (d.kind != DrivingFunction::Kind::Chordal)
        throw std::invalid_argument("rho_energy needs a chordal driving function");
    if (force.size() != d.t.size())
        throw std::invalid_argument("force track must match the driving grid");
    double I = 0.0;
    for (std::size_t k = 0; k + 1 < d.t.size(); ++k) {
        double dt = d.t[k + 1] - d.t[k];
        double dw = d.w[k + 1] - d.w[k];
        if (k == 0 && force[0] == d.w[0]) {
            double a = dw / std::sqrt(d.t[1]);
            int side = force[1] >= d.w[1] ? +1 : -1;
            I += detail::forced_first_cell(a, rho, side);
            continue;
        }
        double l0 = d.w[k] - force[k], l1 = d.w[k + 1] - force[k + 1];
        if (!(l0 * l1 > 0.0))
            throw std::domain_error("force track crosses the driving function");
        double J = detail::drift_cell_average(l0, l1, 1.0 / l0, [](double l) {
            return std::log(std::abs(l));
        });
        double r = dw - rho * J * dt;
        I += 0.5 * r * r / dt;
    }
    return I;
}

// forced radial energy; drift kernel (1/2) cot(gap / 2)
inline double radial_rho_energy(const DrivingFunction& d, const std::vector<double>& force,
                                double rho) {
    d.validate();
    if (d.kind != DrivingFunction::Kind::Radial)
        throw std::invalid_argument("radial_rho_energy needs a radial driving function");
    if (force.size() != d.t.size())
        throw std::invalid_argument("force track must match the driving grid");
    double I = 0.0;
    for (std::size_t k = 0; k + 1 < d.t.size(); ++k) {
        double dt = d.t[k + 1] - d.t[k];
        double dw = d.w[k + 1] - d.w[k];
        if (k == 0 && force[0] == d.w[0]) {
            double a = dw / std::sqrt(d.t[1]);
            int side = force[1] >= d.w[1] ? +1 : -1;
            I += detail::forced_first_cell(a, rho, side);
            continue;
        }
        double l0 = d.w[k] - force[k], l1 = d.w[k + 1] - force[k + 1];
        double s0 = std::sin(0.5 * l0), s1 = std::sin(0.5 * l1);
        if (!(s0 * s1 > 0.0) || std::abs(l1 - l0) >= kPi)
            throw std::domain_error("force track crosses the driving function");
        double J = detail::drift_cell_average(l0, l1, 0.5 / std::tan(0.5 * l0),
                                              [](double l) {
                                                  return std::log(std::abs(std::sin(0.5 * l)));
                                              });
        double r = dw - rho * J * dt;
        I += 0.5 * r * r / dt;
    }
    return I;
}

// ---------------------------------------------------------------------------
// potential reports
// ---------------------------------------------------------------------------

struct PotentialTerm {
    std::string name;
    double value = 0.0;
    double std_err = 0.0;
};

struct PotentialReport {
    std::vector<PotentialTerm> terms;
    double total = 0.0;
    double total_std_err = 0.0;
    bool truncated = true; // values are for the curve up to `horizon` only
    double horizon = 0.0;
    std::optional<Estimate> loop_mass; // Monte Carlo sub-result when one exists

    double term(const std::string& name) const {
        for (const auto& t : terms)
            if (t.name == name) return t.value;
        throw std::out_of_range("no potential term named " + name);
    }
};

namespace detail {

inline void finish_report(PotentialReport& r) {
    double tot = 0.0, var = 0.0;
    for (const auto& t : r.terms) {
        tot += t.value;
        var += t.std_err * t.std_err;
    }
    r.total = tot;
    r.total_std_err = std::sqrt(var);
}

// H automorphism sending x -> 0, y -> infinity (finite marks)
inline Mobius h_to_zero_inf(double x, double y) {
    double k = x > y ? 1.0 : -1.0;
    return Mobius{k, -k * x, 1.0, -y};
}

// map a curve to the H chart with marks at 0 and infinity, then unzip
inline DrivingFunction canonical_chordal_driving(const CurvePath& curve, cplx x, cplx y,
                                                 Chart chart) {
    if (curve.pts.size() < 2) throw std::invalid_argument("curve needs at least 2 vertices");
    if (std::abs(curve.pts.front() - x) > 1e-6)
        throw std::invalid_argument("curve must start at the first marked point");
    if (curve.chart != chart) throw std::invalid_argument("curve chart mismatch");
    if (chart == Chart::H && is_infinity_mark(y)) return extract_driving(curve);
    Mobius m;
    if (chart == Chart::D) {
        m = Mobius::disk_to_h(x, y);
    } else {
        if (is_infinity_mark(x)) throw std::invalid_argument("chord must start at a finite mark");
        m = h_to_zero_inf(x.real(), y.real());
    }
    CurvePath mapped;
    mapped.chart = Chart::H;
    mapped.pts.reserve(curve.pts.size());
    for (cplx z : curve.pts) mapped.pts.push_back(m.apply(z));
    // the mapped start sits at 0 up to roundoff; clamp it onto the axis
    mapped.pts.front() = cplx(mapped.pts.front().real(), 0.0);
    return extract_driving(mapped);
}

} // namespace detail

inline PotentialReport chordal_potential(const CurvePath& curve,
                                         const MarkedConfiguration& config) {
    if (config.boundary.size() != 2)
        throw std::invalid_argument("chordal potential needs two marked points");
    DrivingFunction d = detail::canonical_chordal_driving(curve, config.boundary[0],
                                                          config.boundary[1], config.chart);
    double I = chordal_energy(d);
    PotentialReport r;
    r.horizon = d.horizon();
    r.terms.push_back({"energy", std::isfinite(I)
                                     ? I / 12.0
                                     : std::numeric_limits<double>::infinity()});
    r.terms.push_back(
        {"kernel", -0.25 * std::log(poisson_excursion_kernel(config.boundary[0],
                                                             config.boundary[1]))});
    detail::finish_report(r);
    return r;
}

inline PotentialReport rho_potential(const DrivingFunction& driving,
                                     const MarkedConfiguration& config) {
    if (!config.rho) throw std::invalid_argument("rho_potential needs rho");
    double rho = *config.rho;
    if (!(rho > -2.0)) throw std::domain_error("rho must be > -2");
    double x0 = config.force_point.value_or(driving.w.front());
    std::vector<double> V = force_point_track(driving, x0, config.force_side);
    double I = rho_energy(driving, V, rho);
    PotentialReport r;
    r.horizon = driving.horizon();
    r.terms.push_back({"energy", I / 12.0});
    cplx x = config.boundary.size() == 2 ? config.boundary[0] : cplx(driving.w.front(), 0.0);
    cplx y = config.boundary.size() == 2 ? config.boundary[1] : infinity_mark();
    r.terms.push_back({"kernel", -(rho + 2.0) * (rho + 6.0) / 48.0 *
                                     std::log(poisson_excursion_kernel(x, y))});
    detail::finish_report(r);
    return r;
}

inline PotentialReport radial_potential(const CurvePath& curve,
                                        const MarkedConfiguration& /*config*/) {
    DrivingFunction d = extract_radial_driving(curve);
    PotentialReport r;
    r.horizon = d.horizon();
    r.terms.push_back({"energy", radial_energy(d) / 12.0});
    detail::finish_report(r);
    return r;
}

inline PotentialReport radial_rho_potential(const DrivingFunction& driving,
                                            const MarkedConfiguration& config) {
    if (!config.rho) throw std::invalid_argument("radial_rho_potential needs rho");
    double rho = *config.rho;
    if (!(rho > -2.0)) throw std::domain_error("rho must be > -2");
    double v0 = config.force_point.value_or(driving.w.front());
    std::vector<double> V = radial_force_track(driving, v0, config.force_side);
    double I = radial_rho_energy(driving, V, rho);
    PotentialReport r;
    r.horizon = driving.horizon();
    r.terms.push_back({"energy", I / 12.0});
    detail::finish_report(r);
    return r;
}

// ---------------------------------------------------------------------------
// multichordal potential
// ---------------------------------------------------------------------------

inline PotentialReport multichordal_potential(const std::vector<CurvePath>& curves,
                                              const MarkedConfiguration& config,
                                              const LoopParams& loop_params = {}) {
    std::size_t n = curves.size();
    if (n == 0) throw std::invalid_argument("no curves");
    if (config.boundary.size() != 2 * n)
        throw std::invalid_argument("multichordal potential needs marks (x_j, y_j) per chord");
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t l = j + 1; l < n; ++l)
            if (!(detail::dist_polyline_polyline(curves[j].pts, curves[l].pts) > 0.0))
                throw std::invalid_argument("chords intersect");

    PotentialReport r;
    double energy = 0.0, kern = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        MarkedConfiguration cj;
        cj.chart = config.chart;
        cj.boundary = {config.boundary[2 * j], config.boundary[2 * j + 1]};
        PotentialReport rj = chordal_potential(curves[j], cj);
        energy += rj.term("energy");
        kern += rj.term("kernel");
        r.horizon = std::max(r.horizon, rj.horizon);
    }
    r.terms.push_back({"energy", energy});
    r.terms.push_back({"kernel", kern});
    if (n == 1) {
        // a single chord is hit by no loop twice; the loop term is identically 0
        r.terms.push_back({"loop mass", 0.0, 0.0});
    } else {
        Estimate est = multi_cross_mass(curves, chart_domain_region(config.chart), loop_params);
        r.loop_mass = est;
        r.terms.push_back({"loop mass", est.mean, est.std_err});
    }
    detail::finish_report(r);
    return r;
}

// ---------------------------------------------------------------------------
// multiradial potential
// ---------------------------------------------------------------------------

// The arcs are grown as a round-robin staircase hugging the equal-fraction
// diagonal of multi-time.  That matters: each driving function is prescribed
// in its arc's own capacity parametrization, so widely different growth paths
// (one arc far ahead of the others) trace genuinely different configurations.
// The functional targets the simultaneous flow; interleave = 0 lets the
// staircase take one substep per arc per cycle.
struct MultiRadialOptions {
    int substeps = 200;             // minimum microsteps per arc
    std::vector<std::size_t> order; // leg visit order; empty = index order
    int interleave = 0;             // cycles of the order; 0 = one per substep
};

namespace detail {

inline double lift_angle(double raw, double reference) {
    while (raw - reference > kPi) raw -= 2.0 * kPi;
    while (raw - reference < -kPi) raw += 2.0 * kPi;
    return raw;
}

// Multi-arc radial zipper.  Each arc keeps its own welding chain (its
// single-arc uniformizer, capacity-parameterized by its own driving); the
// shared chain G uniformizes the union, built one peeled slit per microstep.
// The transition map of arc j is G composed with the inverse own chain; its
// covering derivative and Schwarzian at the growth angle feed the loop-term
// differential.  The own chain folds exactly at the growth angle, G opens a
// square root exactly at the peeled tip, and the circle near the growth angle
// is welded onto the slit bodies where the later blocks keep their branch
// cuts -- so boundary jets are read just inside the disk instead.  Every
// primitive preserves the circle, hence z C'/C and the Schwarzian expression
// reflect to conjugates across it and their real parts are even in the
// sampling depth: the boundary values are recovered to O(depth^2).
struct MultiRadialZipper {
    const std::vector<DrivingFunction>* arcs = nullptr;
    std::vector<MapChain> own_inv; // (g^(j))^{-1}: welds of arc j, newest first
    MapChain full;                 // G = g_tbar, uniformizer of the union
    std::vector<double> t_cur;     // own-capacity time per arc
    std::vector<double> theta;     // lifted angle of each tip in full coordinates
    double sigma = 0.0;            // log G'(0)
    double m = 0.0;                // accumulated loop term

    struct Covering {
        double dphi = 0.0;
        double schwarzian = 0.0;
    };

    explicit MultiRadialZipper(const std::vector<DrivingFunction>& a) : arcs(&a) {
        std::size_t n = a.size();
        own_inv.resize(n);
        t_cur.assign(n, 0.0);
        theta.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            a[j].validate();
            if (a[j].kind != DrivingFunction::Kind::Radial)
                throw std::invalid_argument("multiradial arcs must be radial drivings");
            theta[j] = a[j].w.front();
        }
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t l = j + 1; l < n; ++l)
                if (std::abs(std::remainder(theta[j] - theta[l], 2.0 * kPi)) < 1e-9)
                    throw std::invalid_argument("arcs start at coincident angles");
    }

    MapChain transition(std::size_t j) const {
        MapChain c = own_inv[j];
        c.append(full);
        return c;
    }

    Covering read_at(const MapChain& c, double u, double depth) const {
        cplx z = std::polar(1.0 - depth, u);
        Jet3 jet = c.jet(z);
        cplx A = z * jet.f1 / jet.f;
        cplx S = 0.5 - z * z * (c.schwarzian(z) +
                                jet.f1 * jet.f1 / (2.0 * jet.f * jet.f));
        if (!(std::abs(jet.f) < 1.0) || !(A.real() > 0.0) ||
            !std::isfinite(A.real()) || !std::isfinite(S.real()))
            throw std::runtime_error("arcs collided: covering derivative degenerate");
        return Covering{A.real(), S.real()};
    }

    // covering-map first derivative and Schwarzian of the transition map of
    // arc j at boundary angle u.  Read at two depths inside the disk and
    // Richardson-extrapolated: the real parts are even in the depth, so the
    // quadratic term cancels out of 2 F(s/sqrt(2)) - F(s).
    Covering covering_at(std::size_t j, double u, double depth) const {
        MapChain c = transition(j);
        Covering far = read_at(c, u, depth);
        Covering near = read_at(c, u, depth / std::sqrt(2.0));
        return Covering{2.0 * near.dphi - far.dphi,
                        2.0 * near.schwarzian - far.schwarzian};
    }

    // base sampling depth: deep enough to clear the roundoff amplification of
    // the near-cancelling chain factors, shallow enough to stay inside the
    // newest weld's fold scale sqrt(dt)
    static double sample_depth(double dt) {
        return std::clamp(0.5 * std::sqrt(dt), 1e-2, 2e-2);
    }

    double integrand(std::size_t j, double dt_scale) const {
        double u = (*arcs)[j].value(t_cur[j]);
        Covering c = covering_at(j, u, sample_depth(dt_scale));
        return -c.schwarzian / 3.0 + (1.0 - c.dphi) / 6.0;
    }

    // grow arc j by its own-capacity dt (one microstep)
    void grow(std::size_t j, double dt) {
        const DrivingFunction& d = (*arcs)[j];
        double u_new = d.value(t_cur[j] + dt);
        // the new piece's tip, mapped to full coordinates by the pre-step
        // transition map, then peeled as one straight slit
        cplx tip = std::polar(radial_slit_radius(dt), u_new);
        cplx T = transition(j)(tip);
        double rr = std::abs(T);
        if (!(rr > 0.0) || !(rr < 1.0))
            throw std::runtime_error("arcs collided: mapped tip left the disk");
        double v = (1.0 - rr) / (1.0 + rr);
        double dsigma = -std::log1p(-v * v);
        double th = lift_angle(std::arg(T), theta[j]);
        for (std::size_t k = 0; k < theta.size(); ++k)
            if (k != j && std::abs(std::remainder(theta[k] - th, 2.0 * kPi)) < 3.0 * v)
                throw std::runtime_error("arcs collided: slit reached another tip");
        // own chain: weld the straight slit at the new angle (newest applied first)
        MapChain blk;
        push_radial_weld(blk, u_new, dt);
        own_inv[j].steps.insert(own_inv[j].steps.begin(), blk.steps.begin(),
                                blk.steps.end());
        t_cur[j] += dt;
        MapChain up;
        push_radial_weld(up, th, dsigma);
        up = up.inverse();
        // other tips ride along the new uniformizing block
        for (std::size_t k = 0; k < theta.size(); ++k) {
            if (k == j) continue;
            cplx w = up(std::polar(1.0, theta[k]));
            theta[k] = lift_angle(std::arg(w), theta[k]);
        }
        theta[j] = th;
        full.append(up);
        sigma += dsigma;
    }
};

} // namespace detail

inline PotentialReport multiradial_potential(const std::vector<DrivingFunction>& arcs,
                                             const MarkedConfiguration& config,
                                             const MultiRadialOptions& opt = {}) {
    std::size_t n = arcs.size();
    if (n == 0) throw std::invalid_argument("no arcs");
    if (opt.substeps < 1 || opt.interleave < 0)
        throw std::invalid_argument("substeps must be positive");
    int interleave = opt.interleave > 0 ? opt.interleave : opt.substeps;
    std::vector<std::size_t> order = opt.order;
    if (order.empty())
        for (std::size_t j = 0; j < n; ++j) order.push_back(j);
    {
        std::vector<bool> seen(n, false);
        if (order.size() != n) throw std::invalid_argument("order must visit every arc once");
        for (std::size_t j : order) {
            if (j >= n || seen[j]) throw std::invalid_argument("order must visit every arc once");
            seen[j] = true;
        }
    }
    double mu = config.mu.value_or(0.0);

    detail::MultiRadialZipper zip(arcs);
    for (int cycle = 0; cycle < interleave; ++cycle) {
        for (std::size_t j : order) {
            double T = arcs[j].horizon();
            double a = T * double(cycle) / interleave;
            double b = T * double(cycle + 1) / interleave;
            double cap = T / double(opt.substeps);
            // leg micro grid: driving grid points inside (a, b), each cell
            // further split to the substep cap
            std::vector<double> nodes{a};
            for (double g : arcs[j].t)
                if (g > a + 1e-15 * T && g < b - 1e-15 * T) nodes.push_back(g);
            nodes.push_back(b);
            double L_prev = zip.integrand(j, std::min(cap, nodes[1] - nodes[0]));
            for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
                int pieces = std::max(1, int(std::ceil((nodes[i + 1] - nodes[i]) / cap)));
                double h = (nodes[i + 1] - nodes[i]) / pieces;
                for (int p = 0; p < pieces; ++p) {
                    zip.grow(j, h);
                    double L_new = zip.integrand(j, h);
                    zip.m += 0.5 * (L_prev + L_new) * h;
                    L_prev = L_new;
                }
            }
        }
    }

    PotentialReport r;
    r.horizon = 0.0;
    double energy = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        energy += radial_energy(arcs[j]) / 12.0;
        r.horizon = std::max(r.horizon, arcs[j].horizon());
    }
    double nn = double(n);
    double covering = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double Tj = arcs[j].horizon();
        double dphi = zip.covering_at(j, arcs[j].value(Tj),
                                      detail::MultiRadialZipper::sample_depth(
                                          Tj / opt.substeps))
                          .dphi;
        // log g'_{tbar,j}(0) = sigma - T_j by the capacity normalization
        covering += -0.25 * (std::log(dphi) - 0.5 * (zip.sigma - Tj));
    }
    double pair_term = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t l = j + 1; l < n; ++l) {
            double s = std::abs(std::sin(0.5 * (zip.theta[j] - zip.theta[l])));
            if (!(s > 0.0)) throw std::runtime_error("tips collided at the horizon");
            pair_term += -std::log(s) / 6.0;
        }
    double spiral = 0.0;
    for (double th : zip.theta) spiral += -mu / 12.0 * th;

    r.terms.push_back({"energy", energy});
    r.terms.push_back({"m", zip.m});
    r.terms.push_back(
        {"log g'(0)", -(nn * nn + 3.0 * nn - 4.0 - mu * mu) / 24.0 * zip.sigma});
    r.terms.push_back({"covering", covering});
    r.terms.push_back({"angles", pair_term});
    r.terms.push_back({"spiral", spiral});
    detail::finish_report(r);
    return r;
}

} // namespace loewner
