#pragma once

// Chordal and radial Loewner evolution.
//
// Trace generation composes elementary slit maps ("zipper"): each capacity
// step is replaced by the exact map of a straight slit.  Chordal steps default
// to tilted slits with the angle chosen from the driving increment; radial
// steps use a straight radial slit at the current driving angle (the angular
// increment is applied as a jump), realized through the half-plane chart as a
// fused Mobius / vertical-slit / Mobius block.
//
// Driving extraction is the inverse zipper: peel one polyline vertex per step.
// The default peeling family is the vertical slit (chordal) / radial slit
// (radial): W_k = Re zeta_k, dt_k = (Im zeta_k)^2/4 for the mapped vertex
// zeta_k.  Peeling with tilted slits is available behind a flag; it is the
// exact inverse of the tilted trace scheme on the same grid (any family is on
// its own output), so cross-family defaults keep roundtrip tests meaningful.
//
// Forward evaluation integrates the Loewner ODE with classical 4th-order
// steps whose size adapts to the distance from the driving singularity
// (|g - W| >= 10 sqrt(h) is maintained); a point is declared swallowed when
// |g - W| < 1e-9.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "loewner/mapchain.hpp"
#include "loewner/region.hpp"

namespace loewner {

struct DrivingFunction {
    enum class Kind { Chordal, Radial };
    Kind kind = Kind::Chordal;
    std::vector<double> t; // strictly increasing, t[0] = 0
    std::vector<double> w;

    std::size_t steps() const { return t.empty() ? 0 : t.size() - 1; }
    double horizon() const { return t.empty() ? 0.0 : t.back(); }

    void validate() const {
        if (t.size() < 2 || t.size() != w.size())
            throw std::invalid_argument("driving function needs at least 2 grid points");
        if (t.front() != 0.0) throw std::invalid_argument("driving grid must start at 0");
        for (std::size_t i = 1; i < t.size(); ++i)
            if (!(t[i] > t[i - 1]))
                throw std::invalid_argument("driving grid must be strictly increasing");
    }

    double value(double time) const {
        if (time <= t.front()) return w.front();
        if (time >= t.back()) return w.back();
        auto it = std::upper_bound(t.begin(), t.end(), time);
        std::size_t i = std::size_t(it - t.begin());
        double u = (time - t[i - 1]) / (t[i] - t[i - 1]);
        return w[i - 1] + u * (w[i] - w[i - 1]);
    }

    static DrivingFunction uniform(Kind kind, double T, std::size_t n,
                                   const std::function<double(double)>& f) {
        DrivingFunction d;
        d.kind = kind;
        d.t.resize(n + 1);
        d.w.resize(n + 1);
        for (std::size_t k = 0; k <= n; ++k) {
            d.t[k] = T * double(k) / double(n);
            d.w[k] = f(d.t[k]);
        }
        return d;
    }

    static DrivingFunction zero(Kind kind, double T, std::size_t n) {
        return uniform(kind, T, n, [](double) { return 0.0; });
    }
};

struct SwallowedError : std::runtime_error {
    double time;
    explicit SwallowedError(double t)
        : std::runtime_error("point swallowed by the hull at t=" + std::to_string(t)), time(t) {}
};

struct TraceResult {
    CurvePath curve;            // trace vertices gamma(t_k)
    std::vector<double> times;  // capacity timestamps, parallel to curve.pts
    MapChain chain;             // realizes g_{t_N} (slit domain -> canonical domain)
    double capacity = 0.0;

    MapChain weld() const { return chain.inverse(); } // canonical -> slit domain
};

enum class SlitFamily { Tilted, Vertical };

// ---------------------------------------------------------------------------
// adaptive ODE driver
// ---------------------------------------------------------------------------

namespace detail {

// Integrate y' = rhs(y, t) over [t0, t1] with classical 4th-order steps.  The
// step size keeps gap(y, t) >= 10 sqrt(h), so the scheme slows down smoothly
// as a point approaches the driving singularity; gap < 1e-9 throws.
template <typename State, typename Rhs, typename Gap>
void rk4_adaptive(double t0, double t1, const Rhs& rhs, const Gap& gap, State& y) {
    double t = t0;
    long guard = 0;
    while (t < t1) {
        double dist = gap(y, t);
        if (!(dist >= 1e-9)) throw SwallowedError(t);
        double h = t1 - t;
        double cap = 0.01 * dist * dist;
        if (h > cap) h = std::max(cap, (t1 - t0) * 1e-13);
        if (t + h > t1) h = t1 - t;
        if (++guard > 4000000L) throw std::runtime_error("Loewner ODE step guard tripped");
        State k1 = rhs(y, t);
        State k2 = rhs(y + (0.5 * h) * k1, t + 0.5 * h);
        State k3 = rhs(y + (0.5 * h) * k2, t + 0.5 * h);
        State k4 = rhs(y + h * k3, t + h);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// chordal trace
// ---------------------------------------------------------------------------

namespace detail {

// welding step for one (dw, dt) increment based at the previous driving value
inline MapStep chordal_weld_step(double w_prev, double dw, double dt, SlitFamily family) {
    if (family == SlitFamily::Tilted && dw != 0.0)
        return MapStep{TiltedSlit::from_increment(w_prev, dw, dt), false};
    // dw == 0 tilted slit is exactly vertical; use the cheaper primitive
    return MapStep{VSlit::from_capacity(w_prev + dw, dt), false};
}

// tip of the slit added by the step above, in the step's target coordinates
inline cplx chordal_step_tip(double w_prev, double dw, double dt, SlitFamily family) {
    if (family == SlitFamily::Tilted && dw != 0.0) {
        TiltedSlit s = TiltedSlit::from_increment(w_prev, dw, dt);
        return w_prev + s.tip_rel();
    }
    return cplx(w_prev + dw, 2.0 * std::sqrt(dt));
}

} // namespace detail

struct TraceOptions {
    SlitFamily family = SlitFamily::Tilted;
    int refine = 1; // internal subdivision of each driving cell
};

inline TraceResult chordal_trace(const DrivingFunction& driving, TraceOptions opt = {}) {
    driving.validate();
    if (driving.kind != DrivingFunction::Kind::Chordal)
        throw std::invalid_argument("chordal_trace needs a chordal driving function");
    if (opt.refine < 1) opt.refine = 1;
    std::size_t n = driving.steps();
    std::size_t m = n * std::size_t(opt.refine);

    // fine grid (piecewise-linear refinement of the driving)
    std::vector<double> ft(m + 1), fw(m + 1);
    for (std::size_t k = 0; k < n; ++k)
        for (int r = 0; r < opt.refine; ++r) {
            std::size_t i = k * opt.refine + r;
            double u = double(r) / opt.refine;
            ft[i] = driving.t[k] + u * (driving.t[k + 1] - driving.t[k]);
            fw[i] = driving.w[k] + u * (driving.w[k + 1] - driving.w[k]);
        }
    ft[m] = driving.t[n];
    fw[m] = driving.w[n];

    std::vector<MapStep> welds(m);
    for (std::size_t i = 0; i < m; ++i)
        welds[i] = detail::chordal_weld_step(fw[i], fw[i + 1] - fw[i], ft[i + 1] - ft[i],
                                             opt.family);

    TraceResult out;
    out.curve.chart = Chart::H;
    out.curve.pts.reserve(n + 1);
    out.times = driving.t;
    out.capacity = driving.horizon();
    out.curve.pts.push_back(cplx(driving.w.front(), 0.0));
    for (std::size_t k = 1; k <= n; ++k) {
        std::size_t i = k * std::size_t(opt.refine); // fine index of the emitted vertex
        cplx z = detail::chordal_step_tip(fw[i - 1], fw[i] - fw[i - 1], ft[i] - ft[i - 1],
                                          opt.family);
        for (std::size_t j = i - 1; j-- > 0;)
            z = MapChain::apply_step(welds[j], z);
        out.curve.pts.push_back(z);
    }
    out.curve.marked["x"] = out.curve.pts.front();

    MapChain weld;
    for (std::size_t i = m; i-- > 0;) weld.push(welds[i]);
    out.chain = weld.inverse();
    return out;
}

// ---------------------------------------------------------------------------
// chordal driving extraction (inverse zipper)
// ---------------------------------------------------------------------------

struct ExtractOptions {
    SlitFamily family = SlitFamily::Vertical;
    bool check_simple = true;
    double boundary_tol = 1e-9; // how far off R the first vertex may sit
};

inline DrivingFunction extract_driving(const CurvePath& curve, ExtractOptions opt = {}) {
    if (curve.chart != Chart::H)
        throw std::invalid_argument("driving extraction expects a curve in the H chart");
    const auto& pts = curve.pts;
    if (pts.size() < 2) throw std::invalid_argument("curve needs at least 2 vertices");
    if (std::abs(pts.front().imag()) > opt.boundary_tol)
        throw std::invalid_argument("curve must start on the real axis");
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (!(pts[i].imag() > 0.0))
            throw std::invalid_argument("curve must lie in the open upper half-plane");
    if (opt.check_simple && !polyline_is_simple(pts))
        throw std::invalid_argument("self-intersecting polyline");

    std::size_t n = pts.size() - 1;
    std::vector<cplx> tail(pts.begin() + 1, pts.end());
    DrivingFunction d;
    d.kind = DrivingFunction::Kind::Chordal;
    d.t.reserve(n + 1);
    d.w.reserve(n + 1);
    d.t.push_back(0.0);
    d.w.push_back(pts.front().real());

    for (std::size_t k = 0; k < n; ++k) {
        cplx zeta = tail[k];
        double w_prev = d.w.back();
        MapStep up;
        double dt, w_new;
        if (opt.family == SlitFamily::Vertical) {
            double x = zeta.real(), y = zeta.imag();
            dt = 0.25 * y * y;
            w_new = x;
            up = MapStep{VSlit{x, y * y}, true};
        } else {
            TiltedSlit s = TiltedSlit::from_tip(w_prev, zeta - w_prev);
            dt = s.hcap();
            w_new = w_prev + s.dw();
            up = MapStep{s, true};
        }
        if (!(dt > 0.0)) throw std::invalid_argument("degenerate vertex (zero capacity step)");
        d.t.push_back(d.t.back() + dt);
        d.w.push_back(w_new);
        for (std::size_t j = k + 1; j < n; ++j) {
            cplx z = MapChain::apply_step(up, tail[j]);
            if (!(z.imag() > 0.0))
                throw std::invalid_argument(
                    "vertex swallowed during extraction; curve grazes the boundary "
                    "at discretization scale");
            tail[j] = z;
        }
    }
    return d;
}

inline double halfplane_capacity(const CurvePath& curve, ExtractOptions opt = {}) {
    return extract_driving(curve, opt).horizon();
}

// ---------------------------------------------------------------------------
// chordal forward ODE
// ---------------------------------------------------------------------------

inline cplx chordal_forward(const DrivingFunction& driving, cplx z) {
    driving.validate();
    cplx g = z;
    auto rhs = [&driving](cplx y, double s) { return 2.0 / (y - driving.value(s)); };
    auto gap = [&driving](cplx y, double s) { return std::abs(y - driving.value(s)); };
    for (std::size_t k = 0; k + 1 < driving.t.size(); ++k)
        detail::rk4_adaptive(driving.t[k], driving.t[k + 1], rhs, gap, g);
    return g;
}

// Loewner flow of a real (boundary) point.  x0 equal to the initial driving
// value selects the prime-end solution pushed away from the tip on the given
// side, with exact leading behavior X = g - W = side*2 sqrt(t) - (2a/3) t +
// side*(a^2/18) t^{3/2} for driving slope a; the series seeds a tiny initial
// interval and the adaptive integrator takes over.
inline std::vector<double> force_point_track(const DrivingFunction& driving, double x0,
                                             int side = +1) {
    driving.validate();
    std::vector<double> v(driving.t.size());
    v[0] = x0;
    double x = x0;
    auto rhs = [&driving](double y, double s) { return 2.0 / (y - driving.value(s)); };
    auto gap = [&driving](double y, double s) { return std::abs(y - driving.value(s)); };
    double t_begin = 0.0;
    if (x0 == driving.w.front()) {
        double h = driving.t[1];
        double a = (driving.w[1] - driving.w[0]) / h;
        double ts = h * 9.5367431640625e-7; // 2^-20 of the first cell
        double X = side * 2.0 * std::sqrt(ts) - (2.0 / 3.0) * a * ts +
                   side * (a * a / 18.0) * std::pow(ts, 1.5);
        x = driving.value(ts) + X;
        t_begin = ts;
    }
    double s0 = x0 == driving.w.front() ? double(side)
                                        : (x0 > driving.w.front() ? 1.0 : -1.0);
    for (std::size_t k = 0; k + 1 < driving.t.size(); ++k) {
        double a = std::max(t_begin, driving.t[k]);
        detail::rk4_adaptive(a, driving.t[k + 1], rhs, gap, x);
        // a steep driving cell can step the integrator across the repelling
        // singularity; a side flip at a grid time means the hull ran over x
        if (s0 * (x - driving.w[k + 1]) <= 0.0) throw SwallowedError(driving.t[k + 1]);
        v[k + 1] = x;
    }
    return v;
}

// capacity read off the hydrodynamic expansion g(z) = z + 2t/z + ...
inline double capacity_from_expansion(const MapChain& g, double sample_height = 1e5) {
    cplx z(0.0, sample_height);
    return 0.5 * std::real((g(z) - z) * z);
}

// ---------------------------------------------------------------------------
// radial trace
// ---------------------------------------------------------------------------

namespace detail {

// Mobius D -> H with 1 -> 0, 0 -> i, -1 -> infinity:  c(z) = i(1-z)/(1+z)
inline Mobius disk_chart() { return Mobius{cplx(0, -1), cplx(0, 1), 1.0, 1.0}; }

// welding block for a radial slit at angle theta with capacity dt, derived by
// conjugating a vertical slit through the half-plane chart:
//   R_theta ∘ c^{-1} ∘ VSlit_down ∘ m^{-1} ∘ c ∘ R_{-theta}
// with v^2 = 1 - e^{-dt} and m^{-1} = scaling by sqrt(1-v^2).  Pushed as
// [Mobius][VSlit down][Mobius] so adjacent blocks fuse their Mobius halves.
inline void push_radial_weld(MapChain& chain, double theta, double dt) {
    double v2 = 1.0 - std::exp(-dt);
    Mobius c = disk_chart();
    Mobius pre = Mobius::rotation(-theta).after(c).after(Mobius::scaling(std::sqrt(1.0 - v2)));
    Mobius post = c.inverse().after(Mobius::rotation(theta));
    chain.push_mobius(pre);
    chain.push(MapStep{VSlit{0.0, v2}, false});
    chain.push_mobius(post);
}

// inner endpoint of the straight radial slit removed by one dt step
inline double radial_slit_radius(double dt) {
    double v = std::sqrt(1.0 - std::exp(-dt));
    return (1.0 - v) / (1.0 + v);
}

} // namespace detail

inline TraceResult radial_trace(const DrivingFunction& driving) {
    driving.validate();
    if (driving.kind != DrivingFunction::Kind::Radial)
        throw std::invalid_argument("radial_trace needs a radial driving function");
    std::size_t n = driving.steps();

    std::vector<MapChain> welds(n); // each step is its own 3-primitive block
    for (std::size_t k = 0; k < n; ++k)
        detail::push_radial_weld(welds[k], driving.w[k + 1],
                                 driving.t[k + 1] - driving.t[k]);

    TraceResult out;
    out.curve.chart = Chart::D;
    out.times = driving.t;
    out.capacity = driving.horizon();
    out.curve.pts.push_back(std::polar(1.0, driving.w.front()));
    for (std::size_t k = 1; k <= n; ++k) {
        double dt = driving.t[k] - driving.t[k - 1];
        cplx z = std::polar(detail::radial_slit_radius(dt), driving.w[k]);
        for (std::size_t j = k - 1; j-- > 0;) z = welds[j](z);
        out.curve.pts.push_back(z);
    }
    out.curve.marked["x"] = out.curve.pts.front();
    out.curve.marked["y"] = 0.0;

    MapChain weld;
    for (std::size_t k = n; k-- > 0;) weld.append(welds[k]);
    out.chain = weld.inverse();
    return out;
}

// inverse zipper in the disk: peel one vertex per step with a straight radial
// slit (exact on radial segments); driving angle = argument of the mapped
// vertex, lifted continuously
inline DrivingFunction extract_radial_driving(const CurvePath& curve,
                                              double boundary_tol = 1e-9) {
    if (curve.chart != Chart::D)
        throw std::invalid_argument("radial extraction expects a curve in the D chart");
    const auto& pts = curve.pts;
    if (pts.size() < 2) throw std::invalid_argument("curve needs at least 2 vertices");
    if (std::abs(std::abs(pts.front()) - 1.0) > boundary_tol)
        throw std::invalid_argument("curve must start on the unit circle");

    std::size_t n = pts.size() - 1;
    std::vector<cplx> tail(pts.begin() + 1, pts.end());
    DrivingFunction d;
    d.kind = DrivingFunction::Kind::Radial;
    d.t.push_back(0.0);
    d.w.push_back(std::arg(pts.front()));

    for (std::size_t k = 0; k < n; ++k) {
        cplx zeta = tail[k];
        double r = std::abs(zeta);
        if (!(r < 1.0) || r == 0.0)
            throw std::invalid_argument("curve must stay in the punctured open disk");
        double theta = std::arg(zeta);
        while (theta - d.w.back() > kPi) theta -= 2.0 * kPi;
        while (theta - d.w.back() < -kPi) theta += 2.0 * kPi;
        double v = (1.0 - r) / (1.0 + r);
        double dt = -std::log1p(-v * v);
        if (!(dt > 0.0)) throw std::invalid_argument("degenerate vertex (zero capacity step)");
        MapChain up;
        detail::push_radial_weld(up, theta, dt);
        up = up.inverse();
        d.t.push_back(d.t.back() + dt);
        d.w.push_back(theta);
        for (std::size_t j = k + 1; j < n; ++j) {
            cplx z = up(tail[j]);
            if (!(std::abs(z) < 1.0))
                throw std::invalid_argument(
                    "vertex swallowed during extraction; curve grazes the boundary "
                    "at discretization scale");
            tail[j] = z;
        }
    }
    return d;
}

// ---------------------------------------------------------------------------
// radial forward ODE
// ---------------------------------------------------------------------------

inline cplx radial_forward(const DrivingFunction& driving, cplx z) {
    driving.validate();
    cplx g = z;
    auto rhs = [&driving](cplx y, double s) {
        cplx w = std::polar(1.0, driving.value(s));
        return y * (w + y) / (w - y);
    };
    auto gap = [&driving](cplx y, double s) {
        return std::abs(y - std::polar(1.0, driving.value(s)));
    };
    for (std::size_t k = 0; k + 1 < driving.t.size(); ++k)
        detail::rk4_adaptive(driving.t[k], driving.t[k + 1], rhs, gap, g);
    return g;
}

// flow of a boundary point's angle, d/dt V = cot((V - U)/2), with the same
// sqrt start as the chordal force point when V(0) coincides with the driving
inline std::vector<double> radial_force_track(const DrivingFunction& driving, double v0,
                                              int side = +1) {
    driving.validate();
    std::vector<double> out(driving.t.size());
    out[0] = v0;
    double x = v0;
    auto rhs = [&driving](double y, double s) {
        return 1.0 / std::tan(0.5 * (y - driving.value(s)));
    };
    auto gap = [&driving](double y, double s) {
        return 2.0 * std::abs(std::sin(0.5 * (y - driving.value(s))));
    };
    double t_begin = 0.0;
    if (v0 == driving.w.front()) {
        double h = driving.t[1];
        double a = (driving.w[1] - driving.w[0]) / h;
        double ts = h * 9.5367431640625e-7;
        double X = side * 2.0 * std::sqrt(ts) - (2.0 / 3.0) * a * ts +
                   side * (a * a / 18.0) * std::pow(ts, 1.5);
        x = driving.value(ts) + X;
        t_begin = ts;
    }
    // lifted angular gap stays in one band between singularity sheets; leaving
    // it means a steep cell stepped the integrator across the driving
    double base = v0 == driving.w.front()
                      ? (side > 0 ? 0.0 : -2.0 * kPi)
                      : 2.0 * kPi * std::floor((v0 - driving.w.front()) / (2.0 * kPi));
    for (std::size_t k = 0; k + 1 < driving.t.size(); ++k) {
        double a = std::max(t_begin, driving.t[k]);
        detail::rk4_adaptive(a, driving.t[k + 1], rhs, gap, x);
        double band = x - driving.w[k + 1] - base;
        if (band <= 0.0 || band >= 2.0 * kPi) throw SwallowedError(driving.t[k + 1]);
        out[k + 1] = x;
    }
    return out;
}

} // namespace loewner
